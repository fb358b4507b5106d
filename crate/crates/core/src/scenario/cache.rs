use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DisturbanceSpec, ModelDocument, PolytopeDocument};
use crate::error::{Error, Result};
use crate::mas::{
    build_disturbance_preview_mas, build_lifted_mas, build_mas, build_robust_srg_set, AdmissibleSet, PreviewAMatrix,
};
use crate::sysmod::lift_input_multi;

/// Environment variable naming the on-disk set cache directory.
pub const CACHE_ENV: &str = "PRG_CACHE_DIR";

/// Which admissible set to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Standard,
    Lifted { horizons: Vec<usize> },
    LambdaLifted { lambdas: Vec<Vec<f64>> },
    DisturbancePreview { horizon: usize, disturbance: DisturbanceSpec },
    RobustSrg { disturbance: DisturbanceSpec },
}

/// Everything a set depends on; its hash names the cache entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetKey {
    pub model: ModelDocument,
    pub constraints: PolytopeDocument,
    pub spec: SetSpec,
    pub epsilon: f64,
    pub t_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Built,
    Memory,
    Disk,
}

impl SetKey {
    pub fn digest(&self) -> String {
        let body = serde_json::to_vec(&(crate::mas::AdmissibleSetDocument::FORMAT_VERSION, self))
            .expect("set keys serialize");
        hex::encode(Sha256::digest(&body))
    }

    pub fn build(&self) -> Result<AdmissibleSet> {
        let model = self.model.to_model()?;
        let y = self.constraints.to_polytope(model.n_outputs())?;
        let (eps, t_max) = (self.epsilon, self.t_max);
        match &self.spec {
            SetSpec::Standard => build_mas(&model, &y, eps, t_max),
            SetSpec::Lifted { horizons } => {
                let lifted = lift_input_multi(&model, horizons)?;
                build_lifted_mas(&lifted, &PreviewAMatrix::delay_multi(horizons), &y, eps, t_max)
            }
            SetSpec::LambdaLifted { lambdas } => {
                let a_bar = PreviewAMatrix::lambda_multi(lambdas)?;
                let lifted = lift_input_multi(&model, &a_bar.horizons)?;
                build_lifted_mas(&lifted, &a_bar, &y, eps, t_max)
            }
            SetSpec::DisturbancePreview { horizon, disturbance } => {
                build_disturbance_preview_mas(&disturbance.to_model(&model)?, *horizon, &y, eps, t_max)
            }
            SetSpec::RobustSrg { disturbance } => build_robust_srg_set(&disturbance.to_model(&model)?, &y, eps, t_max),
        }
    }
}

/// In-process memo of built sets, backed by an optional directory of JSON
/// documents named by key digest.
#[derive(Debug, Default)]
pub struct SetCache {
    dir: Option<PathBuf>,
    memo: Mutex<HashMap<String, Arc<AdmissibleSet>>>,
}

impl SetCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        SetCache { dir, memo: Mutex::new(HashMap::new()) }
    }

    /// Cache directory from the environment.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    /// Process-wide cache configured from the environment on first use.
    pub fn global() -> &'static SetCache {
        static GLOBAL: OnceLock<SetCache> = OnceLock::new();
        GLOBAL.get_or_init(SetCache::from_env)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, key: &SetKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.json", key.digest())))
    }

    pub fn get_or_build(&self, key: &SetKey) -> Result<(Arc<AdmissibleSet>, CacheStatus)> {
        let digest = key.digest();
        if let Some(set) = self.memo.lock().expect("set memo poisoned").get(&digest) {
            return Ok((set.clone(), CacheStatus::Memory));
        }
        if let Some(path) = self.path_for(key) {
            if path.exists() {
                match std::fs::read_to_string(&path).map_err(Error::from).and_then(|s| AdmissibleSet::from_json(&s)) {
                    Ok(set) => {
                        debug!("loaded admissible set from {}", path.display());
                        let set = Arc::new(set);
                        self.memo.lock().expect("set memo poisoned").insert(digest, set.clone());
                        return Ok((set, CacheStatus::Disk));
                    }
                    Err(e) => warn!("ignoring unreadable cache entry {}: {e}", path.display()),
                }
            }
        }
        let set = Arc::new(key.build()?);
        info!("built {} set: {} rows, t* = {}", set.variant.as_str(), set.n_rows(), set.t_star);
        if let Some(path) = self.path_for(key) {
            std::fs::create_dir_all(path.parent().expect("cache path has a parent"))?;
            std::fs::write(&path, set.to_json()?)?;
        }
        self.memo.lock().expect("set memo poisoned").insert(digest, set.clone());
        Ok((set, CacheStatus::Built))
    }
}
