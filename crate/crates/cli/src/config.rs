use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use prgov::scenario::{find_scenario, GovernorConfig, Scenario};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GovernorName {
    Srg,
    RobustSrg,
    Prg,
    MultiN,
    DisturbancePrg,
    LambdaPrg,
    MultiInputPrg,
    DrgPrg,
    Cg,
}

/// Horizon list written as `0..25` (inclusive) or `0,5,25`.
pub fn parse_horizons(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|e| format!("bad range start '{a}': {e}"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|e| format!("bad range end '{b}': {e}"))?;
        if a > b {
            return Err(format!("empty horizon range {s}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad horizon '{p}': {e}"))).collect()
}

pub fn parse_lambdas(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad λ value '{p}': {e}"))).collect()
}

/// Settings shared by every subcommand. Read from an optional TOML document;
/// command-line flags override individual fields.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Registry name or path to a scenario JSON document.
    pub scenario: Option<String>,
    pub governor: Option<GovernorName>,
    pub n: Option<usize>,
    pub horizons: Option<Vec<usize>>,
    pub lambda: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    /// CG weight on the lifted command error.
    pub weight: Option<Vec<Vec<f64>>>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: RunConfig) -> RunConfig {
        RunConfig {
            scenario: over.scenario.or(self.scenario),
            governor: over.governor.or(self.governor),
            n: over.n.or(self.n),
            horizons: over.horizons.or(self.horizons),
            lambda: over.lambda.or(self.lambda),
            epsilon: over.epsilon.or(self.epsilon),
            weight: over.weight.or(self.weight),
            seed: over.seed.or(self.seed),
            repeats: over.repeats.or(self.repeats),
            out: over.out.or(self.out),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// The scenario with the ε override applied.
    pub fn scenario(&self) -> Result<Scenario> {
        let name = self.scenario.as_deref().unwrap_or("one_link");
        let path = Path::new(name);
        let mut sc = if path.is_file() {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
            Scenario::from_json(&text).with_context(|| format!("loading scenario {}", path.display()))?
        } else {
            find_scenario(name)?
        };
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                bail!("--epsilon must lie in (0, 1), got {eps}");
            }
            sc.epsilon = eps;
        }
        Ok(sc)
    }

    /// The selected governor with its parameters, or `None` when no governor
    /// was requested.
    pub fn governor(&self, sc: &Scenario) -> Result<Option<GovernorConfig>> {
        let Some(name) = self.governor else { return Ok(None) };
        let inputs = sc.model.b.first().map_or(0, Vec::len);
        let need_n = |what: &str| self.n.with_context(|| format!("governor {what} needs --n"));
        let per_channel = || -> Result<Vec<usize>> {
            match (&self.horizons, self.n) {
                (Some(h), _) => Ok(h.clone()),
                (None, Some(n)) => Ok(vec![n; inputs]),
                (None, None) => bail!("this governor needs --horizons or --n"),
            }
        };
        Ok(Some(match name {
            GovernorName::Srg => GovernorConfig::Srg,
            GovernorName::RobustSrg => GovernorConfig::RobustSrg,
            GovernorName::Prg => GovernorConfig::Prg { horizon: need_n("prg")? },
            GovernorName::DisturbancePrg => GovernorConfig::DisturbancePrg { horizon: need_n("disturbance-prg")? },
            GovernorName::Cg => GovernorConfig::Cg { horizon: need_n("cg")?, weight: self.weight.clone() },
            GovernorName::MultiN => GovernorConfig::MultiN {
                horizons: match (&self.horizons, self.n) {
                    (Some(h), _) => h.clone(),
                    (None, Some(n)) => (0..=n).collect(),
                    (None, None) => bail!("governor multi-n needs --horizons or --n"),
                },
            },
            GovernorName::LambdaPrg => {
                GovernorConfig::LambdaPrg { lambdas: self.lambda.clone().context("governor lambda-prg needs --lambda")? }
            }
            GovernorName::MultiInputPrg => GovernorConfig::MultiInputPrg { horizons: per_channel()? },
            GovernorName::DrgPrg => GovernorConfig::DrgPrg { horizons: per_channel()? },
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_syntax() {
        assert_eq!(parse_horizons("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_horizons("0,100").unwrap(), vec![0, 100]);
        assert!(parse_horizons("5..2").is_err());
        assert!(parse_horizons("a").is_err());
    }

    #[test]
    fn flags_override_the_document() {
        let doc: RunConfig = toml::from_str("scenario = \"two_link\"\ngovernor = \"srg\"\nseed = 4\n").unwrap();
        let flags = RunConfig { governor: Some(GovernorName::Prg), n: Some(3), ..Default::default() };
        let merged = doc.merge(flags);
        assert_eq!(merged.scenario.as_deref(), Some("two_link"));
        assert_eq!(merged.governor, Some(GovernorName::Prg));
        assert_eq!(merged.seed(), 4);
    }

    #[test]
    fn missing_parameters_are_reported() {
        let sc = find_scenario("one_link").unwrap();
        let cfg = RunConfig { governor: Some(GovernorName::Prg), ..Default::default() };
        assert!(cfg.governor(&sc).unwrap_err().to_string().contains("--n"));
        let cfg = RunConfig { governor: Some(GovernorName::MultiN), n: Some(2), ..Default::default() };
        assert_eq!(cfg.governor(&sc).unwrap(), Some(GovernorConfig::MultiN { horizons: vec![0, 1, 2] }));
    }
}
