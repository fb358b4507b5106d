use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DisturbanceStream, GovernorConfig, Scenario, SetCache, SetKey, SetSpec};
use crate::error::{Error, Result};
use crate::governor::{
    build_drg_parts, constant_reference, CommandGovernor, DisturbanceGovernor, DrgChannel, DrgGovernor, Governor,
    GovernorKind, MultiHorizonGovernor, PreviewGovernor, StepInput,
};
use crate::numerics::{matrix_from_rows, DenseMatrix, DenseVector};
use crate::polytope::Polytope;
use crate::sysmod::Decoupler;

/// Tolerance on constraint margins when counting violations.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Record per-step governor latency; otherwise the column is zero so
    /// outputs stay byte-deterministic.
    pub timing: bool,
    /// Check before every step that holding the previous plan is admissible.
    pub check_feasibility: bool,
    /// Override of the scenario's step count.
    pub steps: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 0, timing: false, check_feasibility: true, steps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub kappa: f64,
    pub kappas: Vec<f64>,
    pub selected: Option<usize>,
    pub step_time_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub format: String,
    pub version: u32,
    pub scenario: String,
    pub governor: String,
    pub kind: GovernorKind,
    pub seed: u64,
    pub steps: usize,
    pub max_abs_y: Vec<f64>,
    /// `Σ_t Σ_j |r_j − v_j|`.
    pub tracking_gap: f64,
    pub violations: usize,
    pub worst_margin: f64,
    pub feasibility_failures: usize,
    pub step_time_mean_ns: f64,
    pub step_time_max_ns: u64,
}

impl Summary {
    pub const FORMAT: &'static str = "prgov.scenario_summary";
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub records: Vec<StepRecord>,
    pub summary: Summary,
}

impl ScenarioResult {
    /// One row per step: `t, r_1.., v_1.., y_1.., kappa, step_time_ns`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let Some(first) = self.records.first() else {
            return "t,kappa,step_time_ns\n".into();
        };
        let mut header = vec!["t".to_string()];
        for (prefix, n) in [("r", first.r.len()), ("v", first.v.len()), ("y", first.y.len())] {
            header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
        }
        header.push("kappa".into());
        header.push("step_time_ns".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for rec in &self.records {
            let mut fields = vec![rec.t.to_string()];
            fields.extend(rec.r.iter().chain(&rec.v).chain(&rec.y).map(f64::to_string));
            fields.push(rec.kappa.to_string());
            fields.push(rec.step_time_ns.to_string());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }

    /// `Σ|r − v|` per step, summed over channels.
    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r.iter().zip(&r.v).map(|(a, b)| (a - b).abs()).sum()).collect()
    }

    /// Columns `t, y_j` / `t, r_j, v_j` for external plotting.
    pub fn plot_data(&self) -> Vec<(String, String)> {
        let mut files = Vec::new();
        let Some(first) = self.records.first() else { return files };
        for j in 0..first.y.len() {
            let mut s = String::from("t,y\n");
            for rec in &self.records {
                let _ = writeln!(s, "{},{}", rec.t, rec.y[j]);
            }
            files.push((format!("output_{}", j + 1), s));
        }
        for j in 0..first.r.len() {
            let mut s = String::from("t,r,v\n");
            for rec in &self.records {
                let _ = writeln!(s, "{},{},{}", rec.t, rec.r[j], rec.v[j]);
            }
            files.push((format!("command_{}", j + 1), s));
        }
        let mut s = String::from("t,kappa\n");
        for rec in &self.records {
            let _ = writeln!(s, "{},{}", rec.t, rec.kappa);
        }
        files.push(("kappa".into(), s));
        files
    }
}

fn set_key(sc: &Scenario, spec: SetSpec) -> SetKey {
    SetKey { model: sc.model.clone(), constraints: sc.constraints.clone(), spec, epsilon: sc.epsilon, t_max: sc.t_max }
}

/// Cache key of the admissible set a governor runs on. DRG-PRG builds one
/// set per channel from the decoupled plant and has no single key.
pub fn governor_set_key(sc: &Scenario, config: &GovernorConfig) -> Result<Option<SetKey>> {
    let m = sc.model.b.first().map_or(0, Vec::len);
    let disturbance = || {
        sc.disturbance
            .clone()
            .ok_or_else(|| Error::config(format!("governor {} needs a scenario with a disturbance model", config.label())))
    };
    let spec = match config {
        GovernorConfig::Srg => SetSpec::Standard,
        GovernorConfig::RobustSrg => SetSpec::RobustSrg { disturbance: disturbance()? },
        GovernorConfig::Prg { horizon } | GovernorConfig::Cg { horizon, .. } => SetSpec::Lifted { horizons: vec![*horizon; m] },
        GovernorConfig::MultiInputPrg { horizons } => SetSpec::Lifted { horizons: horizons.clone() },
        GovernorConfig::MultiN { horizons } => {
            let n_q = *horizons.last().ok_or_else(|| Error::config("Multi-N needs at least one horizon"))?;
            SetSpec::Lifted { horizons: vec![n_q] }
        }
        GovernorConfig::LambdaPrg { lambdas } => SetSpec::LambdaLifted { lambdas: vec![lambdas.clone(); m] },
        GovernorConfig::DisturbancePrg { horizon } => SetSpec::DisturbancePreview { horizon: *horizon, disturbance: disturbance()? },
        GovernorConfig::DrgPrg { .. } => return Ok(None),
    };
    Ok(Some(set_key(sc, spec)))
}

/// Splits an output box into one polytope per output channel.
fn per_output_limits(y: &Polytope) -> Result<Vec<Polytope>> {
    let p = y.dim();
    let mut rows: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); p];
    for i in 0..y.n_rows() {
        let nz: Vec<usize> = (0..p).filter(|&j| y.hmat[(i, j)] != 0.0).collect();
        match nz.as_slice() {
            [j] => {
                rows[*j].0.push(y.hmat[(i, *j)]);
                rows[*j].1.push(y.h[i]);
            }
            [] => {}
            _ => return Err(Error::config("DRG-PRG needs constraints that act on one output each")),
        }
    }
    rows.into_iter()
        .map(|(a, h)| Polytope::new(DenseMatrix::from_column_slice(a.len(), 1, &a), DenseVector::from_vec(h)))
        .collect()
}

type DrgParts = (Decoupler, Vec<DrgChannel>);

fn drg_parts(sc: &Scenario, horizons: &[usize]) -> Result<DrgParts> {
    static MEMO: OnceLock<Mutex<HashMap<String, DrgParts>>> = OnceLock::new();
    let memo = MEMO.get_or_init(Default::default);
    let body = serde_json::to_vec(&(&sc.model, &sc.constraints, horizons, sc.epsilon, sc.t_max))?;
    let digest = hex::encode(Sha256::digest(&body));
    if let Some(p) = memo.lock().expect("DRG memo poisoned").get(&digest) {
        return Ok(p.clone());
    }
    let limits = per_output_limits(&sc.constraint_set()?)?;
    let parts = build_drg_parts(&sc.model()?, horizons, &limits, sc.epsilon, sc.t_max)?;
    memo.lock().expect("DRG memo poisoned").insert(digest, parts.clone());
    Ok(parts)
}

/// DRG-PRG for a scenario, at rest with the first reference sample.
pub fn build_drg_governor(sc: &Scenario, horizons: &[usize]) -> Result<DrgGovernor> {
    let (decoupler, channels) = drg_parts(sc, horizons)?;
    DrgGovernor::new(decoupler, channels, sc.model()?.n_states(), &sc.trajectory.at(0))
}

/// Builds (or fetches from the cache) the sets a governor needs and
/// initializes it at rest with the scenario's first reference sample.
pub fn build_governor(
    sc: &Scenario,
    config: &GovernorConfig,
    cache: &SetCache,
    w0: Option<&DenseVector>,
) -> Result<Box<dyn Governor + Send>> {
    let model = sc.model()?;
    model.ensure_stable()?;
    let m = model.n_inputs();
    let x0 = DenseVector::zeros(model.n_states());
    let r0 = sc.trajectory.at(0);
    let lifted = |hs: &[usize]| -> Result<Arc<crate::mas::AdmissibleSet>> {
        Ok(cache.get_or_build(&set_key(sc, SetSpec::Lifted { horizons: hs.to_vec() }))?.0)
    };
    let disturbance = || {
        sc.disturbance
            .clone()
            .ok_or_else(|| Error::config(format!("governor {} needs a scenario with a disturbance model", config.label())))
    };
    Ok(match config {
        GovernorConfig::Srg => {
            let set = cache.get_or_build(&set_key(sc, SetSpec::Standard))?.0;
            Box::new(PreviewGovernor::new(set, &x0, &r0)?)
        }
        GovernorConfig::RobustSrg => {
            let set = cache.get_or_build(&set_key(sc, SetSpec::RobustSrg { disturbance: disturbance()? }))?.0;
            Box::new(PreviewGovernor::robust_srg(set, &x0, &r0)?)
        }
        GovernorConfig::Prg { horizon } => {
            let hs = vec![*horizon; m];
            Box::new(PreviewGovernor::new(lifted(&hs)?, &x0, &constant_reference(&r0, &hs))?)
        }
        GovernorConfig::MultiInputPrg { horizons } => {
            if horizons.len() != m {
                return Err(Error::config(format!("expected {m} channel horizons, got {}", horizons.len())));
            }
            Box::new(PreviewGovernor::new(lifted(horizons)?, &x0, &constant_reference(&r0, horizons))?)
        }
        GovernorConfig::MultiN { horizons } => {
            if m != 1 {
                return Err(Error::config("Multi-N PRG is single-input"));
            }
            let n_q = *horizons.last().ok_or_else(|| Error::config("Multi-N needs at least one horizon"))?;
            let set = lifted(&[n_q])?;
            Box::new(MultiHorizonGovernor::new(set, horizons, &x0, &constant_reference(&r0, &[n_q]))?)
        }
        GovernorConfig::LambdaPrg { lambdas } => {
            let spec = SetSpec::LambdaLifted { lambdas: vec![lambdas.clone(); m] };
            let set = cache.get_or_build(&set_key(sc, spec))?.0;
            let hs = vec![lambdas.len(); m];
            Box::new(PreviewGovernor::new(set, &x0, &constant_reference(&r0, &hs))?)
        }
        GovernorConfig::DisturbancePrg { horizon } => {
            let d = disturbance()?;
            let w_set = Polytope::from_box(&d.lo, &d.hi)?;
            let spec = SetSpec::DisturbancePreview { horizon: *horizon, disturbance: d };
            let set = cache.get_or_build(&set_key(sc, spec))?.0;
            let zero = DenseVector::zeros(set.n_disturbance_params());
            let w0 = w0.unwrap_or(&zero);
            Box::new(DisturbanceGovernor::new(set, w_set, &x0, &r0, w0)?)
        }
        GovernorConfig::DrgPrg { horizons } => Box::new(build_drg_governor(sc, horizons)?),
        GovernorConfig::Cg { horizon, weight } => {
            let hs = vec![*horizon; m];
            let weight = weight.as_ref().map(|w| matrix_from_rows(w)).transpose()?;
            Box::new(CommandGovernor::new(lifted(&hs)?, weight, &x0, &constant_reference(&r0, &hs))?)
        }
    })
}

fn round_time(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

/// Closed-loop run of a scenario with an initialized governor.
pub fn simulate(sc: &Scenario, config: &GovernorConfig, governor: &mut dyn Governor, opts: &RunOptions) -> Result<ScenarioResult> {
    let model = sc.model()?;
    let y_set = sc.constraint_set()?;
    let disturbed = sc.disturbed_model()?;
    let steps = opts.steps.unwrap_or(sc.steps);
    let horizons = governor.horizons();
    let nd = governor.disturbance_horizon();
    let stream: Vec<DenseVector> = match &sc.disturbance {
        Some(d) => DisturbanceStream::new(opts.seed, &d.lo, &d.hi).take(steps + nd.unwrap_or(0) + 1),
        None => Vec::new(),
    };
    let q = sc.disturbance.as_ref().map_or(0, |d| d.dim());
    let preview = |k: usize| -> Option<DenseVector> {
        nd.map(|n| DenseVector::from_iterator((n + 1) * q, (k..=k + n).flat_map(|i| stream[i].iter().copied())))
    };

    let mut x = DenseVector::zeros(model.n_states());
    let mut records = Vec::with_capacity(steps);
    let mut feasibility_failures = 0;
    let mut worst_margin = f64::INFINITY;
    let mut violations = 0;
    let mut max_abs_y = vec![0.0f64; model.n_outputs()];
    let mut gap = 0.0;
    let mut time_sum = 0u128;
    let mut time_max = 0u64;
    for k in 0..steps {
        let r_n = sc.trajectory.lifted(k, &horizons);
        let w_prev = preview(k);
        let mut input = StepInput::new(&x, &r_n);
        if let Some(w) = &w_prev {
            input = input.with_disturbance(w);
        }
        if opts.check_feasibility && k > 0 && !governor.hold_is_admissible(&input)? {
            feasibility_failures += 1;
        }
        let start = Instant::now();
        let out = governor.step(&input)?;
        let elapsed = if opts.timing { start.elapsed().as_nanos() as u64 } else { 0 };
        let (x_next, y) = match (&disturbed, stream.get(k)) {
            (Some(dm), Some(w)) => dm.step(&x, &out.v, w)?,
            _ => model.step(&x, &out.v)?,
        };
        let margin = y_set.contains(&y)?.margin.min();
        worst_margin = worst_margin.min(margin);
        if margin < -VIOLATION_TOL {
            violations += 1;
        }
        for (m, yi) in max_abs_y.iter_mut().zip(y.iter()) {
            *m = m.max(yi.abs());
        }
        let r_now = sc.trajectory.at(k);
        gap += r_now.iter().zip(out.v.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>();
        time_sum += elapsed as u128;
        time_max = time_max.max(elapsed);
        records.push(StepRecord {
            t: round_time(k as f64 * sc.trajectory.sample_time),
            r: r_now.iter().copied().collect(),
            v: out.v.iter().copied().collect(),
            y: y.iter().copied().collect(),
            x: x.iter().copied().collect(),
            kappa: out.kappa,
            kappas: out.kappas,
            selected: out.selected,
            step_time_ns: elapsed,
        });
        x = x_next;
    }
    let summary = Summary {
        format: Summary::FORMAT.into(),
        version: 1,
        scenario: sc.name.clone(),
        governor: config.label(),
        kind: governor.kind(),
        seed: opts.seed,
        steps,
        max_abs_y,
        tracking_gap: gap,
        violations,
        worst_margin,
        feasibility_failures,
        step_time_mean_ns: if steps == 0 { 0.0 } else { time_sum as f64 / steps as f64 },
        step_time_max_ns: time_max,
    };
    Ok(ScenarioResult { records, summary })
}

fn initial_preview(sc: &Scenario, config: &GovernorConfig, seed: u64) -> Option<DenseVector> {
    match (config, &sc.disturbance) {
        (GovernorConfig::DisturbancePrg { horizon }, Some(d)) => {
            let ws = DisturbanceStream::new(seed, &d.lo, &d.hi).take(horizon + 1);
            Some(DenseVector::from_iterator((horizon + 1) * d.dim(), ws.iter().flat_map(|w| w.iter().copied())))
        }
        _ => None,
    }
}

/// Builds the governor through the process-wide set cache and runs it.
pub fn run_scenario(sc: &Scenario, config: &GovernorConfig, opts: &RunOptions) -> Result<ScenarioResult> {
    run_scenario_with(sc, config, opts, SetCache::global())
}

pub fn run_scenario_with(sc: &Scenario, config: &GovernorConfig, opts: &RunOptions, cache: &SetCache) -> Result<ScenarioResult> {
    let w0 = initial_preview(sc, config, opts.seed);
    let mut gov = build_governor(sc, config, cache, w0.as_ref())?;
    simulate(sc, config, gov.as_mut(), opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub governor: String,
    pub kind: GovernorKind,
    pub repeats: usize,
    pub mean_ns: f64,
    pub max_ns: u64,
}

/// Per-step governor latency over `repeats` runs after one warm-up run.
/// Set construction happens before timing starts.
pub fn run_timing_comparison(sc: &Scenario, configs: &[GovernorConfig], repeats: usize, seed: u64) -> Result<Vec<TimingRow>> {
    run_timing_comparison_with(sc, configs, repeats, seed, SetCache::global())
}

pub fn run_timing_comparison_with(
    sc: &Scenario,
    configs: &[GovernorConfig],
    repeats: usize,
    seed: u64,
    cache: &SetCache,
) -> Result<Vec<TimingRow>> {
    let repeats = repeats.max(1);
    let opts = RunOptions { seed, timing: true, check_feasibility: false, steps: None };
    configs
        .iter()
        .map(|cfg| {
            run_scenario_with(sc, cfg, &opts, cache)?;
            let mut mean_sum = 0.0;
            let mut max = 0u64;
            let mut kind = cfg.kind();
            for _ in 0..repeats {
                let res = run_scenario_with(sc, cfg, &opts, cache)?;
                mean_sum += res.summary.step_time_mean_ns;
                max = max.max(res.summary.step_time_max_ns);
                kind = res.summary.kind;
            }
            Ok(TimingRow { governor: cfg.label(), kind, repeats, mean_ns: mean_sum / repeats as f64, max_ns: max })
        })
        .collect()
}
