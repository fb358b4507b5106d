mod config;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use prgov::governor::{Governor, GovernorKind};
use prgov::scenario::{
    build_drg_governor, canonical_scenarios, governor_set_key, run_scenario_with, run_timing_comparison_with, CacheStatus,
    GovernorConfig, RunOptions, Scenario, ScenarioResult, SetCache, TimingRow, CACHE_ENV,
};

use config::{parse_horizons, parse_lambdas, GovernorName, RunConfig};

#[derive(Parser)]
#[command(name = "prgov", version, about = "Preview reference governors: build admissible sets, run scenarios, time governors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load from the cache) the admissible set a governor needs.
    BuildSet(Common),
    /// Simulate a scenario and write CSV, summary and plot data.
    Run {
        #[command(flatten)]
        common: Common,
        /// Record per-step governor wall time (outputs are then not byte-stable).
        #[arg(long)]
        timing: bool,
    },
    /// Time governors on a scenario and write the timing table.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Fail unless mean latency orders SRG < PRG < Multi-N < CG.
        #[arg(long)]
        assert_ordering: bool,
    },
    /// Print the canonical scenario registry.
    ListScenarios,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML document with default settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registry name or path to a scenario JSON document.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_enum)]
    governor: Option<GovernorName>,
    /// Preview horizon.
    #[arg(long)]
    n: Option<usize>,
    /// Horizon list, `0..25` or `0,100`.
    #[arg(long)]
    horizons: Option<String>,
    /// Comma-separated λ vector.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.merge(RunConfig {
            scenario: self.scenario.clone(),
            governor: self.governor,
            n: self.n,
            horizons: self.horizons.as_deref().map(parse_horizons).transpose().map_err(anyhow::Error::msg)?,
            lambda: self.lambda.as_deref().map(parse_lambdas).transpose().map_err(anyhow::Error::msg)?,
            epsilon: self.epsilon,
            weight: None,
            seed: self.seed,
            repeats: self.repeats,
            out: self.out.clone(),
        }))
    }
}

/// `$PRG_CACHE_DIR`, else the user cache directory.
fn cache() -> SetCache {
    let from_env = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let fallback = || {
        std::env::var_os("XDG_CACHE_HOME")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")))
            .map(|d| d.join("prgov"))
    };
    SetCache::new(from_env.or_else(fallback))
}

fn governors(cfg: &RunConfig, sc: &Scenario) -> Result<Vec<GovernorConfig>> {
    Ok(match cfg.governor(sc)? {
        Some(g) => vec![g],
        None if sc.governors.is_empty() => bail!("scenario {} lists no governors; pass --governor", sc.name),
        None => sc.governors.clone(),
    })
}

fn cmd_build_set(common: &Common) -> Result<bool> {
    let cfg = common.resolve()?;
    let sc = cfg.scenario()?;
    let cache = cache();
    for gov in governors(&cfg, &sc)? {
        let Some(key) = governor_set_key(&sc, &gov)? else {
            let drg = match &gov {
                GovernorConfig::DrgPrg { horizons } => build_drg_governor(&sc, horizons)?,
                _ => unreachable!("only DRG-PRG lacks a single set"),
            };
            println!("{}: {} decoupled channels, per-channel sets built in memory", gov.label(), drg.horizons().len());
            continue;
        };
        let (set, status) = cache
            .get_or_build(&key)
            .with_context(|| format!("building the {} set for scenario {}", gov.label(), sc.name))?;
        let origin = match status {
            CacheStatus::Built => "built",
            CacheStatus::Memory | CacheStatus::Disk => "loaded from cache",
        };
        println!(
            "{}: {} set, N = {:?}, t* = {}, {} rows ({origin})",
            gov.label(),
            set.variant.as_str(),
            set.a_bar.horizons,
            set.t_star,
            set.n_rows()
        );
        if let Some(out) = &cfg.out {
            fs::create_dir_all(out)?;
            let path = out.join(format!("{}_{}.set.json", sc.name, gov.label()));
            fs::write(&path, set.to_json()?)?;
            info!("wrote {}", path.display());
        }
    }
    if let Some(dir) = cache.dir() {
        println!("cache: {}", dir.display());
    }
    Ok(true)
}

fn write_result(dir: &Path, sc: &Scenario, res: &ScenarioResult) -> Result<()> {
    let plot_dir = dir.join("plot");
    fs::create_dir_all(&plot_dir)?;
    fs::write(dir.join("trace.csv"), res.to_csv())?;
    fs::write(dir.join("summary.json"), res.summary_json()?)?;
    for (name, body) in res.plot_data() {
        fs::write(plot_dir.join(format!("{name}.csv")), body)?;
    }
    fs::write(plot_dir.join("plot.py"), plot::script(&format!("{} / {}", sc.name, res.summary.governor)))?;
    Ok(())
}

fn cmd_run(common: &Common, timing: bool) -> Result<bool> {
    let cfg = common.resolve()?;
    let sc = cfg.scenario()?;
    let govs = governors(&cfg, &sc)?;
    let cache = cache();
    let opts = RunOptions { seed: cfg.seed(), timing, ..Default::default() };
    // Independent runs go in parallel; files are written afterwards in order.
    let results: Vec<Result<ScenarioResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = govs
            .iter()
            .map(|g| {
                let (sc, opts, cache) = (&sc, &opts, &cache);
                s.spawn(move || run_scenario_with(sc, g, opts, cache).with_context(|| format!("running {}", g.label())))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario worker panicked")).collect()
    });
    let out = cfg.out_dir().join(&sc.name);
    let mut clean = true;
    for res in results {
        let res = res?;
        let s = &res.summary;
        write_result(&out.join(&s.governor), &sc, &res)?;
        println!(
            "{:<22} steps {:>4}  gap {:>10.3}  violations {}  max|y| {:?}",
            s.governor, s.steps, s.tracking_gap, s.violations, s.max_abs_y
        );
        clean &= s.violations == 0;
    }
    println!("results in {}", out.display());
    if !clean {
        eprintln!("constraint violations recorded");
    }
    Ok(clean)
}

fn timing_csv(rows: &[TimingRow]) -> String {
    let mut s = String::from("governor,kind,repeats,mean_ns,max_ns\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.governor, r.kind, r.repeats, r.mean_ns, r.max_ns));
    }
    s
}

/// Whether the present SRG, PRG, Multi-N and CG rows have strictly
/// increasing mean latency in that order.
fn ordering_holds(rows: &[TimingRow]) -> bool {
    let order = [GovernorKind::Srg, GovernorKind::Prg, GovernorKind::MultiN, GovernorKind::Cg];
    let means: Vec<f64> = order.iter().filter_map(|k| rows.iter().find(|r| r.kind == *k)).map(|r| r.mean_ns).collect();
    means.windows(2).all(|w| w[0] < w[1])
}

fn cmd_bench(common: &Common, assert_ordering: bool) -> Result<bool> {
    let cfg = common.resolve()?;
    let sc = cfg.scenario()?;
    let configs = match cfg.governor(&sc)? {
        Some(g) => vec![g],
        None => {
            let n = cfg.n.unwrap_or(25);
            vec![
                GovernorConfig::Srg,
                GovernorConfig::Prg { horizon: n },
                GovernorConfig::MultiN { horizons: cfg.horizons.clone().unwrap_or_else(|| (0..=n).collect()) },
                GovernorConfig::Cg { horizon: n, weight: cfg.weight.clone() },
            ]
        }
    };
    let repeats = cfg.repeats.unwrap_or(10);
    let rows = run_timing_comparison_with(&sc, &configs, repeats, cfg.seed(), &cache())?;
    for r in &rows {
        println!("{:<22} mean {:>12.0} ns  max {:>10} ns  ({} repeats)", r.governor, r.mean_ns, r.max_ns, r.repeats);
    }
    let out = cfg.out_dir().join(&sc.name);
    fs::create_dir_all(&out)?;
    fs::write(out.join("timing.csv"), timing_csv(&rows))?;
    fs::write(out.join("timing.json"), serde_json::to_string_pretty(&rows)?)?;
    if assert_ordering && !ordering_holds(&rows) {
        eprintln!("timing ordering SRG < PRG < Multi-N < CG does not hold");
        return Ok(false);
    }
    Ok(true)
}

fn cmd_list() -> Result<bool> {
    for sc in canonical_scenarios()? {
        let labels: Vec<String> = sc.governors.iter().map(GovernorConfig::label).collect();
        println!("{:<24} {:>4} steps  [{}]", sc.name, sc.steps, labels.join(", "));
        println!("    {}", sc.description);
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::BuildSet(c) => cmd_build_set(c),
        Command::Run { common, timing } => cmd_run(common, *timing),
        Command::Bench { common, assert_ordering } => cmd_bench(common, *assert_ordering),
        Command::ListScenarios => cmd_list(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
