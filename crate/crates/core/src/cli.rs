//! Command-line front end: configuration loading, figure presets and
//! CSV/JSON result emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{AccessAntenna, Mode, PilotScheme, SimConfig};
use crate::engine::{alpha_grid, run_campaign_with, setup_drop, CampaignResult, Counters, RunOptions};
use crate::error::{Result, SimError};
use crate::stats::{ecdf, CdfPoint};

pub const CDF_FILE: &str = "cdf.csv";
pub const PERCENTILE_FILE: &str = "percentiles.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Named scenarios reproducing the reference figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Preset {
    #[value(name = "fig4_random_4")]
    Fig4Random4,
    #[value(name = "fig4_random_8")]
    Fig4Random8,
    #[value(name = "fig4_random_16")]
    Fig4Random16,
    #[value(name = "fig4_adhoc_d0_patch")]
    Fig4AdhocD0Patch,
    #[value(name = "fig4_adhoc_d0_yagi")]
    Fig4AdhocD0Yagi,
    #[value(name = "fig4_adhoc_d5_patch")]
    Fig4AdhocD5Patch,
    #[value(name = "fig4_adhoc_d5_yagi")]
    Fig4AdhocD5Yagi,
    #[value(name = "fig4_adhoc_d10_patch")]
    Fig4AdhocD10Patch,
    #[value(name = "fig4_adhoc_d10_yagi")]
    Fig4AdhocD10Yagi,
    Fig5Sweep,
    Fig6Compare,
}

impl Preset {
    pub const ALL: [Preset; 11] = [
        Preset::Fig4Random4,
        Preset::Fig4Random8,
        Preset::Fig4Random16,
        Preset::Fig4AdhocD0Patch,
        Preset::Fig4AdhocD0Yagi,
        Preset::Fig4AdhocD5Patch,
        Preset::Fig4AdhocD5Yagi,
        Preset::Fig4AdhocD10Patch,
        Preset::Fig4AdhocD10Yagi,
        Preset::Fig5Sweep,
        Preset::Fig6Compare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig4Random4 => "fig4_random_4",
            Preset::Fig4Random8 => "fig4_random_8",
            Preset::Fig4Random16 => "fig4_random_16",
            Preset::Fig4AdhocD0Patch => "fig4_adhoc_d0_patch",
            Preset::Fig4AdhocD0Yagi => "fig4_adhoc_d0_yagi",
            Preset::Fig4AdhocD5Patch => "fig4_adhoc_d5_patch",
            Preset::Fig4AdhocD5Yagi => "fig4_adhoc_d5_yagi",
            Preset::Fig4AdhocD10Patch => "fig4_adhoc_d10_patch",
            Preset::Fig4AdhocD10Yagi => "fig4_adhoc_d10_yagi",
            Preset::Fig5Sweep => "fig5_sweep",
            Preset::Fig6Compare => "fig6_compare",
        }
    }

    /// Expands the preset onto `base`, producing one config per scenario.
    pub fn expand(self, base: &SimConfig) -> Vec<Scenario> {
        let random = |n: usize| SimConfig {
            mode: Mode::SbhRandom,
            scs_per_sector: n,
            ..base.clone()
        };
        let adhoc = |d: f64, a: AccessAntenna| SimConfig {
            mode: Mode::SbhAdhoc,
            ue_sc_distance: d,
            sc_access_antenna: a,
            ..base.clone()
        };
        let da = |p: PilotScheme| SimConfig {
            mode: Mode::Da,
            pilot_scheme: p,
            alpha_grid: None,
            ..base.clone()
        };
        let sweep = || SimConfig {
            alpha_grid: Some(alpha_grid(0.0, 1.0, 0.05).expect("static grid")),
            ..adhoc(0.0, AccessAntenna::Yagi)
        };
        let one = |config: SimConfig| vec![Scenario::single(self.name(), config)];
        match self {
            Preset::Fig4Random4 => one(random(4)),
            Preset::Fig4Random8 => one(random(8)),
            Preset::Fig4Random16 => one(random(16)),
            Preset::Fig4AdhocD0Patch => one(adhoc(0.0, AccessAntenna::Patch)),
            Preset::Fig4AdhocD0Yagi => one(adhoc(0.0, AccessAntenna::Yagi)),
            Preset::Fig4AdhocD5Patch => one(adhoc(5.0, AccessAntenna::Patch)),
            Preset::Fig4AdhocD5Yagi => one(adhoc(5.0, AccessAntenna::Yagi)),
            Preset::Fig4AdhocD10Patch => one(adhoc(10.0, AccessAntenna::Patch)),
            Preset::Fig4AdhocD10Yagi => one(adhoc(10.0, AccessAntenna::Yagi)),
            Preset::Fig5Sweep => vec![
                Scenario::single("sbh_d0_yagi", sweep()),
                Scenario::single("da_r1", da(PilotScheme::R1)),
                Scenario::single("da_r3", da(PilotScheme::R3)),
            ],
            Preset::Fig6Compare => vec![
                Scenario::single("da_r1", da(PilotScheme::R1)),
                Scenario::single("da_r3", da(PilotScheme::R3)),
                Scenario {
                    name: "sbh".into(),
                    config: sweep(),
                    series: vec![Series::Fixed(0.5), Series::BestMedian],
                },
            ],
        }
    }
}

/// Which CDF curves a scenario contributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Series {
    /// The configured `alpha`.
    Configured,
    Fixed(f64),
    /// The grid point maximizing the median rate.
    BestMedian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub config: SimConfig,
    pub series: Vec<Series>,
}

impl Scenario {
    pub fn single(name: &str, config: SimConfig) -> Self {
        Self {
            name: name.into(),
            config,
            series: vec![Series::Configured],
        }
    }
}

/// Parses a configuration document and applies dotted `key=value` overrides.
/// TOML is the native format; `.json` files may hold a bare config or a run
/// manifest with a single run.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<SimConfig> {
    let base = match path {
        None => SimConfig::default(),
        Some(p) => parse_config_file(p)?,
    };
    apply_overrides(&base, overrides)
}

fn parse_config_file(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| SimError::config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let cfg = if is_json {
        config_from_json(&text).map_err(|e| SimError::config(format!("{}: {e}", path.display())))?
    } else {
        parse_toml(&text).map_err(|e| match e {
            SimError::Config(v) => SimError::Config(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
            other => other,
        })?
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses TOML text into a config. Errors carry line and column.
pub fn parse_toml(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::config(e.to_string().trim_end()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn config_from_json(text: &str) -> std::result::Result<SimConfig, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let inner = match value.get("runs").and_then(|r| r.as_array()) {
        Some(runs) if runs.len() == 1 => runs[0].get("config").cloned().ok_or("manifest run has no config")?,
        Some(runs) => return Err(format!("manifest holds {} runs; extract one config", runs.len())),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| e.to_string())
}

/// Applies `a.b.c=value` overrides. Values parse as TOML literals and fall
/// back to bare strings.
pub fn apply_overrides(base: &SimConfig, overrides: &[String]) -> Result<SimConfig> {
    if overrides.is_empty() {
        return Ok(base.clone());
    }
    let mut root = toml::Table::try_from(base).map_err(|e| SimError::Internal(e.to_string()))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| SimError::config(format!("override `{item}` is not key=value")))?;
        let value = parse_literal(raw.trim());
        let path: Vec<&str> = key.trim().split('.').collect();
        let (last, parents) = path.split_last().expect("split yields one item");
        let mut table = &mut root;
        for p in parents {
            table = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| SimError::config(format!("override `{key}`: `{p}` is not a table")))?;
        }
        table.insert(last.to_string(), value);
    }
    let cfg: SimConfig = root
        .try_into()
        .map_err(|e: toml::de::Error| SimError::config(format!("override: {}", e.to_string().trim_end())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    doc.parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Parses `start:stop:step`.
pub fn parse_alpha_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| SimError::config(format!("--sweep-alpha `{s}` is not start:stop:step")))?;
    match parts[..] {
        [a, b, st] => {
            let g = alpha_grid(a, b, st)?;
            if g.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(SimError::config(format!("--sweep-alpha `{s}` leaves [0, 1]")));
            }
            Ok(g)
        }
        _ => Err(SimError::config(format!("--sweep-alpha `{s}` is not start:stop:step"))),
    }
}

/// One completed scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub scenario: Scenario,
    pub result: CampaignResult,
    /// Median-maximizing partition, for scenarios with a grid.
    pub best_alpha_p50: Option<f64>,
    pub best_alpha_p5: Option<f64>,
}

impl ScenarioRun {
    pub fn new(scenario: Scenario, result: CampaignResult) -> Self {
        let (p5, p50) = match (&scenario.config.alpha_grid, result.is_self_backhaul()) {
            (Some(grid), true) => {
                let s = result.sweep(grid);
                (Some(s.best_alpha_p5), Some(s.best_alpha_p50))
            }
            _ => (None, None),
        };
        Self {
            scenario,
            result,
            best_alpha_p50: p50,
            best_alpha_p5: p5,
        }
    }

    /// `(series label, alpha)` pairs for the CDF file.
    pub fn cdf_series(&self) -> Vec<(String, f64)> {
        let cfg = &self.scenario.config;
        let sbh = self.result.is_self_backhaul();
        self.scenario
            .series
            .iter()
            .map(|s| match *s {
                Series::Configured => (self.scenario.name.clone(), cfg.alpha),
                Series::Fixed(a) => (format!("{}_alpha_{a}", self.scenario.name), a),
                Series::BestMedian => {
                    let a = self.best_alpha_p50.unwrap_or(cfg.alpha);
                    (format!("{}_alpha_opt", self.scenario.name), a)
                }
            })
            .map(|(name, a)| (name, if sbh { a } else { cfg.alpha }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub seed: u64,
    pub n_drops: u64,
    pub best_alpha_p5: Option<f64>,
    pub best_alpha_p50: Option<f64>,
    pub counters: Counters,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub runs: Vec<RunManifest>,
}

/// Files written for a set of runs.
#[derive(Debug, Clone)]
pub struct OutputBundle {
    pub cdf_csv: PathBuf,
    pub percentile_csv: PathBuf,
    pub manifest_json: PathBuf,
}

/// Formats the CDF file: one row per distinct rate of each series.
pub fn cdf_csv(runs: &[ScenarioRun]) -> String {
    let mut rows: Vec<(String, CdfPoint)> = Vec::new();
    for run in runs {
        for (label, alpha) in run.cdf_series() {
            rows.extend(ecdf(&run.result.rates_at(alpha)).into_iter().map(|p| (label.clone(), p)));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.value.total_cmp(&b.1.value)));
    let mut out = String::from("scenario,rate_bps,cdf\n");
    for (label, p) in rows {
        let _ = writeln!(out, "{label},{},{}", p.value, p.cdf);
    }
    out
}

/// Formats the percentile file: one row per scenario and partition.
pub fn percentile_csv(runs: &[ScenarioRun]) -> String {
    let mut rows = Vec::new();
    for run in runs {
        for (label, alpha) in run.cdf_series() {
            let mut r = run.result.percentile_row(alpha);
            r.alpha = alpha;
            rows.push((label, r));
        }
        if let Some(grid) = &run.scenario.config.alpha_grid {
            for &a in grid {
                rows.push((format!("{}_sweep", run.scenario.name), run.result.percentile_row(a)));
            }
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.alpha.total_cmp(&b.1.alpha)));
    rows.dedup_by(|a, b| a.0 == b.0 && a.1.alpha == b.1.alpha);
    let mut out = String::from("scenario,alpha,p5,p50,p95\n");
    for (label, r) in rows {
        let _ = writeln!(out, "{label},{},{},{},{}", r.alpha, r.p5, r.p50, r.p95);
    }
    out
}

pub fn manifest(runs: &[ScenarioRun]) -> Manifest {
    Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        runs: runs
            .iter()
            .map(|r| RunManifest {
                scenario: r.scenario.name.clone(),
                seed: r.scenario.config.seed,
                n_drops: r.scenario.config.n_drops,
                best_alpha_p5: r.best_alpha_p5,
                best_alpha_p50: r.best_alpha_p50,
                counters: r.result.counters,
                config: r.scenario.config.clone(),
            })
            .collect(),
    }
}

pub fn emit_results(runs: &[ScenarioRun], out_dir: &Path) -> Result<OutputBundle> {
    fs::create_dir_all(out_dir)?;
    let bundle = OutputBundle {
        cdf_csv: out_dir.join(CDF_FILE),
        percentile_csv: out_dir.join(PERCENTILE_FILE),
        manifest_json: out_dir.join(MANIFEST_FILE),
    };
    fs::write(&bundle.cdf_csv, cdf_csv(runs))?;
    fs::write(&bundle.percentile_csv, percentile_csv(runs))?;
    let json = serde_json::to_string_pretty(&manifest(runs)).map_err(|e| SimError::Internal(e.to_string()))?;
    fs::write(&bundle.manifest_json, json + "\n")?;
    Ok(bundle)
}

/// Summary table: p5 and p50 in Mbit/s per CDF series.
pub fn summary_table(runs: &[ScenarioRun]) -> String {
    let mut out = format!("{:<28} {:>6} {:>12} {:>12}\n", "scenario", "alpha", "p5 [Mb/s]", "p50 [Mb/s]");
    for run in runs {
        for (label, alpha) in run.cdf_series() {
            let r = run.result.percentile_row(alpha);
            let _ = writeln!(out, "{label:<28} {alpha:>6.2} {:>12.3} {:>12.3}", r.p5 / 1e6, r.p50 / 1e6);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    SbhRandom,
    SbhAdhoc,
    Da,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SbhRandom => Mode::SbhRandom,
            ModeArg::SbhAdhoc => Mode::SbhAdhoc,
            ModeArg::Da => Mode::Da,
        }
    }
}

/// Monte Carlo simulator for self-backhauled small cells and massive-MIMO direct access.
#[derive(Debug, Parser)]
#[command(name = "sbh-sim", version)]
pub struct Args {
    /// TOML configuration file (or a JSON config or single-run manifest).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Figure preset applied on top of the configuration.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo drops per scenario.
    #[arg(long)]
    pub drops: Option<u64>,
    /// Partition grid as start:stop:step.
    #[arg(long, value_name = "START:STOP:STEP")]
    pub sweep_alpha: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Dotted-path override, e.g. `radio.macro_tx_power_dbm=43`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads (defaults to SBH_WORKERS or all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write the layout and large-scale link tables of this drop.
    #[arg(long, value_name = "DROP")]
    pub dump_links: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    pub quiet: bool,
}

/// Resolves arguments into the scenarios to run.
pub fn resolve_scenarios(args: &Args) -> Result<Vec<Scenario>> {
    if args.config.is_none() && args.preset.is_none() {
        return Err(SimError::config("either --config or --preset is required"));
    }
    let mut base = load_config(args.config.as_deref(), &[])?;
    if let Some(s) = args.seed {
        base.seed = s;
    }
    if let Some(d) = args.drops {
        base.n_drops = d;
    }
    let mut scenarios = match args.preset {
        Some(p) => p.expand(&base),
        None => vec![Scenario::single(
            args.config
                .as_deref()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "custom".into())
                .as_str(),
            base,
        )],
    };
    if args.mode.is_some() && scenarios.len() > 1 {
        return Err(SimError::config("--mode cannot be combined with a multi-scenario preset"));
    }
    let grid = args.sweep_alpha.as_deref().map(parse_alpha_range).transpose()?;
    for s in &mut scenarios {
        if let Some(m) = args.mode {
            s.config.mode = m.into();
        }
        if let Some(g) = &grid {
            if s.config.mode.is_self_backhaul() {
                s.config.alpha_grid = Some(g.clone());
            }
        }
        s.config = apply_overrides(&s.config, &args.overrides)?;
    }
    Ok(scenarios)
}

pub fn run_scenarios(scenarios: Vec<Scenario>, opts: RunOptions) -> Result<Vec<ScenarioRun>> {
    scenarios
        .into_iter()
        .map(|s| {
            if opts.progress {
                eprintln!("scenario {} ({} drops)", s.name, s.config.n_drops);
            }
            let r = run_campaign_with(&s.config, opts)?;
            Ok(ScenarioRun::new(s, r))
        })
        .collect()
}

fn dump_links(scenarios: &[Scenario], drop: u64, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    for s in scenarios {
        let setup = setup_drop(&s.config, drop)?;
        let geometry = serde_json::to_string_pretty(&setup.geometry).map_err(|e| SimError::Internal(e.to_string()))?;
        fs::write(out.join(format!("{}_drop{drop}_layout.json", s.name)), geometry)?;
        for table in [&setup.macro_to_sc, &setup.macro_to_ue, &setup.sc_to_ue].into_iter().flatten() {
            let path = out.join(format!("{}_drop{drop}_{}.csv", s.name, table.link_type.name()));
            table.write_csv(fs::File::create(path)?)?;
        }
    }
    Ok(())
}

fn execute(args: &Args) -> Result<()> {
    let scenarios = resolve_scenarios(args)?;
    if let Some(d) = args.dump_links {
        dump_links(&scenarios, d, &args.out)?;
    }
    let opts = RunOptions {
        workers: args.workers,
        progress: !args.quiet,
    };
    let runs = run_scenarios(scenarios, opts)?;
    let bundle = emit_results(&runs, &args.out)?;
    print!("{}", summary_table(&runs));
    for r in &runs {
        if let (Some(a5), Some(a50)) = (r.best_alpha_p5, r.best_alpha_p50) {
            println!("{}: best alpha for p5 = {a5}, for p50 = {a50}", r.scenario.name);
        }
    }
    println!("wrote {}", bundle.cdf_csv.parent().unwrap_or(Path::new(".")).display());
    Ok(())
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on configuration errors, 2 on runtime errors.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&args) {
        Ok(()) => 0,
        Err(e) if e.is_config() => {
            eprintln!("error: {e}");
            if args.config.is_none() && args.preset.is_none() {
                eprintln!("\n{}", <Args as clap::CommandFactory>::command().render_usage());
                eprintln!("presets: {}", Preset::ALL.map(Preset::name).join(", "));
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
