use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use isrs_gn::gn_engine::{optimal_launch, snr_report_for, NliReport, QuadratureSpec};
use isrs_gn::scenario::{ChannelGrid, ScenarioConfig};
use isrs_gn::ssfm::{simulate_link, GainMode, ModulationKind, ModulationSpec, SimulationSpec};
use isrs_gn::Error;

use crate::output::{self, CompareRow, Manifest};
use crate::{LaunchArgs, ScenarioArgs};

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;
pub const EXIT_ALIASING: u8 = 4;

pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::NonConvergence(_)) => EXIT_NONCONVERGENCE,
        Some(Error::Aliasing(_)) => EXIT_ALIASING,
        Some(_) => EXIT_CONFIG,
        None => EXIT_IO,
    }
}

/// Scenario from file or the desk-scale preset, with overrides applied and
/// any network plan materialized.
fn resolve(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.scenario {
        Some(path) if !args.desk_scale => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        _ => ScenarioConfig::desk_scale(),
    };
    if let Some(seed) = args.seed {
        if seed != cfg.load.seed {
            cfg.load.seed = seed;
            cfg.plan = None;
        }
    }
    if let Some(spans) = &args.spans {
        if spans.is_empty() {
            return Err(Error::EmptyLink.into());
        }
        if spans.len() != cfg.spans.len() {
            cfg.plan = None;
        }
        cfg.spans = spans.clone();
    }
    if let Some(n) = args.channels {
        if n != cfg.grid.channel_count() {
            cfg.grid = ChannelGrid::new(n, cfg.grid.spacing_thz(), cfg.grid.symbol_rate_gbd())?;
            cfg.plan = None;
        }
    }
    Ok(cfg.with_plan()?)
}

fn quadrature(nodes: Option<usize>) -> Result<QuadratureSpec> {
    let mut q = QuadratureSpec::production();
    if let Some(n) = nodes {
        q.nodes = n;
    }
    q.validate()?;
    Ok(q)
}

fn model_report(cfg: &ScenarioConfig, quad: &QuadratureSpec) -> Result<NliReport> {
    let link = cfg.build_link()?;
    Ok(snr_report_for(&link, &cfg.reported_channels()?, quad)?)
}

fn finish(out: &Path, command: &str, seed: u64, config: serde_json::Value, summary: serde_json::Value) -> Result<()> {
    let manifest = Manifest::new(command, seed, config, out, summary)?;
    output::write_manifest(out, &manifest)
}

pub fn gn_run(args: &ScenarioArgs, quad_nodes: Option<usize>) -> Result<()> {
    let cfg = resolve(args)?;
    let quad = quadrature(quad_nodes)?;
    let report = model_report(&cfg, &quad)?;
    output::write_report(&args.out, &report, None)?;
    finish(
        &args.out,
        "gn-run",
        cfg.load.seed,
        json!({ "scenario": cfg, "quadrature": quad }),
        json!({ "rows": report.entries.len() }),
    )
}

pub struct SsfmOpts<'a> {
    pub scenario: &'a ScenarioArgs,
    pub quad_nodes: Option<usize>,
    pub modulation: ModulationKind,
    pub shaping_snr_db: f64,
    pub symbols: Option<usize>,
    pub realizations: Option<usize>,
    pub samples_per_symbol: Option<usize>,
    pub steps_per_span: Option<usize>,
    pub gain: GainMode,
}

impl SsfmOpts<'_> {
    fn simulation(&self, cfg: &ScenarioConfig) -> SimulationSpec {
        let d = SimulationSpec::desk();
        SimulationSpec {
            symbols_per_run: self.symbols.unwrap_or(d.symbols_per_run),
            realizations: self.realizations.unwrap_or(d.realizations),
            samples_per_symbol: self.samples_per_symbol.unwrap_or(d.samples_per_symbol),
            steps_per_span: self.steps_per_span.unwrap_or(d.steps_per_span),
            seed: self.scenario.seed.unwrap_or(cfg.load.seed),
            gain: self.gain,
        }
    }

    fn modulation(&self) -> ModulationSpec {
        ModulationSpec {
            kind: self.modulation,
            shaping_snr_db: self.shaping_snr_db,
        }
    }
}

fn simulate(cfg: &ScenarioConfig, sim: &SimulationSpec, modulation: &ModulationSpec) -> Result<NliReport> {
    let link = cfg.build_link()?;
    let plan = cfg.network_plan()?;
    Ok(simulate_link(&link, plan.as_ref(), &cfg.reported_channels()?, modulation, sim)?)
}

#[derive(Serialize)]
struct SsfmConfig<'a> {
    scenario: &'a ScenarioConfig,
    simulation: &'a SimulationSpec,
    modulation: &'a ModulationSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<&'a QuadratureSpec>,
}

pub fn ssfm_run(opts: &SsfmOpts<'_>) -> Result<()> {
    let cfg = resolve(opts.scenario)?;
    let sim = opts.simulation(&cfg);
    let modulation = opts.modulation();
    let report = simulate(&cfg, &sim, &modulation)?;
    let out = &opts.scenario.out;
    output::write_report(out, &report, Some("ssfm"))?;
    let config = SsfmConfig {
        scenario: &cfg,
        simulation: &sim,
        modulation: &modulation,
        quadrature: None,
    };
    finish(out, "ssfm-run", sim.seed, serde_json::to_value(&config)?, json!({ "rows": report.entries.len() }))
}

pub fn compare(opts: &SsfmOpts<'_>) -> Result<()> {
    let cfg = resolve(opts.scenario)?;
    let quad = quadrature(opts.quad_nodes)?;
    let sim = opts.simulation(&cfg);
    let modulation = opts.modulation();
    let model = model_report(&cfg, &quad)?;
    let ssfm = simulate(&cfg, &sim, &modulation)?;
    let dev: Vec<f64> = model
        .entries
        .iter()
        .zip(&ssfm.entries)
        .map(|(m, s)| s.snr_nli_db - m.snr_nli_db)
        .collect();
    let mean_abs = dev.iter().map(|d| d.abs()).sum::<f64>() / dev.len() as f64;
    let rows: Vec<CompareRow> = model
        .entries
        .iter()
        .zip(&ssfm.entries)
        .zip(&dev)
        .map(|((m, s), d)| CompareRow {
            channel_index: m.channel_index,
            f_thz: m.f_thz,
            power_dbm: m.power_dbm(),
            snr_model_db: m.snr_nli_db,
            snr_ssfm_db: s.snr_nli_db,
            deviation_db: *d,
            mean_abs_dev_db: mean_abs,
        })
        .collect();
    let out = &opts.scenario.out;
    output::write_rows(out, &rows)?;
    let config = SsfmConfig {
        scenario: &cfg,
        simulation: &sim,
        modulation: &modulation,
        quadrature: Some(&quad),
    };
    finish(
        out,
        "compare",
        sim.seed,
        serde_json::to_value(&config)?,
        json!({ "rows": rows.len(), "mean_abs_dev_db": mean_abs }),
    )
}

pub fn scenario_gen(args: &ScenarioArgs) -> Result<()> {
    let cfg = resolve(args)?;
    let text = cfg.to_json()?;
    fs::write(&args.out, text + "\n").with_context(|| format!("writing {}", args.out.display()))?;
    let spans = cfg.plan.as_ref().map_or(0, |p| p.span_count());
    finish(
        &args.out,
        "scenario-gen",
        cfg.load.seed,
        serde_json::to_value(&cfg)?,
        json!({ "plan_spans": spans }),
    )
}

pub fn launch_opt(args: &LaunchArgs) -> Result<()> {
    let cfg = resolve(&args.model.scenario)?;
    let quad = quadrature(args.model.quad_nodes)?;
    if !(args.step_db > 0.0 && args.max_dbm >= args.min_dbm) {
        return Err(Error::Config("power sweep needs step > 0 and max >= min".into()).into());
    }
    let count = ((args.max_dbm - args.min_dbm) / args.step_db + 1e-9).floor() as usize + 1;
    let powers: Vec<f64> = (0..count).map(|i| args.min_dbm + i as f64 * args.step_db).collect();
    let link = cfg.build_link()?;
    let channel = args.channel.unwrap_or(cfg.grid.channel_count() / 2);
    let sweep = optimal_launch(&link, args.nf_db, channel, &powers, &quad)?;
    let out = &args.model.scenario.out;
    output::write_sweep(out, &sweep)?;
    finish(
        out,
        "launch-opt",
        cfg.load.seed,
        json!({ "scenario": cfg, "quadrature": quad, "nf_db": args.nf_db, "channel": channel, "powers_dbm": powers }),
        json!({ "optimum_dbm": sweep.optimum_dbm }),
    )
}
