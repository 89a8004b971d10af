//! Batch experiment front end: config-driven commands, seeded
//! reproducibility, run persistence, and report emission.
//!
//! Every command reads one JSON config, writes a run directory
//! (`manifest.json`, `trials/trial_<k>.json`, `summary.json`), prints a
//! one-line headline, and exits with:
//!
//! - `0` on success,
//! - `1` on a property violation (an outcome the theory rules out — treated
//!   as a bug signal),
//! - `2` on usage or config errors.
//!
//! Randomized commands expand one master seed into independent per-trial
//! streams (`trial k` uses stream `k` of a counter-based generator seeded
//! with the master seed), so any single trial replays in isolation and
//! identical (config, seed) pairs produce byte-identical trial and summary
//! payloads. Timestamps appear only in the manifest.

pub mod config;
pub mod reports;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use shadowlab::cellauto::lipschitz_constant;
use shadowlab::columnfact::{chain_report, estimate_sft_window, ColumnFactorizationSpec, IndexBox};
use shadowlab::io::{
    orbit_to_json, parse_rational, window_report_to_json, OrbitDto, WindowReportDto,
};
use shadowlab::lattice::{resolution_index, Exhaustion, Rational};
use shadowlab::shadowing::{
    counterexample_demo, delta_for_epsilon, exact_orbit, perturb_orbit, random_admissible_seed,
    run_trial, sized_seed_box, trial_rng, validate_pseudo_orbit, TrialConfig,
};
use shadowlab::shiftspace::RestrictionMode;

use crate::config::*;
use crate::reports::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Errors carrying their process exit class.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable/malformed config, or infeasible parameters.
    Usage(String),
    /// A theorem-contradicting outcome.
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Violation(_) => EXIT_VIOLATION,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Violation(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "shadowlab",
    version,
    about = "Exact shadowing experiments for commuting linear cellular automata"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Seeded trials of the full pipeline: generate, perturb, validate, solve, verify.
    ShadowDemo(CommonArgs),
    /// Exhaustive check that no constant configuration shadows the boundary family.
    Counterexample(CommonArgs),
    /// Estimate the SFT window of a generator family's column factorization.
    ColumnWindow(CommonArgs),
    /// Walk the restriction chain of a subshift over a dilating window.
    Chain(CommonArgs),
    /// Certified Lipschitz bound of one cellular automaton.
    Lipschitz(CommonArgs),
    /// Validate a pseudo-orbit truncation at a tolerance.
    ValidatePo(CommonArgs),
    /// Generate an exact, optionally perturbed, pseudo-orbit truncation.
    GenPo(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Path to this command's JSON config.
    #[arg(long)]
    pub config: PathBuf,
    /// Master RNG seed; one independent stream per trial derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of seeded trials (sampling commands only).
    #[arg(long)]
    pub trials: Option<u64>,
    /// Output directory (created if missing; defaults to ./shadowlab-run).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restriction mode: exact | patience:<j> (default patience:3).
    #[arg(long)]
    pub mode: Option<String>,
    /// Report format; only json is supported.
    #[arg(long, default_value = "json")]
    pub format: String,
}

/// What a command hands back to the shared writer.
struct RunPayload {
    trials_ran: u64,
    /// (file name within trials/, JSON value).
    trial_files: Vec<(String, serde_json::Value)>,
    summary: serde_json::Value,
    headline: String,
    violation: Option<String>,
}

pub fn execute(cli: Cli) -> i32 {
    let (name, args) = match &cli.command {
        Command::ShadowDemo(a) => ("shadow-demo", a),
        Command::Counterexample(a) => ("counterexample", a),
        Command::ColumnWindow(a) => ("column-window", a),
        Command::Chain(a) => ("chain", a),
        Command::Lipschitz(a) => ("lipschitz", a),
        Command::ValidatePo(a) => ("validate-po", a),
        Command::GenPo(a) => ("gen-po", a),
    };
    match run_command(name, args) {
        Ok(headline) => {
            println!("{headline}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}: {}", name, e.message());
            e.exit_code()
        }
    }
}

fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn parse_mode(s: Option<&str>) -> CliResult<(RestrictionMode, String)> {
    match s {
        None => Ok((RestrictionMode::Patience { j: 3 }, "patience:3".into())),
        Some("exact") => Ok((RestrictionMode::Exact, "exact".into())),
        Some(other) => {
            if let Some(raw) = other.strip_prefix("patience:") {
                let j: u32 = raw
                    .parse()
                    .map_err(|_| usage(format!("invalid patience value {raw:?} in --mode")))?;
                if j < 1 {
                    return Err(usage("patience must be >= 1"));
                }
                Ok((RestrictionMode::Patience { j }, other.to_string()))
            } else {
                Err(usage(format!(
                    "invalid mode {other:?}: expected 'exact' or 'patience:<j>'"
                )))
            }
        }
    }
}

fn parse_config<T: serde::de::DeserializeOwned>(text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| usage(format!("config error: {e}")))
}

fn run_command(name: &str, args: &CommonArgs) -> CliResult<String> {
    if args.format != "json" {
        return Err(usage(format!(
            "unsupported format {:?}; only 'json' is available",
            args.format
        )));
    }
    let config_text = fs::read_to_string(&args.config).map_err(|e| {
        usage(format!(
            "cannot read config {}: {e}",
            args.config.display()
        ))
    })?;
    let config_value: serde_json::Value =
        serde_json::from_str(&config_text).map_err(|e| usage(format!("config error: {e}")))?;
    let (mode, mode_label) = parse_mode(args.mode.as_deref())?;
    let started = now_ms();
    let payload = match name {
        "shadow-demo" => cmd_shadow_demo(&config_text, args)?,
        "counterexample" => cmd_counterexample(&config_text)?,
        "column-window" => cmd_column_window(&config_text, mode)?,
        "chain" => cmd_chain(&config_text, &mode)?,
        "lipschitz" => cmd_lipschitz(&config_text)?,
        "validate-po" => cmd_validate_po(&config_text)?,
        "gen-po" => cmd_gen_po(&config_text, args)?,
        other => return Err(usage(format!("unknown command {other:?}"))),
    };
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("shadowlab-run"));
    write_run(
        name,
        args,
        &out_dir,
        config_value,
        &mode_label,
        started,
        &payload,
    )?;
    match payload.violation {
        Some(v) => Err(CliError::Violation(v)),
        None => Ok(format!("{} ({})", payload.headline, out_dir.display())),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serialization is infallible");
    fs::write(path, text + "\n")
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn write_run(
    name: &str,
    args: &CommonArgs,
    out_dir: &Path,
    config_value: serde_json::Value,
    mode_label: &str,
    started: u64,
    payload: &RunPayload,
) -> CliResult<()> {
    let trials_dir = out_dir.join("trials");
    fs::create_dir_all(&trials_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", trials_dir.display())))?;
    let mut trial_files = Vec::with_capacity(payload.trial_files.len());
    for (file, value) in &payload.trial_files {
        write_json(&trials_dir.join(file), value)?;
        trial_files.push(format!("trials/{file}"));
    }
    write_json(&out_dir.join("summary.json"), &payload.summary)?;
    let manifest = Manifest {
        command: name.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_path: args.config.display().to_string(),
        config: config_value,
        seed: args.seed,
        trials: payload.trials_ran,
        mode: mode_label.to_string(),
        format: args.format.clone(),
        started_at_unix_ms: started,
        finished_at_unix_ms: now_ms(),
        trial_files,
        summary_file: "summary.json".to_string(),
    };
    write_json(
        &out_dir.join("manifest.json"),
        &serde_json::to_value(&manifest).expect("manifest serialization is infallible"),
    )
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_shadow_demo(config_text: &str, args: &CommonArgs) -> CliResult<RunPayload> {
    let cfg: ShadowDemoConfig = parse_config(config_text)?;
    let inst = cfg.instance.to_core().map_err(usage)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let trials = args.trials.or(cfg.trials).unwrap_or(50);
    let delta_override = match &cfg.delta_override {
        Some(s) => Some(parse_rational(s).map_err(usage)?),
        None => None,
    };
    let tc = TrialConfig {
        index_side: cfg.index_side,
        n_window: cfg.n_window,
        delta_override,
        flip_budget: cfg.flip_budget,
        seed_bumps: cfg.seed_bumps,
    };
    let reports: Vec<shadowlab::Result<_>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            run_trial(&inst, &tc, &mut rng)
        })
        .collect();
    let mut trial_files = Vec::with_capacity(reports.len());
    let mut successes = 0u64;
    let mut violation = None;
    for (k, rep) in reports.into_iter().enumerate() {
        let rep = rep.map_err(usage)?;
        if rep.success {
            successes += 1;
        } else if rep.validation.valid && violation.is_none() {
            violation = Some(format!(
                "trial {k}: validated pseudo-orbit produced no verified shadowing point"
            ));
        }
        let dto = TrialDto::from_report(k as u64, &rep);
        trial_files.push((
            format!("trial_{k}.json"),
            serde_json::to_value(&dto).expect("trial serialization is infallible"),
        ));
    }
    let fraction = if trials > 0 {
        Some(Rational::new(successes, trials).to_string())
    } else {
        None
    };
    let summary = json!({
        "command": "shadow-demo",
        "trials": trials,
        "successes": successes,
        "failures": trials - successes,
        "successFraction": fraction,
        "masterSeed": seed,
        "deltaMode": if cfg.delta_override.is_some() { "direct" } else { "derived" },
    });
    Ok(RunPayload {
        trials_ran: trials,
        trial_files,
        summary,
        headline: format!("shadow-demo: {successes}/{trials} trials produced verified certificates"),
        violation,
    })
}

fn cmd_counterexample(config_text: &str) -> CliResult<RunPayload> {
    let cfg: CounterexampleConfig = parse_config(config_text)?;
    let report = counterexample_demo(cfg.n, cfg.m, cfg.a).map_err(usage)?;
    let violation = if report.shadowing_point_exists {
        Some("a constant candidate shadows the family, contradicting the expected verdict".into())
    } else if !report.orbit_valid {
        Some("the boundary family failed its own pseudo-orbit check".into())
    } else {
        None
    };
    let dto = CounterexampleDto::from_core(&report);
    let summary = json!({
        "command": "counterexample",
        "n": cfg.n,
        "m": cfg.m,
        "a": cfg.a,
        "orbitValid": report.orbit_valid,
        "shadowingPointExists": report.shadowing_point_exists,
        "candidatesChecked": report.candidates.len(),
    });
    Ok(RunPayload {
        trials_ran: 1,
        trial_files: vec![(
            "trial_0.json".into(),
            serde_json::to_value(&dto).expect("report serialization is infallible"),
        )],
        summary,
        headline: format!(
            "counterexample: all {} constant candidates fail to 1/2-shadow (n={}, m={})",
            cfg.a, cfg.n, cfg.m
        ),
        violation,
    })
}

fn cmd_column_window(config_text: &str, mode: RestrictionMode) -> CliResult<RunPayload> {
    let cfg: ColumnWindowConfig = parse_config(config_text)?;
    let sig = cfg.subshift.to_core().map_err(usage)?;
    let alphabet = *sig.alphabet();
    let mut generators = Vec::with_capacity(cfg.generators.len());
    for g in &cfg.generators {
        generators.push(g.to_core(alphabet).map_err(usage)?);
    }
    let window = sites_arg(&cfg.window, "window")?;
    let spec = ColumnFactorizationSpec::new(sig, window, generators).map_err(usage)?;
    let est = estimate_sft_window(&spec, cfg.budget, mode, cfg.test_depth).map_err(usage)?;
    let dto = WindowReportDto::from_core(&est);
    let summary = json!({
        "command": "column-window",
        "N": est.window,
        "certified": est.certified,
        "budget": cfg.budget,
        "dims": est.dims,
    });
    let headline = match est.window {
        Some(n) => format!(
            "column-window: N = {n} ({})",
            if est.certified { "certified" } else { "heuristic" }
        ),
        None => format!("column-window: no window within budget {}", cfg.budget),
    };
    // Keep the canonical serialization path exercised.
    let _ = window_report_to_json(&est);
    Ok(RunPayload {
        trials_ran: 1,
        trial_files: vec![(
            "trial_0.json".into(),
            serde_json::to_value(&dto).expect("report serialization is infallible"),
        )],
        summary,
        headline,
        violation: None,
    })
}

fn cmd_chain(config_text: &str, mode: &RestrictionMode) -> CliResult<RunPayload> {
    let cfg: ChainConfig = parse_config(config_text)?;
    let sig = cfg.subshift.to_core().map_err(usage)?;
    let e = sites_arg(&cfg.window, "window")?;
    let j = match mode {
        RestrictionMode::Patience { j } => *j,
        RestrictionMode::Exact => {
            return Err(usage(
                "the chain command walks a patience chain; use --mode patience:<j>",
            ))
        }
    };
    let report = chain_report(&sig, &e, j, cfg.max_steps).map_err(usage)?;
    let dto = ChainDto::from_core(&report);
    let summary = json!({
        "command": "chain",
        "steps": report.dims.len(),
        "stabilized": report.stabilized,
        "stabilizationIndex": report.stabilization_index,
        "strictDrops": report.strict_drops,
    });
    Ok(RunPayload {
        trials_ran: 1,
        trial_files: vec![(
            "trial_0.json".into(),
            serde_json::to_value(&dto).expect("report serialization is infallible"),
        )],
        summary,
        headline: format!(
            "chain: {} steps, {} strict drops, stabilized = {}",
            report.dims.len(),
            report.strict_drops,
            report.stabilized
        ),
        violation: None,
    })
}

fn cmd_lipschitz(config_text: &str) -> CliResult<RunPayload> {
    let cfg: LipschitzConfig = parse_config(config_text)?;
    let alphabet = cfg.alphabet.to_core().map_err(usage)?;
    let t = cfg.ca.to_core(alphabet).map_err(usage)?;
    let e = match &cfg.exhaustion {
        Some(dto) => dto.to_core().map_err(usage)?,
        None => Exhaustion::dyadic(t.dims()).map_err(usage)?,
    };
    let bound = lipschitz_constant(&t, &e).map_err(usage)?;
    let dto = LipschitzDto::from_core(&bound);
    let summary = json!({
        "command": "lipschitz",
        "constant": bound.constant,
        "stabilityLevel": bound.stability_level,
        "certified": bound.certified,
    });
    Ok(RunPayload {
        trials_ran: 1,
        trial_files: vec![(
            "trial_0.json".into(),
            serde_json::to_value(&dto).expect("report serialization is infallible"),
        )],
        summary,
        headline: format!(
            "lipschitz: C = {} = 2^{}",
            bound.constant, bound.stability_level
        ),
        violation: None,
    })
}

fn cmd_validate_po(config_text: &str) -> CliResult<RunPayload> {
    let cfg: ValidatePoConfig = parse_config(config_text)?;
    let inst = cfg.instance.to_core().map_err(usage)?;
    let po = cfg.orbit.to_core().map_err(usage)?;
    let delta = match &cfg.delta {
        Some(s) => parse_rational(s).map_err(usage)?,
        None => po.declared_delta(),
    };
    let report = validate_pseudo_orbit(&po, &inst, &delta).map_err(usage)?;
    let dto = ValidationDto::from_core(&report);
    let summary = json!({
        "command": "validate-po",
        "valid": report.valid,
        "delta": delta.to_string(),
        "resolutionLevel": report.resolution_level,
        "pairsChecked": report.pairs_checked,
    });
    Ok(RunPayload {
        trials_ran: 1,
        trial_files: vec![(
            "trial_0.json".into(),
            serde_json::to_value(&dto).expect("report serialization is infallible"),
        )],
        summary,
        headline: format!(
            "validate-po: {} at delta {}",
            if report.valid { "valid" } else { "invalid" },
            delta
        ),
        violation: None,
    })
}

fn cmd_gen_po(config_text: &str, args: &CommonArgs) -> CliResult<RunPayload> {
    let cfg: GenPoConfig = parse_config(config_text)?;
    let inst = cfg.instance.to_core().map_err(usage)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let params = delta_for_epsilon(&inst, cfg.n_window).map_err(usage)?;
    let delta = match &cfg.delta {
        Some(s) => parse_rational(s).map_err(usage)?,
        None => params.delta,
    };
    let delta_level = resolution_index(&delta).map_err(usage)?;
    let f = IndexBox::new(inst.s(), cfg.index_side).map_err(usage)?;
    let level = delta_level.max(params.resolution_level);
    let seed_box = sized_seed_box(&inst, f, level).map_err(usage)?;
    let mut rng = trial_rng(seed, 0);
    let seed_pattern =
        random_admissible_seed(inst.sig(), &seed_box, cfg.seed_bumps, &mut rng).map_err(usage)?;
    let orbit = exact_orbit(&seed_pattern, &inst, f).map_err(usage)?;
    let out = perturb_orbit(&orbit, &inst, &delta, &mut rng, cfg.flip_budget).map_err(usage)?;
    let validation = validate_pseudo_orbit(&out.orbit, &inst, &delta).map_err(usage)?;
    let violation = if validation.valid {
        None
    } else {
        Some("generated orbit failed its own validation".into())
    };
    let dto = OrbitDto::from_core(&out.orbit);
    // Keep the canonical serialization path exercised.
    let _ = orbit_to_json(&out.orbit);
    let summary = json!({
        "command": "gen-po",
        "delta": delta.to_string(),
        "valid": validation.valid,
        "entries": out.orbit.entries().len(),
        "spatialSites": out.orbit.spatial_box().len(),
        "perturbMoves": out.moves_applied,
        "perturbNotice": out.notice,
        "masterSeed": seed,
    });
    Ok(RunPayload {
        trials_ran: 1,
        trial_files: vec![(
            "trial_0.json".into(),
            serde_json::to_value(&dto).expect("orbit serialization is infallible"),
        )],
        summary,
        headline: format!(
            "gen-po: {} entries on {} sites at delta {}",
            out.orbit.entries().len(),
            out.orbit.spatial_box().len(),
            delta
        ),
        violation,
    })
}

fn sites_arg(raw: &[Vec<u32>], what: &str) -> CliResult<shadowlab::lattice::SiteSet> {
    let r = raw
        .first()
        .map(Vec::len)
        .ok_or_else(|| usage(format!("field '{what}' must be nonempty")))?;
    let mut sites = Vec::with_capacity(raw.len());
    for coords in raw {
        if coords.len() != r {
            return Err(usage(format!("field '{what}' mixes site ranks")));
        }
        sites.push(shadowlab::lattice::Site::new(coords.clone()));
    }
    shadowlab::lattice::SiteSet::from_sites(r, sites).map_err(usage)
}
