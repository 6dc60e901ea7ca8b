//! Command-line interface. Every report is a JSON envelope carrying the
//! crate version, the command, its effective configuration, and the result.
//!
//! Exit codes: 0 success, 2 validation or I/O failure, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bound::{
    self, assemble_problem, export_sdpa, feasibility_check, seesaw_lower_bound, BoundStatus, Level,
    SolverOptions, Strategy,
};
use crate::error::{Error, Result};
use crate::jones::verify_all_tables;
use crate::photon::{run_experiment, s_table_csv, ExperimentConfig};
use crate::protocol::{standard_table, summarize, MixtureModel, NoiseParams};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "realqt", version, about = "Network test of real quantum theory, at desk scale")]
pub struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report (or exported file) here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundMode {
    Export,
    Solve,
    Check,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// S, T, p(b=+1|y) and W of the noiseless protocol.
    Ideal,
    /// W under source and interference noise; defaults to the measured visibilities.
    Emulate {
        #[arg(long)]
        ve: Option<f64>,
        #[arg(long)]
        vi: Option<f64>,
        #[arg(long)]
        model: Option<MixtureModel>,
        /// Report both mixture models.
        #[arg(long)]
        both: bool,
    },
    /// Monte Carlo of the counting experiment.
    Simulate {
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        ve: Option<f64>,
        #[arg(long)]
        vi: Option<f64>,
        #[arg(long)]
        model: Option<MixtureModel>,
        /// Include per-cycle counts in the report.
        #[arg(long)]
        records: bool,
    },
    /// Build, export, solve or check the moment relaxation.
    Bound {
        #[arg(long)]
        level: Option<String>,
        #[arg(long, value_enum)]
        mode: Option<BoundMode>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Wall-clock limit of the solve, seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Omit the partial-transpose constraints.
        #[arg(long)]
        no_pt: bool,
        /// Print solver progress to stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Lower bound on W from alternating optimization of real strategies.
    Seesaw {
        /// Real dimensions of A,B,B',C, comma separated.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Jones-calculus check of the wave-plate tables.
    WaveplatesVerify,
}

/// Contents of a `--config` file. Sections apply to their command.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub noise: Option<NoiseParams>,
    #[serde(default)]
    pub simulate: Option<ExperimentConfig>,
    #[serde(default)]
    pub bound: Option<BoundConfig>,
    #[serde(default)]
    pub seesaw: Option<SeesawConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    pub level: String,
    pub mode: String,
    pub tol: f64,
    pub max_iter: usize,
    pub time_limit: Option<f64>,
    pub partial_transpose: bool,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            level: "1".into(),
            mode: "solve".into(),
            tol: 1e-4,
            max_iter: bound::solver::DEFAULT_MAX_ITER,
            time_limit: None,
            partial_transpose: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeesawConfig {
    pub dims: [usize; 4],
    pub restarts: usize,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            dims: [2, 2, 2, 2],
            restarts: 20,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    if cfg.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(Error::InvalidConfig(format!(
            "config schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

/// Failure with an exit code and, for numerical failures, the report.
#[derive(Debug)]
pub struct CliFailure {
    pub code: i32,
    pub message: String,
    pub report: Option<String>,
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CountOverflow(_) | Error::Degenerate(_) => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        };
        CliFailure {
            code,
            message: e.to_string(),
            report: None,
        }
    }
}

fn envelope(command: &str, config: Value, result: Value) -> Value {
    json!({
        "version": crate::VERSION,
        "command": command,
        "config": config,
        "result": result,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn noise_from(
    base: Option<NoiseParams>,
    ve: Option<f64>,
    vi: Option<f64>,
    model: Option<MixtureModel>,
    default: NoiseParams,
) -> Result<NoiseParams> {
    let b = base.unwrap_or(default);
    NoiseParams::new(ve.unwrap_or(b.v_e), vi.unwrap_or(b.v_i), model.unwrap_or(b.mixture_model))
}

fn csv_s_table(entries: &[crate::protocol::SEntry]) -> String {
    let mut out = String::from("x,z,y,s\n");
    for e in entries {
        out.push_str(&format!("{},{},{},{:.12}\n", e.x, e.z, e.y, e.s));
    }
    out
}

/// Runs one parsed command, returning the text to emit.
pub fn execute(cli: &Cli) -> std::result::Result<String, CliFailure> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            ..Default::default()
        },
    };
    let seed = cli.seed.or(file.seed).unwrap_or(1);
    match &cli.command {
        Command::Ideal => {
            let noise = NoiseParams::ideal();
            let s = summarize(&standard_table(&noise)?, noise);
            Ok(match cli.format {
                Format::Csv => csv_s_table(&s.s_values),
                Format::Json => pretty(&envelope("ideal", json!({ "noise": noise }), json!(s))),
            })
        }
        Command::Emulate { ve, vi, model, both } => {
            let noise = noise_from(file.noise, *ve, *vi, *model, ExperimentConfig::default().noise)?;
            let summary = summarize(&standard_table(&noise)?, noise);
            let mut result = json!({ "w": summary.w, "summary": summary });
            if *both {
                let mut by_model = serde_json::Map::new();
                for m in [MixtureModel::Subspace, MixtureModel::Depolarizing] {
                    let n = NoiseParams { mixture_model: m, ..noise };
                    let w = crate::protocol::w_value(&standard_table(&n)?);
                    by_model.insert(format!("{m:?}").to_lowercase(), json!(w));
                }
                result["w_by_model"] = Value::Object(by_model);
            }
            Ok(match cli.format {
                Format::Csv => csv_s_table(&summary.s_values),
                Format::Json => pretty(&envelope("emulate", json!({ "noise": noise, "both": both }), result)),
            })
        }
        Command::Simulate {
            cycles,
            resamples,
            ve,
            vi,
            model,
            records,
        } => {
            let mut cfg = file.simulate.clone().unwrap_or_default();
            if let Some(c) = cycles {
                cfg.num_cycles = *c;
            }
            if let Some(r) = resamples {
                cfg.bootstrap_resamples = *r;
            }
            cfg.noise = noise_from(Some(cfg.noise), *ve, *vi, *model, cfg.noise)?;
            cfg.seed = seed;
            let report = run_experiment(&cfg, *records)?;
            Ok(match cli.format {
                Format::Csv => s_table_csv(&report.estimate.per_setting_s),
                Format::Json => pretty(&envelope("simulate", json!(cfg), json!(report))),
            })
        }
        Command::Bound {
            level,
            mode,
            tol,
            max_iter,
            time_limit,
            no_pt,
            verbose,
        } => {
            let mut bc = file.bound.clone().unwrap_or_default();
            if let Some(l) = level {
                bc.level = l.clone();
            }
            if let Some(m) = mode {
                bc.mode = format!("{m:?}").to_lowercase();
            }
            if let Some(t) = tol {
                bc.tol = *t;
            }
            if let Some(m) = max_iter {
                bc.max_iter = *m;
            }
            if time_limit.is_some() {
                bc.time_limit = *time_limit;
            }
            if *no_pt {
                bc.partial_transpose = false;
            }
            let lvl: Level = bc.level.parse()?;
            let problem = assemble_problem(lvl, bc.partial_transpose);
            let config = json!(bc);
            match bc.mode.as_str() {
                "export" => {
                    let path = cli
                        .output
                        .clone()
                        .unwrap_or_else(|| PathBuf::from(format!("relaxation-level-{}.dat-s", lvl)));
                    let hash = export_sdpa(&problem, &path)?;
                    let result = json!({
                        "path": path,
                        "sha256": hash,
                        "block_sizes": vec![problem.block_size(); problem.blocks.len()],
                        "equalities": problem.constraints.len(),
                        "variables": problem.num_vars(),
                    });
                    // The exported file occupies --output; the summary goes to stdout.
                    Ok(pretty(&envelope("bound", config, result)))
                }
                "solve" => {
                    let opts = SolverOptions {
                        tol: bc.tol,
                        max_iter: bc.max_iter,
                        time_limit: bc.time_limit.map(Duration::from_secs_f64),
                        verbose: *verbose,
                        ..Default::default()
                    };
                    let b = bound::solve(&problem, &opts)?;
                    let text = pretty(&envelope("bound", config, json!(b)));
                    if matches!(b.status, BoundStatus::NumericalFailure | BoundStatus::Infeasible) {
                        return Err(CliFailure {
                            code: EXIT_NUMERICAL,
                            message: format!("solver finished with status {:?}", b.status),
                            report: Some(text),
                        });
                    }
                    Ok(text)
                }
                "check" => {
                    let mut reports = Vec::new();
                    let mut push = |name: String, s: &Strategy| -> Result<()> {
                        let r = feasibility_check(&problem, s)?;
                        reports.push(json!({
                            "strategy": name,
                            "violated": r.violated(1e-8),
                            "report": r,
                        }));
                        Ok(())
                    };
                    push("ideal-complex".into(), &Strategy::ideal_complex())?;
                    push("deterministic".into(), &Strategy::deterministic([1, -1, -1, -1]))?;
                    for k in 0..3u64 {
                        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ k);
                        push(format!("random-real-{k}"), &Strategy::random_real([2, 2, 2, 2], &mut rng)?)?;
                    }
                    Ok(pretty(&envelope("bound", config, json!(reports))))
                }
                other => Err(Error::InvalidConfig(format!("unknown bound mode {other:?}")).into()),
            }
        }
        Command::Seesaw { dims, restarts } => {
            let mut sc = file.seesaw.clone().unwrap_or_default();
            if let Some(d) = dims {
                sc.dims = d
                    .as_slice()
                    .try_into()
                    .map_err(|_| Error::InvalidConfig("--dims needs four values".into()))?;
            }
            if let Some(r) = restarts {
                sc.restarts = *r;
            }
            let r = seesaw_lower_bound(sc.dims, sc.restarts, seed)?;
            let config = json!({ "dims": sc.dims, "restarts": sc.restarts, "seed": seed });
            Ok(pretty(&envelope("seesaw", config, json!(r))))
        }
        Command::WaveplatesVerify => {
            let rows = verify_all_tables()?;
            Ok(match cli.format {
                Format::Csv => {
                    let mut s = String::from("row,matches,sign,residual\n");
                    for r in &rows {
                        s.push_str(&format!(
                            "{},{},{},{:e}\n",
                            r.label,
                            r.matches(1e-10),
                            r.sign.map_or("".into(), |v| v.to_string()),
                            r.residual
                        ));
                    }
                    s
                }
                Format::Json => {
                    let all = rows.iter().all(|r| r.matches(1e-10));
                    pretty(&envelope("waveplates-verify", json!({}), json!({ "all_match": all, "rows": rows })))
                }
            })
        }
    }
}

/// Parses `args`, runs, writes the report to `--output` or `out`, and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    let exports_file = matches!(
        &cli.command,
        Command::Bound { mode: Some(BoundMode::Export), .. }
    ) || (matches!(&cli.command, Command::Bound { mode: None, .. })
        && cli
            .config
            .as_ref()
            .and_then(|p| load_config(p).ok())
            .and_then(|c| c.bound)
            .is_some_and(|b| b.mode == "export"));
    let emit = |text: &str, out: &mut dyn Write| -> std::result::Result<(), String> {
        match (&cli.output, exports_file) {
            (Some(path), false) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
            _ => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
        }
    };
    match execute(&cli) {
        Ok(text) => match emit(&text, out) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_VALIDATION
            }
        },
        Err(f) => {
            if let Some(r) = &f.report {
                let _ = emit(r, out);
            }
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
