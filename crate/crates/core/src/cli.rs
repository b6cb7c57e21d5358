//! `pfml` command line. Each subcommand writes its artifacts and prints one
//! result line per item on stdout, as JSON objects under `--json`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::dataio::{self, DataError};
use crate::fixtures;
use crate::fml::{parse_fml, serialize_fml, validate_controller, FuzzyController, ParseError};
use crate::inference::{situation_phrase, CrispInput, Engine, InferenceError};
use crate::preprocess::{training_set_for_session, Color, PreprocessError};
use crate::pso::{learn_with_progress, perturb_controller, PsoError, SwarmConfig};

pub const THREADS_ENV: &str = "PFML_THREADS";
const PROGRESS_EVERY: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "pfml",
    version,
    about = "FML fuzzy controllers tuned by particle swarm optimization"
)]
pub struct Cli {
    /// Print one JSON object per result line.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate an FML controller and list its violations.
    Parse {
        #[arg(long)]
        kb: PathBuf,
    },
    /// Infer the win rate for one set of crisp inputs.
    Infer {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        ald: f64,
        #[arg(long)]
        bald: f64,
        #[arg(long)]
        sld: f64,
        #[arg(long)]
        fld: f64,
        #[arg(long)]
        sn: f64,
        #[arg(long)]
        tmr: f64,
        /// Side the win rate belongs to, used to phrase the situation for Black.
        #[arg(long, default_value = "black")]
        color: Color,
    },
    /// Turn a session bundle into a training table.
    Preprocess {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "black")]
        focus: Color,
    },
    /// Tune the controller's trapezoids on a training table.
    Learn {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = 3000)]
        generations: usize,
        #[arg(long, default_value_t = 20)]
        particles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        inertia: f64,
        #[arg(long, default_value_t = 2.0)]
        cognitive: f64,
        #[arg(long, default_value_t = 2.0)]
        social: f64,
        /// Velocity limit as a fraction of each parameter's range.
        #[arg(long, default_value_t = 0.2)]
        velocity_clamp: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        history: PathBuf,
    },
    /// Compare two controllers on a training table and write a report.
    Eval {
        #[arg(long)]
        kb_before: PathBuf,
        #[arg(long)]
        kb_after: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "game")]
        game_id: String,
    },
    /// Write a synthetic session bundle and the hidden controller behind it.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        moves: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        samples_per_move: usize,
        /// Base controller; the built-in expert controller when omitted.
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Relative perturbation applied to the base controller.
        #[arg(long, default_value_t = 0.15)]
        perturb: f64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Fml {
        path: PathBuf,
        source: Box<ParseError>,
    },
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Pso(#[from] PsoError),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

fn load_controller(path: &Path) -> Result<FuzzyController, CliError> {
    let text = dataio::read_file(path)?;
    parse_fml(&text).map_err(|source| CliError::Fml {
        path: path.to_path_buf(),
        source: Box::new(source),
    })
}

struct Printer<'a> {
    json: bool,
    out: &'a mut dyn Write,
}

impl Printer<'_> {
    fn line(&mut self, text: String, value: serde_json::Value) -> Result<(), CliError> {
        if self.json {
            writeln!(self.out, "{value}")?;
        } else {
            writeln!(self.out, "{text}")?;
        }
        Ok(())
    }
}

/// Sizes rayon's global pool from `PFML_THREADS`; unset or 0 leaves it automatic.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Failed(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut p = Printer {
        json: cli.json,
        out,
    };
    match &cli.command {
        Command::Parse { kb } => {
            let controller = load_controller(kb)?;
            let violations = validate_controller(&controller);
            for v in &violations {
                p.line(
                    format!("violation: {v}"),
                    json!({ "violation": v.to_string() }),
                )?;
            }
            p.line(
                format!("{} violations", violations.len()),
                json!({ "violations": violations.len() }),
            )?;
            if !violations.is_empty() {
                return Err(CliError::Failed(format!(
                    "{}: {} violations",
                    kb.display(),
                    violations.len()
                )));
            }
        }
        Command::Infer {
            kb,
            ald,
            bald,
            sld,
            fld,
            sn,
            tmr,
            color,
        } => {
            let controller = load_controller(kb)?;
            let input = CrispInput::new()
                .with("ALD", *ald)
                .with("BALD", *bald)
                .with("SLD", *sld)
                .with("FLD", *fld)
                .with("SN", *sn)
                .with("TMR", *tmr);
            let result = Engine::new(&controller)?.infer(&input)?;
            let black_wr = match color {
                Color::Black => result.crisp_output,
                Color::White => 1.0 - result.crisp_output,
            };
            let phrase = situation_phrase(black_wr)?;
            let fired: serde_json::Map<String, serde_json::Value> = result
                .fired_rules
                .iter()
                .filter(|(_, a)| *a > 0.0)
                .map(|(n, a)| (n.clone(), json!(a)))
                .collect();
            p.line(
                format!("WR {} {} \"{phrase}\"", result.crisp_output, result.label),
                json!({
                    "wr": result.crisp_output,
                    "label": result.label,
                    "phrase": phrase,
                    "fired_rules": fired,
                }),
            )?;
        }
        Command::Preprocess {
            session,
            out,
            focus,
        } => {
            let b = dataio::load_session(session)?;
            let set =
                training_set_for_session(&b.meta, &b.samples, &b.moves, &b.predictions, *focus)?;
            dataio::write_training_set(out, &set.records)?;
            for (m, reason) in &set.skipped {
                p.line(
                    format!("skipped move {m}: {reason}"),
                    json!({ "skipped": m, "reason": reason.to_string() }),
                )?;
            }
            p.line(
                format!("{} records written to {}", set.records.len(), out.display()),
                json!({ "records": set.records.len(), "skipped": set.skipped.len(), "out": out }),
            )?;
        }
        Command::Learn {
            kb,
            train,
            generations,
            particles,
            seed,
            inertia,
            cognitive,
            social,
            velocity_clamp,
            out,
            history,
        } => {
            let template = load_controller(kb)?;
            let records = dataio::read_training_set(train)?;
            let config = SwarmConfig {
                particle_count: *particles,
                inertia_weight: *inertia,
                cognitive: *cognitive,
                social: *social,
                generations: *generations,
                seed: *seed,
                velocity_clamp_fraction: *velocity_clamp,
            };
            let result = learn_with_progress(&template, &records, &config, |g, f| {
                if g % PROGRESS_EVERY == 0 {
                    eprintln!("generation {g} gbest {f}");
                }
            })?;
            dataio::write_file(out, &serialize_fml(&result.learned_controller))?;
            dataio::write_history(history, &result.history)?;
            p.line(
                format!(
                    "fitness {} -> {} after {} generations",
                    result.initial_fitness, result.final_fitness, generations
                ),
                json!({
                    "initial_fitness": result.initial_fitness,
                    "final_fitness": result.final_fitness,
                    "generations": generations,
                    "out": out,
                    "history": history,
                }),
            )?;
        }
        Command::Eval {
            kb_before,
            kb_after,
            train,
            report,
            game_id,
        } => {
            let before = load_controller(kb_before)?;
            let after = load_controller(kb_after)?;
            let records = dataio::read_training_set(train)?;
            let r = dataio::evaluate_controllers(game_id, &before, &after, &records)?;
            dataio::write_report(report, &r)?;
            p.line(
                format!(
                    "accuracy {} -> {}, fitness {} -> {}",
                    r.semantic_accuracy_before,
                    r.semantic_accuracy_after,
                    r.fitness_before,
                    r.fitness_after
                ),
                json!({
                    "game_id": r.game_id,
                    "record_count": r.record_count,
                    "semantic_accuracy_before": r.semantic_accuracy_before,
                    "semantic_accuracy_after": r.semantic_accuracy_after,
                    "fitness_before": r.fitness_before,
                    "fitness_after": r.fitness_after,
                    "report": report,
                }),
            )?;
        }
        Command::Gen {
            seed,
            moves,
            out,
            samples_per_move,
            kb,
            perturb,
        } => {
            let base = match kb {
                Some(path) => load_controller(path)?,
                None => fixtures::expert_controller(),
            };
            if !(0.0..1.0).contains(perturb) {
                return Err(CliError::Failed(format!(
                    "--perturb {perturb} outside [0, 1)"
                )));
            }
            let hidden = perturb_controller(&base, *perturb, *seed)?;
            let bundle =
                dataio::generate_synthetic_session(*seed, *moves, *samples_per_move, &hidden)?;
            dataio::write_session(&bundle, out)?;
            let hidden_path = out.join("hidden_kb.xml");
            dataio::write_file(&hidden_path, &serialize_fml(&hidden))?;
            p.line(
                format!(
                    "{} moves, {} samples written to {}",
                    bundle.moves.len(),
                    bundle.samples.len(),
                    out.display()
                ),
                json!({
                    "moves": bundle.moves.len(),
                    "samples": bundle.samples.len(),
                    "out": out,
                    "hidden_kb": hidden_path,
                }),
            )?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 on data or validation errors, 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("pfml: {e}");
        return 2;
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("pfml: {e}");
            1
        }
    }
}
