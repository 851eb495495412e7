//! The `cerf` command line: every pipeline stage as a subcommand reading and
//! writing files.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation or domain error
//! (including a horizon too short for some visited state).

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::automaton::{compile, Dfa};
use crate::engine::{self, RunOutput};
use crate::error::{Error, Result};
use crate::evaluation;
use crate::event::{read_stream, write_stream, Alphabet, EventStream};
use crate::forecasting::{check_theta, waiting_times};
use crate::markov::{build_pmc, train, SymbolModel};
use crate::pattern::parse_pattern;
use crate::simulator::{generate, GeneratorSpec};

pub const DEFAULT_HORIZON: usize = 500;
pub const DEFAULT_ORDER: usize = 1;
pub const DEFAULT_SMOOTHING: f64 = 1.0;
pub const DEFAULT_THETA: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(name = "cerf", version, about = "Complex event recognition and forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a pattern to a DFA (JSON)
    Compile {
        #[command(flatten)]
        pattern: PatternSource,
        /// Alphabet as a comma separated list, e.g. `a,b`
        #[arg(short = 'A', long)]
        alphabet: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Estimate an order-m symbol model from a stream
    Train {
        #[arg(short, long)]
        input: PathBuf,
        /// Alphabet (default: sorted distinct types of the input)
        #[arg(short = 'A', long)]
        alphabet: Option<String>,
        /// Markov order m
        #[arg(short = 'm', long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        /// Additive smoothing alpha
        #[arg(short = 'a', long, default_value_t = DEFAULT_SMOOTHING)]
        smoothing: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the engine over a stream, emitting matches and resolved forecasts (JSON-lines)
    Forecast {
        #[command(flatten)]
        automaton: AutomatonSource,
        #[arg(short = 'M', long)]
        model: PathBuf,
        /// Confidence threshold theta in (0,1]
        #[arg(short, long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        /// Waiting-time horizon in future events
        #[arg(short = 'H', long, default_value_t = DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(short, long)]
        input: PathBuf,
        /// Output file (default: standard output)
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Aggregate a forecast file into per-state metrics (CSV)
    Evaluate {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Waiting-time distributions of every non-final state (CSV)
    Wtd {
        #[command(flatten)]
        automaton: AutomatonSource,
        #[arg(short = 'M', long)]
        model: PathBuf,
        #[arg(short = 'H', long, default_value_t = DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Generate a synthetic stream from a model (CSV)
    Simulate {
        #[arg(short = 'M', long)]
        model: PathBuf,
        #[arg(short = 'n', long)]
        length: usize,
        #[arg(short, long, default_value_t = 0)]
        seed: u64,
        /// Initial context, comma separated, oldest first (default: drawn uniformly)
        #[arg(long)]
        initial_context: Option<String>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct PatternSource {
    /// Pattern text, e.g. `a;b;b;b`
    #[arg(short, long)]
    pub pattern: Option<String>,
    /// File containing the pattern text
    #[arg(long)]
    pub pattern_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct AutomatonSource {
    /// Pattern text, compiled over the model's alphabet
    #[arg(short, long)]
    pub pattern: Option<String>,
    #[arg(long)]
    pub pattern_file: Option<PathBuf>,
    /// Previously compiled DFA file
    #[arg(short, long)]
    pub dfa: Option<PathBuf>,
}

/// Validated numeric parameters shared by the pipeline commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub theta: f64,
    pub horizon: usize,
    pub order: usize,
    pub smoothing: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta: DEFAULT_THETA,
            horizon: DEFAULT_HORIZON,
            order: DEFAULT_ORDER,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothing must be >= 0, got {}",
                self.smoothing
            )));
        }
        Ok(())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

impl PatternSource {
    fn text(&self) -> Result<String> {
        match (&self.pattern, &self.pattern_file) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(f)) => Ok(read_text(f)?.trim().to_owned()),
            (None, None) => Err(Error::InvalidParameter("a pattern is required".into())),
        }
    }
}

impl AutomatonSource {
    fn load(&self, alphabet: &Alphabet) -> Result<Dfa> {
        if let Some(path) = &self.dfa {
            return Dfa::load(path);
        }
        let text = PatternSource {
            pattern: self.pattern.clone(),
            pattern_file: self.pattern_file.clone(),
        }
        .text()?;
        compile(&parse_pattern(&text, alphabet)?, alphabet)
    }
}

/// In-process pipeline behind `forecast`: chain, waiting times, engine run.
pub fn forecast_pipeline(
    dfa: &Dfa,
    model: &SymbolModel,
    stream: &EventStream,
    theta: f64,
    horizon: usize,
) -> Result<RunOutput> {
    RunConfig {
        theta,
        horizon,
        ..RunConfig::default()
    }
    .validate()?;
    let pmc = build_pmc(dfa, model)?;
    let wtt = waiting_times(&pmc, horizon)?;
    engine::run(stream, dfa, &pmc, &wtt, theta)
}

/// Serialized engine output, as written by `forecast`.
pub fn render_records(out: &RunOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    engine::write_records(&out.records, &mut buf).expect("writing to memory");
    buf
}

pub fn summary_line(out: &RunOutput) -> String {
    let count = |o| {
        out.forecasts
            .iter()
            .filter(|f| f.outcome == Some(o))
            .count()
    };
    let hits = count(engine::Outcome::Hit);
    let misses = count(engine::Outcome::Miss);
    let unresolved = count(engine::Outcome::Unresolved);
    let rate = if hits + misses > 0 {
        format!("{:.6}", hits as f64 / (hits + misses) as f64)
    } else {
        "n/a".to_owned()
    };
    format!(
        "matches={} forecasts={} hits={hits} misses={misses} unresolved={unresolved} hit_rate={rate}",
        out.matches.len(),
        out.forecasts.len()
    )
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compile {
            pattern,
            alphabet,
            out,
        } => {
            let alphabet = Alphabet::parse_list(&alphabet)?;
            let expr = parse_pattern(&pattern.text()?, &alphabet)?;
            let dfa = compile(&expr, &alphabet)?;
            dfa.save(&out)?;
            eprintln!("compiled {expr} to {} states", dfa.num_states());
            Ok(())
        }
        Command::Train {
            input,
            alphabet,
            order,
            smoothing,
            out,
        } => {
            RunConfig {
                order,
                smoothing,
                ..RunConfig::default()
            }
            .validate()?;
            let alphabet = alphabet.as_deref().map(Alphabet::parse_list).transpose()?;
            let stream = read_stream(&input, alphabet.as_ref())?;
            let model = train(&stream, order, smoothing)?;
            model.save(&out)
        }
        Command::Forecast {
            automaton,
            model,
            theta,
            horizon,
            input,
            out,
        } => {
            check_theta(theta)?;
            let model = SymbolModel::load(&model)?;
            let dfa = automaton.load(model.alphabet())?;
            let stream = read_stream(&input, Some(model.alphabet()))?;
            let result = forecast_pipeline(&dfa, &model, &stream, theta, horizon)?;
            let bytes = render_records(&result);
            let summary = summary_line(&result);
            match &out {
                Some(path) => {
                    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
                    println!("{summary}");
                }
                None => {
                    io::stdout()
                        .write_all(&bytes)
                        .map_err(|e| Error::io("<stdout>", e))?;
                    eprintln!("{summary}");
                }
            }
            for s in &result.shortfalls {
                eprintln!(
                    "warning: state {}: horizon insufficient, mass {} within {horizon} events is below theta {}",
                    s.state, s.achievable, s.theta
                );
            }
            match result.shortfalls.first() {
                Some(&s) => Err(s.into()),
                None => Ok(()),
            }
        }
        Command::Evaluate { input, out } => {
            let forecasts = engine::parse_forecasts(&read_text(&input)?)?;
            let metrics = evaluation::evaluate(&forecasts);
            evaluation::export_metrics(&metrics, &out)
        }
        Command::Wtd {
            automaton,
            model,
            horizon,
            out,
        } => {
            let model = SymbolModel::load(&model)?;
            let dfa = automaton.load(model.alphabet())?;
            let pmc = build_pmc(&dfa, &model)?;
            let wtt = waiting_times(&pmc, horizon)?;
            write_with(&out, |w| wtt.write_csv(w))
        }
        Command::Simulate {
            model,
            length,
            seed,
            initial_context,
            out,
        } => {
            let model = SymbolModel::load(&model)?;
            let initial_context = initial_context
                .map(|list| {
                    list.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|name| {
                            model.alphabet().id(name).ok_or_else(|| {
                                Error::InvalidParameter(format!("unknown type {name} in initial context"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?;
            let spec = GeneratorSpec {
                initial_context,
                ..GeneratorSpec::new(model, length, seed)
            };
            write_stream(&generate(&spec)?, &out)
        }
    }
}
