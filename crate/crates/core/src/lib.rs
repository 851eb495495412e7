//! Complex event recognition and forecasting over categorical event streams.
//!
//! A pattern built from sequence (`;`), disjunction (`|`) and iteration (`*`)
//! is compiled to a minimal DFA that is in a final state exactly when a match
//! ends at the current event. Combined with an order-m Markov model of the
//! stream this yields a pattern Markov chain, whose first-passage
//! (waiting-time) distributions give, for every non-final state, the shortest
//! interval of future events in which the pattern completes with probability
//! at least `theta`.
//!
//! Pipeline:
//!
//! ```text
//! pattern ──parse──▶ PatternExpr ──compile──▶ Dfa ─┐
//!                                                  ├─build_pmc──▶ Pmc ──waiting_times──▶ WaitingTimeTable
//! stream ──train──▶ SymbolModel ───────────────────┘
//!
//! stream + Dfa + Pmc + intervals ──engine::run──▶ matches, forecasts ──evaluate──▶ per-state metrics
//! ```

pub mod automaton;
pub mod cli;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod event;
pub mod forecasting;
pub mod markov;
pub mod pattern;
pub mod simulator;

pub use automaton::Dfa;
pub use engine::{ForecastRecord, MatchRecord, Outcome};
pub use error::{Error, Result};
pub use evaluation::StateMetrics;
pub use event::{Alphabet, Event, EventStream, EventType};
pub use forecasting::{ForecastInterval, WaitingTimeTable};
pub use markov::{Pmc, SymbolModel};
pub use pattern::PatternExpr;
pub use simulator::{GeneratorSpec, SplitMix64};
