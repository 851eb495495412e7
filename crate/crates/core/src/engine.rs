//! Single-pass streaming runtime.
//!
//! The engine keeps one chain state. After each event it either reports a
//! match (the DFA entered a final state) or emits the precomputed forecast
//! interval of the current state. The DFA is never reset; back-to-back and
//! overlapping matches fall out of the `Σ*·R` construction.
//!
//! With a model of order `m ≥ 1` the first `m` events only fill the context:
//! matches are still reported but no forecasts are emitted.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::automaton::Dfa;
use crate::error::{Error, Result};
use crate::event::{Event, EventStream};
use crate::forecasting::{forecast_interval, ForecastInterval, WaitingTimeTable};
use crate::markov::Pmc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchRecord {
    pub index: usize,
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Hit,
    Miss,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastRecord {
    pub emitted_at: usize,
    pub state: usize,
    pub interval: ForecastInterval,
    pub outcome: Option<Outcome>,
}

/// A state whose waiting-time mass within the horizon stays below theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonShortfall {
    pub state: usize,
    pub achievable: f64,
    pub theta: f64,
}

impl From<HorizonShortfall> for Error {
    fn from(s: HorizonShortfall) -> Self {
        Error::HorizonInsufficient {
            achievable: s.achievable,
            theta: s.theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Output {
    Match(MatchRecord),
    Forecast(ForecastRecord),
}

/// Per-event runtime over shared, immutable automaton and chain.
pub struct Engine<'a> {
    dfa: &'a Dfa,
    pmc: &'a Pmc,
    intervals: Vec<Option<ForecastInterval>>,
    shortfalls: Vec<HorizonShortfall>,
    reported: Vec<bool>,
    order: usize,
    contexts: usize,
    /// Chain state once the context is full.
    state: Option<usize>,
    dfa_state: usize,
    context: usize,
    seen: usize,
}

impl<'a> Engine<'a> {
    pub fn new(dfa: &'a Dfa, pmc: &'a Pmc, wtt: &WaitingTimeTable, theta: f64) -> Result<Self> {
        if pmc.alphabet_size() != dfa.alphabet().len() || wtt.num_states() != pmc.num_states() {
            return Err(Error::AlphabetMismatch(
                "DFA, chain and waiting-time table were not built together".into(),
            ));
        }
        crate::forecasting::check_theta(theta)?;
        let mut intervals = vec![None; pmc.num_states()];
        let mut shortfalls = Vec::new();
        for (s, row) in wtt.rows() {
            match forecast_interval(row, theta) {
                Ok(iv) => intervals[s] = Some(iv),
                Err(Error::HorizonInsufficient { achievable, theta }) => {
                    shortfalls.push(HorizonShortfall {
                        state: s,
                        achievable,
                        theta,
                    })
                }
                Err(e) => return Err(e),
            }
        }
        let order = pmc.order();
        let contexts = pmc.alphabet_size().pow(order as u32);
        let state = (order == 0)
            .then(|| pmc.index_of(dfa.start(), 0))
            .flatten();
        Ok(Engine {
            dfa,
            pmc,
            intervals,
            shortfalls,
            reported: vec![false; pmc.num_states()],
            order,
            contexts,
            state,
            dfa_state: dfa.start(),
            context: 0,
            seen: 0,
        })
    }

    /// States whose interval could not be formed within the horizon.
    pub fn shortfalls(&self) -> &[HorizonShortfall] {
        &self.shortfalls
    }

    /// Current chain state, `None` during warm-up.
    pub fn state(&self) -> Option<usize> {
        self.state
    }

    pub fn process(&mut self, event: &Event) -> Option<Output> {
        let symbol = event.symbol;
        match self.state {
            Some(s) => {
                let t = self.pmc.next(s, symbol);
                self.state = Some(t);
                self.dfa_state = self.pmc.dfa_state(t);
            }
            None => {
                self.dfa_state = self.dfa.step(self.dfa_state, symbol);
                self.context = (self.context * self.pmc.alphabet_size() + symbol) % self.contexts;
                if self.seen + 1 == self.order {
                    self.state = self.pmc.index_of(self.dfa_state, self.context);
                }
            }
        }
        self.seen += 1;

        if self.dfa.is_final(self.dfa_state) {
            return Some(Output::Match(MatchRecord {
                index: event.index,
                timestamp: event.timestamp,
            }));
        }
        if self.seen <= self.order {
            return None;
        }
        let s = self.state?;
        match self.intervals[s] {
            Some(interval) => Some(Output::Forecast(ForecastRecord {
                emitted_at: event.index,
                state: s,
                interval,
                outcome: None,
            })),
            None => {
                self.reported[s] = true;
                None
            }
        }
    }

    /// Shortfall states actually visited so far.
    pub fn visited_shortfalls(&self) -> Vec<HorizonShortfall> {
        self.shortfalls
            .iter()
            .filter(|s| self.reported[s.state])
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub matches: Vec<MatchRecord>,
    pub forecasts: Vec<ForecastRecord>,
    /// Records in stream order, matches and forecasts interleaved.
    pub records: Vec<Output>,
    /// Visited states that emitted no forecast because the horizon was too short.
    pub shortfalls: Vec<HorizonShortfall>,
}

/// Runs the engine over `stream` and resolves every forecast against the
/// matches found.
pub fn run(
    stream: &EventStream,
    dfa: &Dfa,
    pmc: &Pmc,
    wtt: &WaitingTimeTable,
    theta: f64,
) -> Result<RunOutput> {
    if stream.alphabet() != dfa.alphabet() {
        return Err(Error::AlphabetMismatch(
            "stream alphabet differs from DFA alphabet".into(),
        ));
    }
    let mut engine = Engine::new(dfa, pmc, wtt, theta)?;
    let mut out = RunOutput::default();
    for event in stream.events() {
        if let Some(o) = engine.process(event) {
            match o {
                Output::Match(m) => out.matches.push(m),
                Output::Forecast(f) => out.forecasts.push(f),
            }
            out.records.push(o);
        }
    }
    out.forecasts = resolve_forecasts(&out.forecasts, &out.matches, stream.len());
    let mut resolved = out.forecasts.iter();
    for r in &mut out.records {
        if let Output::Forecast(f) = r {
            *f = *resolved.next().expect("one resolved record per forecast");
        }
    }
    out.shortfalls = engine.visited_shortfalls();
    Ok(out)
}

/// Labels each forecast by where the first match after its emission fell.
pub fn resolve_forecasts(
    forecasts: &[ForecastRecord],
    matches: &[MatchRecord],
    stream_length: usize,
) -> Vec<ForecastRecord> {
    forecasts
        .iter()
        .map(|f| {
            let t = f.emitted_at;
            let next = matches.partition_point(|m| m.index <= t);
            let (s, e) = (f.interval.start, f.interval.end);
            let outcome = match matches.get(next) {
                Some(m) if (s..=e).contains(&(m.index - t)) => Outcome::Hit,
                Some(_) => Outcome::Miss,
                None if t + e >= stream_length => Outcome::Unresolved,
                None => Outcome::Miss,
            };
            ForecastRecord {
                outcome: Some(outcome),
                ..*f
            }
        })
        .collect()
}

/// One line of the engine's JSON-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RecordLine {
    Match {
        index: usize,
        timestamp: u64,
    },
    Forecast {
        emitted_at: usize,
        state: usize,
        start: usize,
        end: usize,
        mass: f64,
        outcome: Outcome,
    },
}

impl From<&Output> for RecordLine {
    fn from(o: &Output) -> Self {
        match *o {
            Output::Match(m) => RecordLine::Match {
                index: m.index,
                timestamp: m.timestamp,
            },
            Output::Forecast(f) => RecordLine::Forecast {
                emitted_at: f.emitted_at,
                state: f.state,
                start: f.interval.start,
                end: f.interval.end,
                mass: f.interval.mass,
                outcome: f.outcome.unwrap_or(Outcome::Unresolved),
            },
        }
    }
}

pub fn write_records(records: &[Output], out: &mut impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, &RecordLine::from(r))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses forecast lines out of engine output, skipping match lines.
pub fn parse_forecasts(text: &str) -> Result<Vec<ForecastRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(line).map_err(|e| Error::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let RecordLine::Forecast {
            emitted_at,
            state,
            start,
            end,
            mass,
            outcome,
        } = rec
        {
            if start < 1 || end < start {
                return Err(Error::Malformed {
                    line: i + 1,
                    message: format!("invalid interval ({start},{end})"),
                });
            }
            out.push(ForecastRecord {
                emitted_at,
                state,
                interval: ForecastInterval { start, end, mass },
                outcome: Some(outcome),
            });
        }
    }
    Ok(out)
}
