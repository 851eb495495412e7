//! Order-m symbol model and the pattern Markov chain (PMC).
//!
//! Contexts are the last `m` symbols, oldest first, encoded in base `|Σ|` with
//! the oldest symbol most significant. Appending a symbol is therefore
//! `(ctx * |Σ| + σ) mod |Σ|^m`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::automaton::Dfa;
use crate::error::{Error, Result};
use crate::event::{Alphabet, EventStream};

pub const MAX_CONTEXTS: usize = 1_000_000;

/// Conditional distribution of the next symbol given the previous `order`
/// symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolModel {
    alphabet: Alphabet,
    order: usize,
    smoothing: f64,
    /// `num_contexts × |Σ|`, row-major.
    probs: Vec<f64>,
    /// Rows that have no estimate (unobserved context with zero smoothing).
    undefined: Vec<bool>,
}

pub fn num_contexts(alphabet_size: usize, order: usize) -> Result<usize> {
    u32::try_from(order)
        .ok()
        .and_then(|m| alphabet_size.checked_pow(m))
        .filter(|&n| n <= MAX_CONTEXTS)
        .ok_or(Error::ContextTableTooLarge {
            alphabet_size,
            order,
        })
}

impl SymbolModel {
    /// Builds a model from explicit rows, one per context in index order.
    pub fn from_rows(alphabet: Alphabet, order: usize, rows: Vec<Option<Vec<f64>>>) -> Result<Self> {
        let k = alphabet.len();
        let contexts = num_contexts(k, order)?;
        if rows.len() != contexts {
            return Err(Error::Format {
                what: "model",
                message: format!("expected {contexts} context rows, got {}", rows.len()),
            });
        }
        let mut probs = Vec::with_capacity(contexts * k);
        let mut undefined = Vec::with_capacity(contexts);
        for (c, row) in rows.into_iter().enumerate() {
            match row {
                Some(row) => {
                    let label = context_label(&alphabet, order, c);
                    if row.len() != k {
                        return Err(Error::Format {
                            what: "model",
                            message: format!("row [{label}] has {} entries, alphabet has {k}", row.len()),
                        });
                    }
                    let sum: f64 = row.iter().sum();
                    if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::Format {
                            what: "model",
                            message: format!("row [{label}] is not a probability vector"),
                        });
                    }
                    probs.extend(row);
                    undefined.push(false);
                }
                None => {
                    probs.extend(std::iter::repeat_n(0.0, k));
                    undefined.push(true);
                }
            }
        }
        Ok(SymbolModel {
            alphabet,
            order,
            smoothing: 0.0,
            probs,
            undefined,
        })
    }

    /// Order-0 model with the given symbol probabilities.
    pub fn iid(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        SymbolModel::from_rows(alphabet, 0, vec![Some(probs)])
    }

    pub fn uniform(alphabet: Alphabet, order: usize) -> Result<Self> {
        let k = alphabet.len();
        let contexts = num_contexts(k, order)?;
        SymbolModel::from_rows(alphabet, order, vec![Some(vec![1.0 / k as f64; k]); contexts])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn num_contexts(&self) -> usize {
        self.undefined.len()
    }

    pub fn is_defined(&self, context: usize) -> bool {
        !self.undefined[context]
    }

    /// Distribution over the next symbol, or `None` for an undefined context.
    pub fn row(&self, context: usize) -> Option<&[f64]> {
        let k = self.alphabet.len();
        (!self.undefined[context]).then(|| &self.probs[context * k..(context + 1) * k])
    }

    #[inline]
    pub fn prob(&self, context: usize, symbol: usize) -> f64 {
        self.probs[context * self.alphabet.len() + symbol]
    }

    /// Context after observing `symbol`.
    #[inline]
    pub fn shift(&self, context: usize, symbol: usize) -> usize {
        if self.order == 0 {
            0
        } else {
            (context * self.alphabet.len() + symbol) % self.num_contexts()
        }
    }

    /// Index of a context given as symbol ids, oldest first.
    pub fn context_index(&self, symbols: &[usize]) -> usize {
        debug_assert_eq!(symbols.len(), self.order);
        symbols
            .iter()
            .fold(0, |acc, &s| acc * self.alphabet.len() + s)
    }

    /// Symbol ids of a context, oldest first.
    pub fn context_symbols(&self, context: usize) -> Vec<usize> {
        decode_context(self.alphabet.len(), self.order, context)
    }

    pub fn context_label(&self, context: usize) -> String {
        context_label(&self.alphabet, self.order, context)
    }

    pub fn to_json(&self) -> String {
        let table: Vec<(String, Option<&[f64]>)> = (0..self.num_contexts())
            .map(|c| (self.context_label(c), self.row(c)))
            .collect();
        let file = ModelFileOut {
            alphabet: self.alphabet.names().collect(),
            order: self.order,
            smoothing: self.smoothing,
            table: OrderedTable(table),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFileIn = serde_json::from_str(text).map_err(|e| Error::Format {
            what: "model",
            message: e.to_string(),
        })?;
        let alphabet = Alphabet::from_names(file.alphabet)?;
        if !(file.smoothing >= 0.0 && file.smoothing.is_finite()) {
            return Err(Error::Format {
                what: "model",
                message: format!("smoothing {} must be >= 0", file.smoothing),
            });
        }
        let contexts = num_contexts(alphabet.len(), file.order)?;
        let mut table = file.table;
        if table.len() != contexts {
            return Err(Error::Format {
                what: "model",
                message: format!("expected {contexts} context rows, got {}", table.len()),
            });
        }
        let rows = (0..contexts)
            .map(|c| {
                let label = context_label(&alphabet, file.order, c);
                table.remove(&label).ok_or_else(|| Error::Format {
                    what: "model",
                    message: format!("missing row for context [{label}]"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = SymbolModel::from_rows(alphabet, file.order, rows)?;
        model.smoothing = file.smoothing;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SymbolModel::from_json(&text)
    }
}

fn decode_context(k: usize, order: usize, mut context: usize) -> Vec<usize> {
    let mut out = vec![0; order];
    for slot in out.iter_mut().rev() {
        *slot = context % k;
        context /= k;
    }
    out
}

fn context_label(alphabet: &Alphabet, order: usize, context: usize) -> String {
    decode_context(alphabet.len(), order, context)
        .into_iter()
        .map(|s| alphabet.name(s))
        .collect::<Vec<_>>()
        .join(",")
}

struct OrderedTable<'a>(Vec<(String, Option<&'a [f64]>)>);

impl Serialize for OrderedTable<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter().map(|(k, v)| (k, v)))
    }
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    alphabet: Vec<&'a str>,
    order: usize,
    smoothing: f64,
    table: OrderedTable<'a>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFileIn {
    alphabet: Vec<String>,
    order: usize,
    smoothing: f64,
    table: BTreeMap<String, Option<Vec<f64>>>,
}

/// Additive-smoothing estimate
/// `P(σ|c) = (count(cσ) + α) / (count(c·) + α|Σ|)`.
///
/// Only positions with a full context of `order` preceding events are counted.
/// With `smoothing = 0` unobserved contexts are left undefined;
/// [`build_pmc`] rejects models with undefined rows.
pub fn train(stream: &EventStream, order: usize, smoothing: f64) -> Result<SymbolModel> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "smoothing must be >= 0, got {smoothing}"
        )));
    }
    let alphabet = stream.alphabet().clone();
    let k = alphabet.len();
    let contexts = num_contexts(k, order)?;

    let mut counts = vec![0u64; contexts * k];
    let mut context = 0usize;
    for (i, symbol) in stream.symbols().enumerate() {
        if i >= order {
            counts[context * k + symbol] += 1;
        }
        if order > 0 {
            context = (context * k + symbol) % contexts;
        }
    }

    let mut probs = Vec::with_capacity(contexts * k);
    let mut undefined = Vec::with_capacity(contexts);
    for row in counts.chunks(k) {
        let total: u64 = row.iter().sum();
        let denom = total as f64 + smoothing * k as f64;
        if denom == 0.0 {
            probs.extend(std::iter::repeat_n(0.0, k));
            undefined.push(true);
        } else {
            probs.extend(row.iter().map(|&c| (c as f64 + smoothing) / denom));
            undefined.push(false);
        }
    }
    Ok(SymbolModel {
        alphabet,
        order,
        smoothing,
        probs,
        undefined,
    })
}

/// Markov chain over reachable `(dfa state, context)` pairs. States whose DFA
/// component is final are absorbing for first-passage analysis.
///
/// State ids are assigned in ascending `(dfa state, context)` order, so for
/// order 0 the chain's state ids coincide with the DFA's.
#[derive(Debug, Clone)]
pub struct Pmc {
    k: usize,
    order: usize,
    states: Vec<(usize, usize)>,
    absorbing: Vec<bool>,
    /// `n × k` successor ids.
    next: Vec<usize>,
    /// `n × k` probability of each symbol from the state's context.
    probs: Vec<f64>,
    index: HashMap<(usize, usize), usize>,
}

/// Builds the product chain. For order 0 the seed is the DFA start; for
/// order m ≥ 1 the seeds are `(start, c)` for every context `c`. All symbols
/// are followed during exploration, including zero-probability ones, so every
/// pair the runtime can reach has a chain state.
pub fn build_pmc(dfa: &Dfa, model: &SymbolModel) -> Result<Pmc> {
    if dfa.alphabet() != model.alphabet() {
        let names = |a: &Alphabet| a.names().collect::<Vec<_>>().join(",");
        return Err(Error::AlphabetMismatch(format!(
            "DFA alphabet [{}] differs from model alphabet [{}]",
            names(dfa.alphabet()),
            names(model.alphabet())
        )));
    }
    let k = model.alphabet().len();
    let contexts = model.num_contexts();

    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
    let mut stack: Vec<(usize, usize)> = (0..contexts).map(|c| (dfa.start(), c)).collect();
    let mut found = Vec::new();
    while let Some(pair) = stack.pop() {
        if seen.insert(pair, ()).is_some() {
            continue;
        }
        found.push(pair);
        let (q, c) = pair;
        for s in 0..k {
            let succ = (dfa.step(q, s), model.shift(c, s));
            if !seen.contains_key(&succ) {
                stack.push(succ);
            }
        }
    }
    found.sort_unstable();

    if let Some(&(_, c)) = found.iter().find(|&&(_, c)| !model.is_defined(c)) {
        return Err(Error::UnobservedContext(model.context_label(c)));
    }

    let index: HashMap<(usize, usize), usize> =
        found.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let n = found.len();
    let mut next = Vec::with_capacity(n * k);
    let mut probs = Vec::with_capacity(n * k);
    for &(q, c) in &found {
        for s in 0..k {
            next.push(index[&(dfa.step(q, s), model.shift(c, s))]);
            probs.push(model.prob(c, s));
        }
    }
    let absorbing = found.iter().map(|&(q, _)| dfa.is_final(q)).collect();
    Ok(Pmc {
        k,
        order: model.order(),
        states: found,
        absorbing,
        next,
        probs,
        index,
    })
}

impl Pmc {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `(dfa state, context index)` of a chain state.
    pub fn state(&self, id: usize) -> (usize, usize) {
        self.states[id]
    }

    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    pub fn dfa_state(&self, id: usize) -> usize {
        self.states[id].0
    }

    pub fn index_of(&self, dfa_state: usize, context: usize) -> Option<usize> {
        self.index.get(&(dfa_state, context)).copied()
    }

    pub fn is_absorbing(&self, id: usize) -> bool {
        self.absorbing[id]
    }

    pub fn transient_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(|&s| !self.absorbing[s])
    }

    #[inline]
    pub fn next(&self, id: usize, symbol: usize) -> usize {
        self.next[id * self.k + symbol]
    }

    #[inline]
    pub fn prob(&self, id: usize, symbol: usize) -> f64 {
        self.probs[id * self.k + symbol]
    }

    /// Outgoing `(target, probability)` pairs, one per symbol. Targets may repeat.
    pub fn transitions(&self, id: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.k).map(move |s| (self.next(id, s), self.prob(id, s)))
    }

    /// One-step probability of entering the absorbing set from `id`.
    pub fn absorption_mass(&self, id: usize) -> f64 {
        self.transitions(id)
            .filter(|&(t, _)| self.absorbing[t])
            .fold(0.0, |acc, (_, p)| acc + p)
    }

    /// Dense `n × n` transition matrix; duplicate targets are summed.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.num_states();
        let mut m = vec![vec![0.0; n]; n];
        for (s, row) in m.iter_mut().enumerate() {
            for (t, p) in self.transitions(s) {
                row[t] += p;
            }
        }
        m
    }
}
