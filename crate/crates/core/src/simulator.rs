//! Synthetic streams drawn from a known symbol model.
//!
//! Randomness comes from SplitMix64 (Steele, Lea & Flood; the reference C code
//! by Vigna), chosen because its output is fully determined by a 64-bit seed
//! and trivial to reimplement elsewhere. Uniform doubles take the top 53 bits:
//! `(x >> 11) * 2^-53`. A symbol is drawn by inverse CDF over the model row in
//! alphabet order: the first symbol whose cumulative probability exceeds the
//! uniform draw.

use crate::error::{Error, Result};
use crate::event::EventStream;
use crate::markov::SymbolModel;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from `probs` by inverse CDF.
    pub fn sample(&mut self, probs: &[f64]) -> usize {
        let u = self.next_f64();
        let mut cum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            cum += p;
            if u < cum {
                return i;
            }
        }
        // rounding left u above the total; take the last symbol with mass
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub model: SymbolModel,
    pub length: usize,
    pub seed: u64,
    /// `order` symbol ids, oldest first. When `None`, each position is drawn
    /// uniformly over the alphabet from the same generator before the stream.
    pub initial_context: Option<Vec<usize>>,
}

impl GeneratorSpec {
    pub fn new(model: SymbolModel, length: usize, seed: u64) -> Self {
        GeneratorSpec {
            model,
            length,
            seed,
            initial_context: None,
        }
    }
}

/// Draws `spec.length` events with timestamps `0, 1, 2, ...`.
pub fn generate(spec: &GeneratorSpec) -> Result<EventStream> {
    let model = &spec.model;
    let k = model.alphabet().len();
    let order = model.order();
    if spec.length == 0 {
        return Err(Error::InvalidParameter("length must be >= 1".into()));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let initial = match &spec.initial_context {
        Some(c) => {
            if c.len() != order || c.iter().any(|&s| s >= k) {
                return Err(Error::InvalidParameter(format!(
                    "initial context must be {order} symbols of the model alphabet"
                )));
            }
            c.clone()
        }
        None => (0..order)
            .map(|_| ((rng.next_f64() * k as f64) as usize).min(k - 1))
            .collect(),
    };
    let mut context = model.context_index(&initial);
    let mut symbols = Vec::with_capacity(spec.length);
    for _ in 0..spec.length {
        let row = model
            .row(context)
            .ok_or_else(|| Error::UnobservedContext(model.context_label(context)))?;
        let s = rng.sample(row);
        symbols.push(s);
        context = model.shift(context, s);
    }
    EventStream::new(
        model.alphabet().clone(),
        symbols.into_iter().enumerate().map(|(t, s)| (t as u64, s)),
    )
}
