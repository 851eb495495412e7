//! Independent oracles and the shared pattern corpus.
//!
//! Nothing here goes through the compiler, the chain construction or the
//! waiting-time recurrence: languages are decided by walking the AST, first
//! passage by enumerating paths, and minimal windows by scanning every window.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeSet, HashMap};

use cer_forecast::automaton::compile;
use cer_forecast::pattern::parse_pattern;
use cer_forecast::{Alphabet, Dfa, PatternExpr, SymbolModel};

pub const CORPUS: &[(&str, &[&str])] = &[
    ("a;b;b;b", &["a", "b"]),
    ("a", &["a", "b"]),
    ("a|b;c", &["a", "b", "c"]),
    ("(a|b);c*", &["a", "b", "c"]),
    ("a;b*;c", &["a", "b", "c"]),
    ("(a;b)*;c", &["a", "b", "c"]),
    ("a;(b|c);a", &["a", "b", "c"]),
    ("(a|b)*;a;b", &["a", "b"]),
    ("a;a*;b;b", &["a", "b"]),
    ("(a;b|b;a);c", &["a", "b", "c"]),
    ("b;(a;a)*;b", &["a", "b"]),
    ("c;(a|b);(a|b);c", &["a", "b", "c"]),
];

pub fn alphabet(names: &[&str]) -> Alphabet {
    Alphabet::from_names(names.iter().copied()).unwrap()
}

pub fn corpus() -> Vec<(String, Alphabet, PatternExpr, Dfa)> {
    CORPUS
        .iter()
        .map(|(p, names)| {
            let a = alphabet(names);
            let e = parse_pattern(p, &a).unwrap();
            let d = compile(&e, &a).unwrap();
            (p.to_string(), a, e, d)
        })
        .collect()
}

/// Non-uniform test models: order 0 with `p_i ∝ i + 2`, order 1 with
/// `p(i | c) ∝ ((i + 2c) mod k) + 1`.
pub fn test_model(alphabet: &Alphabet, order: usize) -> SymbolModel {
    let k = alphabet.len();
    let normalize = |w: Vec<f64>| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect::<Vec<_>>()
    };
    let rows = match order {
        0 => vec![Some(normalize((0..k).map(|i| (i + 2) as f64).collect()))],
        1 => (0..k)
            .map(|c| Some(normalize((0..k).map(|i| (((i + 2 * c) % k) + 1) as f64).collect())))
            .collect(),
        _ => unimplemented!("corpus models are order 0 or 1"),
    };
    SymbolModel::from_rows(alphabet.clone(), order, rows).unwrap()
}

// ---------------------------------------------------------------------------
// Language oracle

fn ends(expr: &PatternExpr, alphabet: &Alphabet, word: &[usize], i: usize) -> BTreeSet<usize> {
    match expr {
        PatternExpr::Symbol(t) => {
            let id = alphabet.id(t.as_str()).unwrap();
            if word.get(i) == Some(&id) {
                BTreeSet::from([i + 1])
            } else {
                BTreeSet::new()
            }
        }
        PatternExpr::Seq(l, r) => ends(l, alphabet, word, i)
            .into_iter()
            .flat_map(|j| ends(r, alphabet, word, j))
            .collect(),
        PatternExpr::Or(l, r) => {
            let mut s = ends(l, alphabet, word, i);
            s.extend(ends(r, alphabet, word, i));
            s
        }
        PatternExpr::Iter(b) => {
            let mut reach = BTreeSet::from([i]);
            let mut frontier = vec![i];
            while let Some(j) = frontier.pop() {
                for e in ends(b, alphabet, word, j) {
                    if reach.insert(e) {
                        frontier.push(e);
                    }
                }
            }
            reach
        }
    }
}

/// Whole-word membership in L(expr).
pub fn naive_matches(expr: &PatternExpr, alphabet: &Alphabet, word: &[usize]) -> bool {
    ends(expr, alphabet, word, 0).contains(&word.len())
}

/// Some suffix of `word` is in L(expr).
pub fn naive_suffix_accepts(expr: &PatternExpr, alphabet: &Alphabet, word: &[usize]) -> bool {
    (0..=word.len()).any(|i| ends(expr, alphabet, word, i).contains(&word.len()))
}

/// All words over `k` symbols of length exactly `n`, lexicographic.
pub fn words(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..k).map(move |s| {
                    let mut w = w.clone();
                    w.push(s);
                    w
                })
            })
            .collect();
    }
    out
}

/// All words of length `0..=n` in shortlex order.
pub fn words_upto(k: usize, n: usize) -> Vec<Vec<usize>> {
    (0..=n).flat_map(|l| words(k, l)).collect()
}

/// Canonical minimal DFA of `Σ*·L(expr)` by Myhill–Nerode: prefixes (in
/// shortlex order, up to `prefix_len`) are grouped by which extensions of
/// length ≤ `suffix_len` are accepted; classes are numbered by first
/// appearance, which is breadth-first order from the empty prefix.
pub fn myhill_nerode(
    expr: &PatternExpr,
    alphabet: &Alphabet,
    prefix_len: usize,
    suffix_len: usize,
) -> (Vec<Vec<usize>>, Vec<usize>) {
    let k = alphabet.len();
    let suffixes = words_upto(k, suffix_len);
    let signature = |u: &[usize]| -> Vec<bool> {
        suffixes
            .iter()
            .map(|z| {
                let w: Vec<usize> = u.iter().chain(z).copied().collect();
                naive_suffix_accepts(expr, alphabet, &w)
            })
            .collect()
    };
    let mut ids: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut reps: Vec<Vec<usize>> = Vec::new();
    for u in words_upto(k, prefix_len) {
        let sig = signature(&u);
        if let std::collections::hash_map::Entry::Vacant(slot) = ids.entry(sig) {
            slot.insert(reps.len());
            reps.push(u);
        }
    }
    let delta = reps
        .iter()
        .map(|u| {
            (0..k)
                .map(|s| {
                    let mut v = u.clone();
                    v.push(s);
                    *ids.get(&signature(&v)).expect("prefix length too small for this pattern")
                })
                .collect()
        })
        .collect();
    let finals = reps
        .iter()
        .enumerate()
        .filter(|(_, u)| naive_suffix_accepts(expr, alphabet, u))
        .map(|(i, _)| i)
        .collect();
    (delta, finals)
}

/// Pairs of distinct states that no word distinguishes (table filling).
pub fn equivalent_pairs(dfa: &Dfa) -> Vec<(usize, usize)> {
    let n = dfa.num_states();
    let k = dfa.alphabet().len();
    let mut dist = vec![vec![false; n]; n];
    for p in 0..n {
        for q in 0..n {
            dist[p][q] = dfa.is_final(p) != dfa.is_final(q);
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for p in 0..n {
            for q in 0..n {
                if !dist[p][q] && (0..k).any(|s| dist[dfa.step(p, s)][dfa.step(q, s)]) {
                    dist[p][q] = true;
                    changed = true;
                }
            }
        }
    }
    let mut out = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            if !dist[p][q] {
                out.push((p, q));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// First-passage oracle

fn context_index(k: usize, ctx: &[usize]) -> usize {
    ctx.iter().fold(0, |acc, &s| acc * k + s)
}

/// `W(1..=kmax)` from DFA state `q` with context `ctx` (oldest first), by
/// enumerating every symbol path and stopping each at its first final state.
pub fn enumerate_first_passage(
    dfa: &Dfa,
    model: &SymbolModel,
    q: usize,
    ctx: &[usize],
    kmax: usize,
) -> Vec<f64> {
    fn walk(
        dfa: &Dfa,
        model: &SymbolModel,
        q: usize,
        ctx: &mut Vec<usize>,
        depth: usize,
        p: f64,
        out: &mut [f64],
    ) {
        let k = dfa.alphabet().len();
        let row = model.row(context_index(k, ctx)).unwrap().to_vec();
        for (s, &ps) in row.iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            let pq = p * ps;
            let next = dfa.step(q, s);
            if dfa.is_final(next) {
                out[depth] += pq;
            } else if depth + 1 < out.len() {
                let saved = ctx.clone();
                if !ctx.is_empty() {
                    ctx.remove(0);
                    ctx.push(s);
                }
                walk(dfa, model, next, ctx, depth + 1, pq, out);
                *ctx = saved;
            }
        }
    }
    let mut out = vec![0.0; kmax];
    walk(dfa, model, q, &mut ctx.to_vec(), 0, 1.0, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Window oracle

/// Shortest-then-earliest window with direct-sum mass ≥ theta, as 1-based
/// inclusive bounds; `None` if no window qualifies.
pub fn brute_force_window(w: &[f64], theta: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for s in 0..w.len() {
        for e in s..w.len() {
            let mass = w[s..=e].iter().fold(0.0, |a, x| a + x);
            if mass >= theta {
                let better = match best {
                    None => true,
                    Some((bs, be)) => (e - s, s) < (be - bs, bs),
                };
                if better {
                    best = Some((s, e));
                }
            }
        }
    }
    best.map(|(s, e)| (s + 1, e + 1))
}
