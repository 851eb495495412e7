//! Pattern compilation to a minimal, complete DFA for `Σ*·R`.
//!
//! The pipeline is Thompson construction of an ε-NFA for `R`, a `Σ*` loop in
//! front of it, subset construction, Hopcroft minimization and finally a
//! breadth-first renumbering from the start state (symbols visited in
//! alphabet order), so compiling the same pattern always yields the same
//! table. A final state means "a match ends at the current event".

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Alphabet;
use crate::pattern::PatternExpr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    alphabet: Alphabet,
    start: usize,
    finals: Vec<bool>,
    /// Row-major `num_states × alphabet.len()` transition table.
    delta: Vec<usize>,
}

impl Dfa {
    /// Assembles a DFA from raw parts, checking completeness, reachability
    /// and that at least one state is final.
    pub fn from_parts(
        alphabet: Alphabet,
        start: usize,
        finals: &[usize],
        delta: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let bad = |message: String| Error::Format {
            what: "DFA",
            message,
        };
        let n = delta.len();
        let k = alphabet.len();
        if n == 0 {
            return Err(bad("no states".into()));
        }
        if start >= n {
            return Err(bad(format!("start state {start} out of range")));
        }
        let mut flat = Vec::with_capacity(n * k);
        for (q, row) in delta.iter().enumerate() {
            if row.len() != k {
                return Err(bad(format!(
                    "row {q} has {} entries, alphabet has {k}",
                    row.len()
                )));
            }
            if let Some(&t) = row.iter().find(|&&t| t >= n) {
                return Err(bad(format!("row {q} targets missing state {t}")));
            }
            flat.extend_from_slice(row);
        }
        let mut is_final = vec![false; n];
        for &f in finals {
            if f >= n {
                return Err(bad(format!("final state {f} out of range")));
            }
            is_final[f] = true;
        }
        if finals.is_empty() {
            return Err(Error::EmptyLanguage);
        }
        let dfa = Dfa {
            alphabet,
            start,
            finals: is_final,
            delta: flat,
        };
        if dfa.reachable().iter().any(|r| !r) {
            return Err(bad("contains states unreachable from start".into()));
        }
        Ok(dfa)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_final(&self, state: usize) -> bool {
        self.finals[state]
    }

    pub fn finals(&self) -> Vec<usize> {
        (0..self.num_states()).filter(|&q| self.finals[q]).collect()
    }

    #[inline]
    pub fn step(&self, state: usize, symbol: usize) -> usize {
        self.delta[state * self.alphabet.len() + symbol]
    }

    pub fn row(&self, state: usize) -> &[usize] {
        let k = self.alphabet.len();
        &self.delta[state * k..(state + 1) * k]
    }

    /// State reached from `start` after reading `word`.
    pub fn run(&self, word: &[usize]) -> usize {
        word.iter().fold(self.start, |q, &s| self.step(q, s))
    }

    pub fn accepts(&self, word: &[usize]) -> bool {
        self.is_final(self.run(word))
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![self.start];
        seen[self.start] = true;
        while let Some(q) = stack.pop() {
            for &t in self.row(q) {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }

    pub fn to_json(&self) -> String {
        let file = DfaFile {
            alphabet: self.alphabet.names().map(str::to_owned).collect(),
            start: self.start,
            finals: self.finals(),
            delta: (0..self.num_states()).map(|q| self.row(q).to_vec()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("DFA serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DfaFile = serde_json::from_str(text).map_err(|e| Error::Format {
            what: "DFA",
            message: e.to_string(),
        })?;
        let alphabet = Alphabet::from_names(file.alphabet)?;
        Dfa::from_parts(alphabet, file.start, &file.finals, file.delta)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dfa::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DfaFile {
    alphabet: Vec<String>,
    start: usize,
    finals: Vec<usize>,
    delta: Vec<Vec<usize>>,
}

/// Compiles `expr` into the minimal complete DFA accepting every word that has
/// a suffix in the language of `expr`.
pub fn compile(expr: &PatternExpr, alphabet: &Alphabet) -> Result<Dfa> {
    if expr.matches_epsilon() {
        return Err(Error::MatchesEmpty);
    }
    let mut unknown = None;
    expr.for_each_symbol(&mut |s| {
        if unknown.is_none() && alphabet.id(s.as_str()).is_none() {
            unknown = Some(s.to_string());
        }
    });
    if let Some(name) = unknown {
        return Err(Error::AlphabetMismatch(format!(
            "pattern symbol {name} is not in the alphabet"
        )));
    }

    let nfa = Nfa::for_streaming(expr, alphabet);
    let (delta, finals) = nfa.determinize(alphabet.len());
    let (delta, finals) = minimize(&delta, &finals, alphabet.len());

    let final_ids: Vec<usize> = (0..finals.len()).filter(|&q| finals[q]).collect();
    if final_ids.is_empty() {
        return Err(Error::EmptyLanguage);
    }
    Ok(Dfa {
        alphabet: alphabet.clone(),
        start: 0,
        finals,
        delta,
    })
}

// ---------------------------------------------------------------------------
// Thompson construction

#[derive(Default)]
struct Nfa {
    epsilon: Vec<Vec<usize>>,
    labelled: Vec<Vec<(usize, usize)>>,
    start: usize,
    accept: usize,
}

impl Nfa {
    fn add_state(&mut self) -> usize {
        self.epsilon.push(Vec::new());
        self.labelled.push(Vec::new());
        self.epsilon.len() - 1
    }

    /// ε-NFA for `Σ*·expr`: a start state looping on every symbol with an
    /// ε-edge into the Thompson fragment of `expr`.
    fn for_streaming(expr: &PatternExpr, alphabet: &Alphabet) -> Self {
        let mut nfa = Nfa::default();
        let prefix = nfa.add_state();
        for s in 0..alphabet.len() {
            nfa.labelled[prefix].push((s, prefix));
        }
        let (start, accept) = nfa.fragment(expr, alphabet);
        nfa.epsilon[prefix].push(start);
        nfa.start = prefix;
        nfa.accept = accept;
        nfa
    }

    fn fragment(&mut self, expr: &PatternExpr, alphabet: &Alphabet) -> (usize, usize) {
        match expr {
            PatternExpr::Symbol(t) => {
                let s = self.add_state();
                let a = self.add_state();
                let id = alphabet.id(t.as_str()).expect("symbols checked before construction");
                self.labelled[s].push((id, a));
                (s, a)
            }
            PatternExpr::Seq(l, r) => {
                let (ls, la) = self.fragment(l, alphabet);
                let (rs, ra) = self.fragment(r, alphabet);
                self.epsilon[la].push(rs);
                (ls, ra)
            }
            PatternExpr::Or(l, r) => {
                let s = self.add_state();
                let (ls, la) = self.fragment(l, alphabet);
                let (rs, ra) = self.fragment(r, alphabet);
                let a = self.add_state();
                self.epsilon[s].extend([ls, rs]);
                self.epsilon[la].push(a);
                self.epsilon[ra].push(a);
                (s, a)
            }
            PatternExpr::Iter(b) => {
                let s = self.add_state();
                let (bs, ba) = self.fragment(b, alphabet);
                let a = self.add_state();
                self.epsilon[s].extend([bs, a]);
                self.epsilon[ba].extend([bs, a]);
                (s, a)
            }
        }
    }

    fn closure(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(q) = stack.pop() {
            if set.insert(q) {
                stack.extend(self.epsilon[q].iter().copied());
            }
        }
        set
    }

    /// Subset construction. The empty subset, if reached, becomes an ordinary
    /// (sink) state, so the result is always complete.
    fn determinize(&self, k: usize) -> (Vec<usize>, Vec<bool>) {
        let initial = self.closure([self.start]);
        let mut ids: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        let mut subsets = vec![initial.clone()];
        ids.insert(initial, 0);
        let mut delta = Vec::new();
        let mut next = 0;
        while next < subsets.len() {
            for symbol in 0..k {
                let moved = subsets[next].iter().flat_map(|&q| {
                    self.labelled[q]
                        .iter()
                        .filter(move |&&(s, _)| s == symbol)
                        .map(|&(_, t)| t)
                });
                let target = self.closure(moved);
                let id = match ids.get(&target) {
                    Some(&id) => id,
                    None => {
                        let id = subsets.len();
                        ids.insert(target.clone(), id);
                        subsets.push(target);
                        id
                    }
                };
                delta.push(id);
            }
            next += 1;
        }
        let finals = subsets.iter().map(|s| s.contains(&self.accept)).collect();
        (delta, finals)
    }
}

// ---------------------------------------------------------------------------
// Hopcroft minimization

/// Returns the quotient automaton. Input must be complete with every state
/// reachable from state 0.
fn minimize(delta: &[usize], finals: &[bool], k: usize) -> (Vec<usize>, Vec<bool>) {
    let n = finals.len();
    // inverse[symbol][target] = sources
    let mut inverse = vec![vec![Vec::new(); n]; k];
    for q in 0..n {
        for s in 0..k {
            inverse[s][delta[q * k + s]].push(q);
        }
    }

    let (acc, rej): (Vec<usize>, Vec<usize>) = (0..n).partition(|&q| finals[q]);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of = vec![0; n];
    for part in [acc, rej] {
        if !part.is_empty() {
            for &q in &part {
                block_of[q] = blocks.len();
            }
            blocks.push(part);
        }
    }

    let mut pending: VecDeque<(usize, usize)> = VecDeque::new();
    let mut queued: BTreeSet<(usize, usize)> = BTreeSet::new();
    if blocks.len() == 2 {
        let smaller = if blocks[0].len() <= blocks[1].len() { 0 } else { 1 };
        for s in 0..k {
            pending.push_back((smaller, s));
            queued.insert((smaller, s));
        }
    }

    let mut hits = vec![0usize; n];
    let mut marked = vec![false; n];
    while let Some((splitter, symbol)) = pending.pop_front() {
        queued.remove(&(splitter, symbol));
        let preimage: Vec<usize> = blocks[splitter]
            .iter()
            .flat_map(|&t| inverse[symbol][t].iter().copied())
            .collect();
        if preimage.is_empty() {
            continue;
        }
        let mut touched = Vec::new();
        for &q in &preimage {
            if !marked[q] {
                marked[q] = true;
                let b = block_of[q];
                if hits[b] == 0 {
                    touched.push(b);
                }
                hits[b] += 1;
            }
        }
        for b in touched {
            if hits[b] < blocks[b].len() {
                let (inside, outside): (Vec<usize>, Vec<usize>) =
                    blocks[b].iter().partition(|&&q| marked[q]);
                let new_id = blocks.len();
                for &q in &inside {
                    block_of[q] = new_id;
                }
                blocks[b] = outside;
                blocks.push(inside);
                for s in 0..k {
                    if queued.contains(&(b, s)) {
                        pending.push_back((new_id, s));
                        queued.insert((new_id, s));
                    } else {
                        let pick = if blocks[b].len() <= blocks[new_id].len() {
                            b
                        } else {
                            new_id
                        };
                        pending.push_back((pick, s));
                        queued.insert((pick, s));
                    }
                }
            }
            hits[b] = 0;
        }
        for q in preimage {
            marked[q] = false;
        }
    }

    let m = blocks.len();
    let mut out = vec![0; m * k];
    let mut out_finals = vec![false; m];
    for (b, members) in blocks.iter().enumerate() {
        let rep = members[0];
        out_finals[b] = finals[rep];
        for s in 0..k {
            out[b * k + s] = block_of[delta[rep * k + s]];
        }
    }
    // state 0 of the input is the start; make its block the new state 0
    renumber_bfs(&out, &out_finals, k, block_of[0])
}

/// Renumbers states in breadth-first discovery order from `start`, symbols in
/// alphabet order, dropping unreachable states. The start becomes state 0.
fn renumber_bfs(delta: &[usize], finals: &[bool], k: usize, start: usize) -> (Vec<usize>, Vec<bool>) {
    let n = finals.len();
    let mut order = Vec::with_capacity(n);
    let mut new_id = vec![usize::MAX; n];
    new_id[start] = 0;
    order.push(start);
    let mut head = 0;
    while head < order.len() {
        let q = order[head];
        head += 1;
        for s in 0..k {
            let t = delta[q * k + s];
            if new_id[t] == usize::MAX {
                new_id[t] = order.len();
                order.push(t);
            }
        }
    }
    let mut out = Vec::with_capacity(order.len() * k);
    for &q in &order {
        out.extend((0..k).map(|s| new_id[delta[q * k + s]]));
    }
    let out_finals = order.iter().map(|&q| finals[q]).collect();
    (out, out_finals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::parse_pattern;

    fn compile_str(p: &str, names: &[&str]) -> Result<Dfa> {
        let a = Alphabet::from_names(names.iter().copied()).unwrap();
        compile(&parse_pattern(p, &a)?, &a)
    }

    #[test]
    fn abbb_table() {
        let dfa = compile_str("a;b;b;b", &["a", "b"]).unwrap();
        assert_eq!(dfa.num_states(), 5);
        assert_eq!(dfa.start(), 0);
        assert_eq!(dfa.finals(), vec![4]);
        let expected = [[1, 0], [1, 2], [1, 3], [1, 4], [1, 0]];
        for (q, row) in expected.iter().enumerate() {
            assert_eq!(dfa.row(q), row, "state {q}");
        }
        assert_eq!(dfa.step(3, 1), 4);
        assert_eq!(dfa.step(4, 0), 1);
    }

    #[test]
    fn unary_single_symbol() {
        let dfa = compile_str("a", &["a"]).unwrap();
        assert_eq!(dfa.num_states(), 2);
        assert_eq!(dfa.finals(), vec![1]);
        assert_eq!(dfa.row(0), &[1]);
        assert_eq!(dfa.row(1), &[1]);
    }

    #[test]
    fn epsilon_pattern_rejected() {
        let err = compile_str("a*", &["a", "b"]).unwrap_err();
        assert_eq!(err.to_string(), "pattern matches the empty sequence");
    }

    #[test]
    fn accepts_uses_suffix_semantics() {
        let dfa = compile_str("a;b;b;b", &["a", "b"]).unwrap();
        assert!(dfa.accepts(&[1, 0, 1, 1, 1]));
        assert!(!dfa.accepts(&[0, 1, 1]));
        assert!(!dfa.accepts(&[]));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let dfa = compile_str("(a|b);c*;a", &["a", "b", "c"]).unwrap();
        let text = dfa.to_json();
        assert_eq!(Dfa::from_json(&text).unwrap(), dfa);

        let a = Alphabet::from_names(["a"]).unwrap();
        assert!(Dfa::from_parts(a.clone(), 0, &[1], vec![vec![1], vec![2]]).is_err());
        assert!(Dfa::from_parts(a.clone(), 0, &[], vec![vec![0]]).is_err());
        // state 1 unreachable
        assert!(Dfa::from_parts(a.clone(), 0, &[0], vec![vec![0], vec![0]]).is_err());
        assert!(Dfa::from_json("{\"alphabet\":[\"a\"]}").is_err());
    }

    #[test]
    fn compilation_is_canonical() {
        let a = compile_str("(a;b)*;c|b;a", &["a", "b", "c"]).unwrap();
        let b = compile_str("(a;b)*;c|b;a", &["a", "b", "c"]).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
