mod common;

use cer_forecast::automaton::compile;
use cer_forecast::engine::{self, Engine, Outcome};
use cer_forecast::evaluation::{evaluate, parse_metrics_csv, write_metrics_csv};
use cer_forecast::event::{parse_stream, read_stream, write_csv, write_stream};
use cer_forecast::forecasting::{forecast_interval, waiting_times};
use cer_forecast::markov::{build_pmc, train};
use cer_forecast::pattern::{parse_pattern, print_pattern};
use cer_forecast::simulator::{generate, GeneratorSpec, SplitMix64};
use cer_forecast::{Alphabet, EventStream, PatternExpr, SymbolModel};
use common::*;
use proptest::prelude::*;

fn arb_pattern(depth: u32) -> impl Strategy<Value = PatternExpr> {
    let leaf = prop_oneof![Just("a"), Just("b"), Just("c")]
        .prop_map(|n| PatternExpr::symbol(n).unwrap());
    leaf.prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| PatternExpr::seq(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| PatternExpr::or(l, r)),
            inner.prop_map(PatternExpr::iter),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(e in arb_pattern(5)) {
        prop_assume!(e.depth() <= 6);
        let a = alphabet(&["a", "b", "c"]);
        let text = print_pattern(&e);
        prop_assert_eq!(parse_pattern(&text, &a).unwrap(), e);
    }

    #[test]
    fn compiled_random_patterns_agree_with_ast(e in arb_pattern(4)) {
        let a = alphabet(&["a", "b", "c"]);
        prop_assert_eq!(e.matches_epsilon(), naive_matches(&e, &a, &[]));
        prop_assume!(!e.matches_epsilon());
        let dfa = compile(&e, &a).unwrap();
        prop_assert!(equivalent_pairs(&dfa).is_empty());
        for w in words_upto(3, 5) {
            prop_assert_eq!(dfa.accepts(&w), naive_suffix_accepts(&e, &a, &w), "word {:?}", w);
        }
    }

    #[test]
    fn interval_is_minimal_and_earliest(
        raw in prop::collection::vec(0.0f64..1.0, 1..40),
        zeros in prop::collection::vec(any::<bool>(), 40),
        theta in 0.01f64..1.0,
    ) {
        // sparse, subnormalized vectors like real waiting-time rows
        let w: Vec<f64> = raw.iter().zip(&zeros).map(|(x, z)| if *z { 0.0 } else { *x }).collect();
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let w: Vec<f64> = w.iter().map(|x| x / total * 0.97).collect();
        match (forecast_interval(&w, theta), brute_force_window(&w, theta)) {
            (Ok(iv), Some((s, e))) => {
                prop_assert_eq!((iv.start, iv.end), (s, e));
                prop_assert!(iv.mass >= theta);
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "got {:?}, oracle {:?}", got, want),
        }
    }

    #[test]
    fn raising_theta_never_shortens(
        raw in prop::collection::vec(0.0f64..1.0, 1..30),
        t1 in 0.01f64..1.0,
        t2 in 0.01f64..1.0,
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 0.0);
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        if let (Ok(a), Ok(b)) = (forecast_interval(&w, lo), forecast_interval(&w, hi)) {
            prop_assert!(b.spread() >= a.spread());
        }
    }

    #[test]
    fn stream_round_trip(items in prop::collection::vec((0u64..5, 0usize..3), 0..60)) {
        let a = alphabet(&["x", "y_1", "Z"]);
        let mut t = 0;
        let items: Vec<(u64, usize)> = items.into_iter().map(|(dt, s)| { t += dt; (t, s) }).collect();
        let s = EventStream::new(a.clone(), items).unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let back = parse_stream(std::str::from_utf8(&buf).unwrap(), Some(&a)).unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn abbb_is_the_myhill_nerode_automaton() {
    let a = alphabet(&["a", "b"]);
    let e = parse_pattern("a;b;b;b", &a).unwrap();
    let (delta, finals) = myhill_nerode(&e, &a, 5, 5);
    let dfa = compile(&e, &a).unwrap();
    assert_eq!(dfa.num_states(), delta.len());
    for (q, row) in delta.iter().enumerate() {
        assert_eq!(dfa.row(q), row.as_slice());
    }
    assert_eq!(dfa.finals(), finals);
}

#[test]
fn small_corpus_patterns_match_myhill_nerode() {
    for (p, a, e, dfa) in corpus() {
        if dfa.num_states() > 6 {
            continue;
        }
        let (delta, finals) = myhill_nerode(&e, &a, 5, 5);
        assert_eq!(dfa.num_states(), delta.len(), "{p}");
        for (q, row) in delta.iter().enumerate() {
            assert_eq!(dfa.row(q), row.as_slice(), "{p} state {q}");
        }
        assert_eq!(dfa.finals(), finals, "{p}");
    }
}

#[test]
fn corpus_dfas_are_minimal_canonical_and_never_accept_empty() {
    for (p, a, e, dfa) in corpus() {
        assert!(equivalent_pairs(&dfa).is_empty(), "{p}");
        assert!(!dfa.accepts(&[]), "{p}");
        assert_eq!(compile(&e, &a).unwrap().to_json(), dfa.to_json(), "{p}");
        for q in 0..dfa.num_states() {
            assert_eq!(dfa.row(q).len(), a.len());
        }
    }
}

#[test]
fn waiting_times_match_enumeration_on_small_chains() {
    for (p, a, _, dfa) in corpus() {
        for order in [0, 1] {
            let model = test_model(&a, order);
            let pmc = build_pmc(&dfa, &model).unwrap();
            if pmc.num_states() > 8 {
                continue;
            }
            let wtt = waiting_times(&pmc, 10).unwrap();
            for (s, row) in wtt.rows() {
                let (q, c) = pmc.state(s);
                let oracle = enumerate_first_passage(&dfa, &model, q, &model.context_symbols(c), 10);
                for k in 0..10 {
                    assert!((row[k] - oracle[k]).abs() < 1e-9, "{p} m={order} state {s} k={}", k + 1);
                }
            }
        }
    }
}

#[test]
fn abbb_state_one_by_enumeration() {
    let a = alphabet(&["a", "b"]);
    let dfa = compile(&parse_pattern("a;b;b;b", &a).unwrap(), &a).unwrap();
    let model = SymbolModel::iid(a, vec![0.5, 0.5]).unwrap();
    let w = enumerate_first_passage(&dfa, &model, 1, &[], 4);
    assert_eq!(w, vec![0.0, 0.0, 0.125, 0.0625]);
    let wtt = waiting_times(&build_pmc(&dfa, &model).unwrap(), 12).unwrap();
    let row = wtt.row(1).unwrap();
    for k in 0..4 {
        assert!((row[k] - w[k]).abs() < 1e-12);
    }
    let iv = forecast_interval(row, 0.5).unwrap();
    assert_eq!(brute_force_window(row, 0.5), Some((iv.start, iv.end)));
}

#[test]
fn cumulative_mass_grows_with_horizon() {
    for (_, a, _, dfa) in corpus() {
        let model = test_model(&a, 1);
        let pmc = build_pmc(&dfa, &model).unwrap();
        let short = waiting_times(&pmc, 20).unwrap();
        let long = waiting_times(&pmc, 200).unwrap();
        for (s, row) in long.rows() {
            let partial: f64 = short.row(s).unwrap().iter().sum();
            let full: f64 = row.iter().sum();
            assert!(full + 1e-15 >= partial);
            assert!(full <= 1.0 + 1e-9);
            assert_eq!(&row[..20], short.row(s).unwrap());
        }
    }
}

#[test]
fn engine_trajectory_matches_joint_dfa_context_walk() {
    let mut rng = SplitMix64::new(11);
    for (p, a, _, dfa) in corpus() {
        let model = test_model(&a, 1);
        let pmc = build_pmc(&dfa, &model).unwrap();
        let wtt = waiting_times(&pmc, 50).unwrap();
        let syms: Vec<usize> = (0..200).map(|_| (rng.next_u64() % a.len() as u64) as usize).collect();
        let stream = EventStream::new(a.clone(), syms.iter().enumerate().map(|(t, &s)| (t as u64, s))).unwrap();
        let mut eng = Engine::new(&dfa, &pmc, &wtt, 0.3).unwrap();
        let mut q = dfa.start();
        for (i, ev) in stream.events().iter().enumerate() {
            eng.process(ev);
            q = dfa.step(q, ev.symbol);
            let expected = pmc.index_of(q, syms[i]);
            assert_eq!(eng.state(), expected, "{p} at {i}");
            assert_eq!(pmc.dfa_state(eng.state().unwrap()), q);
        }
    }
}

#[test]
fn matches_are_exactly_accepting_prefixes() {
    let mut rng = SplitMix64::new(5);
    for (p, a, _, dfa) in corpus() {
        for order in [0, 1] {
            let model = test_model(&a, order);
            let pmc = build_pmc(&dfa, &model).unwrap();
            let wtt = waiting_times(&pmc, 30).unwrap();
            for _ in 0..20 {
                let len = (rng.next_u64() % 13) as usize;
                let syms: Vec<usize> = (0..len).map(|_| (rng.next_u64() % a.len() as u64) as usize).collect();
                let stream = EventStream::new(a.clone(), syms.iter().enumerate().map(|(t, &s)| (t as u64, s))).unwrap();
                let out = engine::run(&stream, &dfa, &pmc, &wtt, 0.4).unwrap();
                let got: Vec<usize> = out.matches.iter().map(|m| m.index).collect();
                let want: Vec<usize> = (0..len).filter(|&i| dfa.accepts(&syms[..=i])).collect();
                assert_eq!(got, want, "{p} {syms:?}");
                for f in &out.forecasts {
                    let iv = forecast_interval(wtt.row(f.state).unwrap(), 0.4).unwrap();
                    assert_eq!(f.interval, iv);
                    assert!(!pmc.is_absorbing(f.state));
                }
                let again = engine::run(&stream, &dfa, &pmc, &wtt, 0.4).unwrap();
                assert_eq!(again.forecasts, out.forecasts);
            }
        }
    }
}

#[test]
fn training_recovers_generator_probabilities() {
    let a = alphabet(&["a", "b", "c"]);
    let truth = test_model(&a, 1);
    let stream = generate(&GeneratorSpec::new(truth.clone(), 100_000, 2024)).unwrap();
    let est = train(&stream, 1, 0.0).unwrap();
    for c in 0..truth.num_contexts() {
        for s in 0..3 {
            assert!((est.prob(c, s) - truth.prob(c, s)).abs() < 0.02, "ctx {c} sym {s}");
        }
        let sum: f64 = est.row(c).unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}

#[test]
fn splitmix64_reference_vectors() {
    let mut r = SplitMix64::new(0);
    assert_eq!(
        [r.next_u64(), r.next_u64(), r.next_u64(), r.next_u64()],
        [0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f, 0xf88bb8a8724c81ec]
    );
    let mut r = SplitMix64::new(1234567);
    assert_eq!(r.next_u64(), 6457827717110365317);
    assert_eq!(r.next_u64(), 3203168211198807973);
    let mut r = SplitMix64::new(42);
    assert_eq!(r.next_f64(), 0.7415648787718233);
    assert_eq!(r.next_f64(), 0.1599103928769201);
}

#[test]
fn uniform_generator_frequency() {
    let a = alphabet(&["a", "b"]);
    for seed in [0, 1, 99] {
        let s = generate(&GeneratorSpec::new(SymbolModel::uniform(a.clone(), 0).unwrap(), 100_000, seed)).unwrap();
        let freq = s.symbols().filter(|&x| x == 0).count() as f64 / 1e5;
        assert!((0.49..=0.51).contains(&freq), "seed {seed}: {freq}");
    }
}

#[test]
fn large_stream_file_is_stable_across_round_trips() {
    let a = alphabet(&["a", "b", "c"]);
    let s = generate(&GeneratorSpec::new(test_model(&a, 1), 10_000, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("one.csv"), dir.path().join("two.csv"));
    write_stream(&s, &p1).unwrap();
    let back = read_stream(&p1, Some(&a)).unwrap();
    assert_eq!(back, s);
    write_stream(&back, &p2).unwrap();
    let again = read_stream(&p2, None).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(again.alphabet(), &a);
}

#[test]
fn metrics_conserve_counts_and_round_trip() {
    let a = alphabet(&["a", "b"]);
    let model = test_model(&a, 1);
    let dfa = compile(&parse_pattern("a;b;b;b", &a).unwrap(), &a).unwrap();
    let pmc = build_pmc(&dfa, &model).unwrap();
    let wtt = waiting_times(&pmc, 500).unwrap();
    let stream = generate(&GeneratorSpec::new(model, 5_000, 8)).unwrap();
    let out = engine::run(&stream, &dfa, &pmc, &wtt, 0.5).unwrap();
    let metrics = evaluate(&out.forecasts);
    assert_eq!(metrics.iter().map(|m| m.n_forecasts).sum::<usize>(), out.forecasts.len());
    for m in &metrics {
        let mine: Vec<_> = out.forecasts.iter().filter(|f| f.state == m.state).collect();
        let spread = mine.iter().map(|f| f.interval.spread()).sum::<usize>() as f64 / mine.len() as f64;
        let dist = mine.iter().map(|f| f.interval.distance()).sum::<usize>() as f64 / mine.len() as f64;
        assert_eq!((m.mean_spread, m.mean_distance), (spread, dist));
        let resolved = mine.iter().filter(|f| f.outcome != Some(Outcome::Unresolved)).count();
        assert_eq!(m.n_resolved, resolved);
    }
    let mut buf = Vec::new();
    write_metrics_csv(&metrics, &mut buf).unwrap();
    let back = parse_metrics_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.len(), metrics.len());
    for (x, y) in back.iter().zip(&metrics) {
        assert_eq!((x.state, x.n_forecasts, x.n_resolved), (y.state, y.n_forecasts, y.n_resolved));
        let close = |u: f64, v: f64| (u - v).abs() < 1e-6;
        assert!(close(x.mean_spread, y.mean_spread) && close(x.mean_distance, y.mean_distance));
        match (x.precision, y.precision) {
            (Some(u), Some(v)) => assert!(close(u, v)),
            (None, None) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn alphabet_order_is_preserved_in_tables() {
    // explicit non-lexicographic order drives column order
    let a = Alphabet::from_names(["b", "a"]).unwrap();
    let dfa = compile(&parse_pattern("a;b", &a).unwrap(), &a).unwrap();
    assert!(dfa.to_json().contains("\"b\",\n    \"a\""));
    assert_eq!(dfa.step(0, 1), 1);
}
