//! Acceptance suite: the end-to-end checks this artifact must pass, one test
//! per criterion, each printing a pass line with its measured numbers.
//!
//! Run with `cargo test -p robustify-core --test acceptance -- --nocapture`
//! to see the lines; budgets are asserted, not just printed.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robustify_core::confidence::{delta_relaxed, delta_strong, relaxed_bounds};
use robustify_core::eval::{eval_circuit, forward};
use robustify_core::sampling::{
    random_formula, random_normal_form, random_point, stratified_point,
};
use robustify_core::topk::{
    build_affinity_negation, build_topk_negation, build_topk_relaxed_negation,
    filter_affinity_pairs, topk_set,
};
use robustify_core::validate::{
    find_slack_exhibit, validate_claim_relaxed, validate_claim_smooth, validate_claim_strong,
    validate_error_bound, validate_fast_path, validate_soundness,
};
use robustify_core::vnnlib::{emit_vnnlib, parse_vnnlib};
use robustify_core::{
    append_circuit, build_mlp, compile, compile_gadget, load_model, save_model, AffinityNegation,
    Atom, Comparator, Formula, GateOp, LinearExpr, Shape, Strictness, TopKContext,
};

fn pass(line: &str) {
    println!("PASS {line}");
}

fn worked_formula() -> Formula {
    // (y0 + y1 <= 0 and y1 <= 0) or (y0 - y2 <= 0 and y2 <= 2)
    Formula::or(vec![
        Formula::and(vec![
            Formula::Atom(Atom::le(LinearExpr::new([(0, 1.0), (1, 1.0)], 0.0))),
            Formula::Atom(Atom::le(LinearExpr::var(1))),
        ]),
        Formula::and(vec![
            Formula::Atom(Atom::le(LinearExpr::new([(0, 1.0), (2, -1.0)], 0.0))),
            Formula::Atom(Atom::le(LinearExpr::new([(2, 1.0)], -2.0))),
        ]),
    ])
}

/// Criterion 1: the worked two-clause example reproduces the published
/// stage constants and circuit values exactly.
#[test]
fn c1_worked_circuit_reproduction() {
    let start = Instant::now();
    let compiled = compile_gadget(&worked_formula(), 3, 0.2).unwrap();
    let c = &compiled.circuit;

    assert_eq!(c.meta.atom_constants, vec![0.2, 0.2, 0.2, 2.2]);
    let (or_nodes, and_nodes): (Vec<&robustify_core::gadget::GadgetNode>, Vec<_>) =
        c.meta.gadget_nodes.iter().partition(|n| n.op == GateOp::Or);
    assert_eq!(or_nodes.len(), 1);
    assert_eq!(and_nodes.len(), 2);
    assert_eq!(or_nodes[0].b, 0.4);
    for n in &and_nodes {
        // eta * (1 + 1/2) lands one ulp off the decimal literal
        assert!((n.b - 0.3).abs() < 1e-15, "conjunction bias {}", n.b);
    }
    assert_eq!(compiled.query.assert_cmp, Comparator::Ge);
    assert_eq!(compiled.query.threshold, 0.2);

    let f = worked_formula();
    let y_true = eval_circuit(c, &[-1.0, -1.0, 0.0]).unwrap();
    assert!((y_true - 0.8).abs() <= 1e-12, "got {y_true}");
    assert!(compiled.query.asserted(y_true));
    assert!(f.eval(&[-1.0, -1.0, 0.0]).unwrap());
    let y_false = eval_circuit(c, &[1.0, 1.0, 3.0]).unwrap();
    assert!(y_false.abs() <= 1e-12, "got {y_false}");
    assert!(!compiled.query.asserted(y_false));
    assert!(!f.eval(&[1.0, 1.0, 3.0]).unwrap());

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(&format!(
        "criterion 1: worked circuit (atom biases 0.2/0.2/0.2/2.2, b_and=0.3, b_or=0.4, \
         assert Y >= 0.2, values 0.8/0.0) in {elapsed:?}"
    ));
}

/// Criterion 2: encoding soundness sweep over 1000 random mixed-strictness
/// formulas x 1000 stratified points x three slack values, zero violations.
#[test]
fn c2_soundness_sweep() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2001);
    let mut total_samples = 0u64;
    let mut worst: f64 = f64::NEG_INFINITY;
    for i in 0..1000u64 {
        let f = random_formula(&mut rng, 4, 5, 6, 0.35);
        for (j, &eta) in [1e-4, 1e-2, 0.2].iter().enumerate() {
            let report = validate_soundness(&f, 6, eta, 1000, 91_000 + i * 3 + j as u64).unwrap();
            assert!(
                report.passed,
                "formula {i} eta {eta}: {:?}",
                report.witnesses
            );
            total_samples += report.samples;
            worst = worst.max(report.max_slack);
        }
    }
    let elapsed = start.elapsed();
    assert_eq!(total_samples, 3_000_000);
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    pass(&format!(
        "criterion 2: soundness sweep, 1000 formulas x 3 etas x 1000 points \
         ({total_samples} checks, max slack {worst:.2e} <= 1e-9) in {elapsed:?}"
    ));
}

/// Criterion 3: on CNF/DNF formulas every asserted-side point satisfies the
/// 2*eta relaxation, and at eta = 0.2 each formula admits a point violating
/// the formula while satisfying the relaxation.
#[test]
fn c3_error_bound_and_tightness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3001);
    let mut n_formulas = 0u64;
    let mut exhibits = 0u64;
    for i in 0..400u64 {
        let dnf = i % 2 == 0;
        // keep drawing until the formula is actually falsifiable in the
        // sampling box; wide disjunctions of opposite-signed atoms can cover
        // all of logit space, and a tautology has no boundary to exhibit
        let f = loop {
            let clauses = rng.gen_range(2..=4);
            let literals = rng.gen_range(2..=4);
            let candidate = random_normal_form(&mut rng, dnf, clauses, literals, 6, 0.3);
            let violable = (0..200).any(|_| {
                !candidate
                    .eval(&random_point(&mut rng, 6, -10.0, 10.0))
                    .unwrap()
            });
            if violable {
                break candidate;
            }
        };
        assert!(matches!(
            f.classify().shape,
            Shape::Dnf | Shape::Cnf | Shape::PureConj | Shape::PureDisj
        ));
        for (j, &eta) in [1e-4, 1e-2, 0.2].iter().enumerate() {
            let report = validate_error_bound(&f, 6, eta, 1000, 73_000 + i * 3 + j as u64).unwrap();
            assert!(
                report.passed,
                "formula {i} eta {eta}: {:?}",
                report.witnesses
            );
        }
        let p = find_slack_exhibit(&f, 6, 0.2, 3000, 55_000 + i)
            .unwrap_or_else(|| panic!("formula {i}: no slack exhibit found"));
        assert!(!f.eval(&p).unwrap());
        assert!(f.substitute_margin(0.4).eval(&p).unwrap());
        exhibits += 1;
        n_formulas += 1;
    }
    let elapsed = start.elapsed();
    assert_eq!(exhibits, n_formulas);
    pass(&format!(
        "criterion 3: slack bound on {n_formulas} CNF/DNF formulas x 3 etas, zero violations; \
         one boundary exhibit per formula at eta=0.2 ({exhibits} found) in {elapsed:?}"
    ));
}

/// Criterion 4: the fast path agrees with the formula on a million stratified
/// points, exact boundary points included, with zero disagreements.
#[test]
fn c4_fast_path_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4001);
    let mut total = 0u64;
    for i in 0..200u64 {
        let conj = i % 2 == 0;
        let width = rng.gen_range(2..=6);
        let atoms: Vec<Formula> = (0..width)
            .map(|_| {
                let terms: Vec<(usize, f64)> = (0..rng.gen_range(1..=3))
                    .map(|_| {
                        (
                            rng.gen_range(0..6),
                            f64::from(rng.gen_range(-16i32..=16).max(1)) / 4.0,
                        )
                    })
                    .collect();
                let expr = LinearExpr::new(terms, f64::from(rng.gen_range(-8i32..=8)) / 4.0);
                if conj {
                    Formula::Atom(Atom::le(expr))
                } else {
                    Formula::Atom(Atom::lt(expr))
                }
            })
            .collect();
        let f = if conj {
            Formula::and(atoms)
        } else {
            Formula::or(atoms)
        };
        let report = validate_fast_path(&f, 6, 5000, 41_000 + i).unwrap();
        assert!(report.passed, "formula {i}: {:?}", report.witnesses);
        total += report.samples;
    }
    let elapsed = start.elapsed();
    assert_eq!(total, 1_000_000);
    pass(&format!(
        "criterion 4: fast-path exactness on {total} stratified points \
         (boundaries included), zero disagreements in {elapsed:?}"
    ));
}

/// Criterion 5: margin-claim validators across the threshold grids plus the
/// published spot values.
#[test]
fn c5_confidence_claims_grid() {
    let start = Instant::now();

    // spot values
    let d80 = delta_relaxed(80.0).unwrap();
    assert!((d80 - 1.3862944).abs() < 1e-6, "delta(80) = {d80}");
    let d_strong = delta_strong(30.0, 10).unwrap();
    assert!(
        (d_strong - 1.34993).abs() < 1e-5,
        "delta_strong(30,10) = {d_strong}"
    );
    let floor = relaxed_bounds(d80, 10)
        .unwrap()
        .counterexample_floor
        .unwrap();
    assert!((floor - 30.769).abs() < 1e-3, "tau_lb = {floor}");

    let samples = 100_000;
    let mut cells = 0u64;
    let mut seed = 50_000u64;
    for m in 2..=10usize {
        for &tau in &[50.0, 60.0, 80.0, 90.0, 95.0, 99.0] {
            let delta = delta_relaxed(tau).unwrap();
            for d in [delta, f64::from(delta as f32)] {
                seed += 1;
                let report = validate_claim_relaxed(m, d, samples, seed);
                assert!(
                    report.passed,
                    "relaxed m={m} tau={tau}: {:?}",
                    report.witnesses
                );
                cells += 1;
            }
        }
        for &tau2 in &[30.0, 35.0, 40.0, 70.0] {
            if tau2 < 100.0 / m as f64 {
                continue;
            }
            let delta = delta_strong(tau2, m).unwrap();
            for d in [delta, f64::from(delta as f32)] {
                seed += 1;
                let report = validate_claim_strong(m, d, samples, seed);
                assert!(
                    report.passed,
                    "strong m={m} tau2={tau2}: {:?}",
                    report.witnesses
                );
                cells += 1;
            }
        }
        for &(c, tau) in &[(50.0, 10.0), (50.0, 25.0), (50.0, 40.0), (57.5, 10.0)] {
            seed += 1;
            let report = validate_claim_smooth(m, c, tau, samples, seed).unwrap();
            assert!(
                report.passed,
                "smooth m={m} C={c} tau={tau}: {:?}",
                report.witnesses
            );
            cells += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    pass(&format!(
        "criterion 5: margin claims over {cells} grid cells x {samples} samples \
         (float32-rounded margins included) plus spot values in {elapsed:?}"
    ));
}

/// Criterion 6: top-k family formulas coincide with set-comparison oracles on
/// random logit pairs, with the stated clause arithmetic.
#[test]
fn c6_topk_set_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6001);
    let mut pairs_checked = 0u64;

    for &m in &[4usize, 10] {
        for k in 1..=3usize.min(m - 1) {
            let mut done = 0;
            while done < 10_000 {
                let seed_logits = random_point(&mut rng, m, -5.0, 5.0);
                let probe = random_point(&mut rng, m, -5.0, 5.0);
                let (Ok(a), Ok(b)) = (topk_set(&seed_logits, k), topk_set(&probe, k)) else {
                    continue;
                };
                let ctx = TopKContext::new(seed_logits, k, None).unwrap();
                let f = build_topk_negation(&ctx, k).unwrap();
                assert_eq!(f.atoms().len(), (m - k) * k, "clause count m={m} k={k}");
                assert_eq!(f.eval(&probe).unwrap(), a != b, "m={m} k={k}");
                done += 1;
            }
            pairs_checked += 10_000;
        }

        for k_max in 2..=3usize.min(m - 1) {
            let mut done = 0;
            while done < 10_000 {
                let seed_logits = random_point(&mut rng, m, -5.0, 5.0);
                let probe = random_point(&mut rng, m, -5.0, 5.0);
                let seeds_ok = (1..=k_max).all(|k| topk_set(&seed_logits, k).is_ok());
                let probes_ok = (1..=k_max).all(|k| topk_set(&probe, k).is_ok());
                if !seeds_ok || !probes_ok {
                    continue;
                }
                let ctx = TopKContext::new(seed_logits.clone(), k_max, None).unwrap();
                let f = build_topk_relaxed_negation(&ctx).unwrap();
                let want = (1..=k_max)
                    .all(|k| topk_set(&seed_logits, k).unwrap() != topk_set(&probe, k).unwrap());
                assert_eq!(f.eval(&probe).unwrap(), want, "m={m} K={k_max}");
                done += 1;
            }
            pairs_checked += 10_000;
        }
    }

    // affinity with the digit-style sets
    let digit_sets: Vec<BTreeSet<usize>> = vec![
        [0, 8].into_iter().collect(),
        [4, 9].into_iter().collect(),
        [1, 9, 7].into_iter().collect(),
        [2].into_iter().collect(),
        [3].into_iter().collect(),
        [5].into_iter().collect(),
        [6].into_iter().collect(),
    ];
    let mut done = 0;
    while done < 10_000 {
        let seed_logits = random_point(&mut rng, 10, -5.0, 5.0);
        let probe = random_point(&mut rng, 10, -5.0, 5.0);
        let seeds_ok = (1..=2).all(|k| topk_set(&seed_logits, k).is_ok())
            && (1..=2).all(|k| topk_set(&probe, k).is_ok());
        if !seeds_ok {
            continue;
        }
        let ctx = TopKContext::new(seed_logits.clone(), 2, Some(digit_sets.clone())).unwrap();
        let pairs = filter_affinity_pairs(&ctx).unwrap();
        // the top-1 singleton always sits inside one of these sets
        assert!(!pairs.is_empty());
        match build_affinity_negation(&ctx).unwrap() {
            AffinityNegation::Formula(f) => {
                let want = pairs.iter().all(|(k, _)| {
                    topk_set(&seed_logits, *k).unwrap() != topk_set(&probe, *k).unwrap()
                });
                assert_eq!(f.eval(&probe).unwrap(), want);
            }
            AffinityNegation::TriviallyViolated => unreachable!("filter was nonempty"),
        }
        done += 1;
    }
    pairs_checked += 10_000;

    let elapsed = start.elapsed();
    pass(&format!(
        "criterion 6: top-k/relaxed/affinity set-oracle equivalence on {pairs_checked} \
         logit pairs, clause counts (m-k)*k verified, in {elapsed:?}"
    ));
}

/// Criterion 7: appended-model forward pass composes with the reference
/// circuit evaluation, and the scalar indicator matches the formula oracle up
/// to the documented slack band.
#[test]
fn c7_end_to_end_composition() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7001);
    let mut weight_rng = ChaCha8Rng::seed_from_u64(7003);
    let graph = build_mlp(&[784, 64, 10], move || weight_rng.gen_range(-0.5f32..0.5));
    let center: Vec<f64> = (0..784).map(|_| rng.gen_range(0.0..1.0)).collect();

    // relaxed spec at tau = 80; the seed class is the weakest at the center,
    // so the box straddles satisfied and unsatisfied regions
    let center_logits = forward(&graph, &center).unwrap();
    let seed_class = (0..10)
        .min_by(|&a, &b| center_logits[a].partial_cmp(&center_logits[b]).unwrap())
        .unwrap();
    let delta = delta_relaxed(80.0).unwrap();
    let formula =
        robustify_core::confidence::build_relaxed_negation(10, seed_class, delta).unwrap();
    assert_eq!(formula.atoms().len(), 81);
    let eta = 1e-4;
    let compiled = compile(&formula, 10, eta).unwrap();
    assert_eq!(compiled.query.assert_cmp, Comparator::Ge);

    let appended = append_circuit(&graph, &compiled.circuit).unwrap();
    let reloaded = load_model(&save_model(&appended)).unwrap();

    let eps = 0.02;
    let mut max_diff: f64 = 0.0;
    let mut band_mismatches = 0u64;
    let mut asserted_seen = 0u64;
    let relaxed2eta = formula.substitute_margin(2.0 * eta + 1e-6);
    for _ in 0..10_000 {
        let x: Vec<f64> = center
            .iter()
            .map(|&c| c + rng.gen_range(-eps..eps))
            .collect();
        let logits = forward(&graph, &x).unwrap();
        let y_ref = eval_circuit(&compiled.circuit, &logits).unwrap();
        let y_full = forward(&reloaded, &x).unwrap();
        assert_eq!(y_full.len(), 1);
        let diff = (y_full[0] - y_ref).abs();
        max_diff = max_diff.max(diff);
        assert!(diff <= 1e-6, "composition drift {diff}");

        // indicator vs oracle, modulo the slack band and float32 fuzz
        let indicator = compiled.query.asserted(y_full[0]);
        asserted_seen += u64::from(indicator);
        let oracle = formula.eval(&logits).unwrap();
        if indicator != oracle {
            band_mismatches += 1;
            if indicator {
                // asserted but not satisfied: must hold with 2*eta slack
                assert!(
                    relaxed2eta.eval(&logits).unwrap(),
                    "asserted-side point outside the 2*eta band"
                );
            } else {
                // satisfied but not asserted: only float fuzz at the
                // threshold can explain it
                assert!(
                    (y_full[0] - eta).abs() <= 1e-6,
                    "oracle-true point clearly below the threshold: {}",
                    y_full[0]
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    // both sides of the threshold must actually occur in the box
    assert!(
        asserted_seen > 100 && asserted_seen < 9900,
        "one-sided fixture: {asserted_seen}"
    );
    pass(&format!(
        "criterion 7: 784->64->10 composition over 10000 boxed inputs \
         ({asserted_seen} on the asserted side), \
         max |forward(appended) - circuit(forward)| = {max_diff:.2e} <= 1e-6, \
         {band_mismatches} indicator mismatches all inside the slack band, in {elapsed:?}"
    ));
}

/// Criterion 8: property files round-trip oracle-equivalently over the
/// fixture corpus, and model serialization preserves tensors bitwise.
#[test]
fn c8_format_round_trips() {
    let start = Instant::now();
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/vnnlib");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "vnnlib"))
        .collect();
    paths.sort();
    assert_eq!(paths.len(), 50, "fixture corpus size");

    let mut rng = ChaCha8Rng::seed_from_u64(8001);
    for path in &paths {
        let text = std::fs::read_to_string(path).unwrap();
        let (box1, f1) = parse_vnnlib(&text).unwrap_or_else(|e| panic!("{path:?}: {e}"));
        let emitted = emit_vnnlib(&box1, &f1);
        let (box2, f2) =
            parse_vnnlib(&emitted).unwrap_or_else(|e| panic!("re-parse {path:?}: {e}"));
        assert_eq!(box1, box2, "{path:?}");
        let arity = f1.arity().max(f2.arity());
        for _ in 0..200 {
            let p = stratified_point(&mut rng, &f1, arity, 0.1, -6.0, 6.0);
            assert_eq!(
                f1.eval(&p).unwrap(),
                f2.eval(&p).unwrap(),
                "{path:?} at {p:?}"
            );
        }
    }

    // model round trip: bitwise tensor preservation, identical forwards
    let mut weight_rng = ChaCha8Rng::seed_from_u64(8002);
    let graph = build_mlp(&[12, 9, 5], move || weight_rng.gen_range(-1.0f32..1.0));
    let reloaded = load_model(&save_model(&graph)).unwrap();
    assert_eq!(reloaded.initializers, graph.initializers);
    for (a, b) in reloaded.initializers.iter().zip(&graph.initializers) {
        let (fa, fb) = (a.float_data().unwrap(), b.float_data().unwrap());
        assert!(fa.iter().zip(fb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    for _ in 0..100 {
        let x = random_point(&mut rng, 12, -2.0, 2.0);
        assert_eq!(
            forward(&graph, &x).unwrap(),
            forward(&reloaded, &x).unwrap()
        );
    }

    let elapsed = start.elapsed();
    pass(&format!(
        "criterion 8: 50-file property round-trip oracle-equivalent and bitwise \
         model tensor preservation in {elapsed:?}"
    ));
}

/// The worked formula also drives the strictness table: the disjunctive root
/// over nonstrict conjunctions asserts a nonstrict comparator.
#[test]
fn query_comparator_matches_strictness() {
    let compiled = compile_gadget(&worked_formula(), 3, 0.2).unwrap();
    assert_eq!(compiled.circuit.meta.strictness, Strictness::NonStrict);
    assert_eq!(compiled.query.verify_cmp(), Comparator::Lt);
}
