//! Property tests over randomly generated formulas: the algebraic laws the
//! rest of the pipeline leans on.

use proptest::prelude::*;

use robustify_core::vnnlib::{emit_vnnlib, parse_vnnlib};
use robustify_core::{Atom, Formula, InputBox, LinearExpr, Normalized, RawFormula, RawRelation};

const ARITY: usize = 4;

fn arb_expr() -> impl Strategy<Value = LinearExpr> {
    (
        proptest::collection::vec((0..ARITY, -8i32..=8), 1..=3),
        -8i32..=8,
    )
        .prop_map(|(terms, bias)| {
            // keep at least the first coefficient nonzero so atoms never
            // fold to constants (zero draws map to 1)
            let terms: Vec<(usize, f64)> = terms
                .into_iter()
                .map(|(v, c)| (v, f64::from(if c == 0 { 1 } else { c }) / 2.0))
                .collect();
            LinearExpr::new(terms, f64::from(bias) / 2.0)
        })
}

fn arb_relation() -> impl Strategy<Value = RawRelation> {
    prop_oneof![
        Just(RawRelation::Le),
        Just(RawRelation::Lt),
        Just(RawRelation::Ge),
        Just(RawRelation::Gt),
    ]
}

fn arb_raw() -> impl Strategy<Value = RawFormula> {
    let leaf = (arb_expr(), arb_relation(), proptest::bool::ANY).prop_map(|(e, r, neg)| {
        let atom = RawFormula::atom(e, r);
        if neg {
            RawFormula::Not(Box::new(atom))
        } else {
            atom
        }
    });
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..=4).prop_map(RawFormula::And),
            proptest::collection::vec(inner, 2..=4).prop_map(RawFormula::Or),
        ]
    })
}

fn arb_point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-6.0f64..6.0, ARITY)
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    let atom = (arb_expr(), proptest::bool::ANY)
        .prop_map(|(e, strict)| Formula::Atom(if strict { Atom::lt(e) } else { Atom::le(e) }));
    (
        proptest::collection::vec(proptest::collection::vec(atom, 1..=3), 2..=3),
        proptest::bool::ANY,
    )
        .prop_map(|(groups, dnf)| {
            let children: Vec<Formula> = groups
                .into_iter()
                .map(|atoms| {
                    if dnf {
                        Formula::and(atoms)
                    } else {
                        Formula::or(atoms)
                    }
                })
                .collect();
            if dnf {
                Formula::or(children)
            } else {
                Formula::and(children)
            }
        })
}

proptest! {
    /// Normalization preserves semantics at every point.
    #[test]
    fn normalization_preserves_semantics(raw in arb_raw(), points in proptest::collection::vec(arb_point(), 8)) {
        let normalized = raw.normalize().unwrap();
        for p in &points {
            let want = raw.eval(p);
            let got = match &normalized {
                Normalized::Const(b) => *b,
                Normalized::Formula(f) => f.eval(p).unwrap(),
            };
            prop_assert_eq!(got, want);
        }
    }

    /// Negation complements evaluation and is an involution up to flatten.
    #[test]
    fn negation_complements(f in arb_formula(), points in proptest::collection::vec(arb_point(), 8)) {
        let neg = f.negate();
        for p in &points {
            prop_assert_eq!(neg.eval(p).unwrap(), !f.eval(p).unwrap());
        }
        prop_assert_eq!(neg.negate().flatten(), f.clone().flatten());
    }

    /// Margin substitution only ever widens the satisfied set, monotonically.
    #[test]
    fn margin_substitution_is_monotone(
        f in arb_formula(),
        eta in 0.0f64..2.0,
        points in proptest::collection::vec(arb_point(), 8),
    ) {
        let wide = f.substitute_margin(eta);
        let wider = f.substitute_margin(2.0 * eta);
        for p in &points {
            if f.eval(p).unwrap() {
                prop_assert!(wide.eval(p).unwrap());
            }
            if wide.eval(p).unwrap() {
                prop_assert!(wider.eval(p).unwrap());
            }
        }
    }

    /// Flatten is idempotent and keeps evaluation intact.
    #[test]
    fn flatten_idempotent(f in arb_formula(), p in arb_point()) {
        let once = f.clone().flatten();
        prop_assert_eq!(once.clone().flatten(), once.clone());
        prop_assert_eq!(once.eval(&p).unwrap(), f.eval(&p).unwrap());
    }

    /// Property files round-trip to an oracle-equivalent formula.
    #[test]
    fn vnnlib_round_trip(f in arb_formula(), points in proptest::collection::vec(arb_point(), 8)) {
        let input_box = InputBox::new(vec![-1.0, -0.5], vec![1.0, 0.5]).unwrap();
        let text = emit_vnnlib(&input_box, &f);
        // duplicate-variable draws can cancel an atom away entirely; the
        // degenerate constant formulas that result are not round-trippable
        let parsed = parse_vnnlib(&text);
        prop_assume!(!matches!(parsed, Err(robustify_core::Error::ConstantFormula(_))));
        let (box2, f2) = parsed.unwrap();
        prop_assert_eq!(&box2, &input_box);
        for p in &points {
            prop_assert_eq!(f2.eval(p).unwrap(), f.eval(p).unwrap());
        }
    }
}
