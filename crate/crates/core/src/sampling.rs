//! Random formulas and stratified point sampling for the numeric validators.
//!
//! Sampled points mix uniform draws over a box with points projected onto
//! atom hyperplanes at offsets proportional to the slack parameter, since
//! everything interesting happens within a few eta of an atom boundary.

use rand::Rng;

use crate::formula::{Atom, Formula, LinearExpr, RawFormula, RawRelation};

pub fn random_point(rng: &mut impl Rng, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(lo..hi)).collect()
}

fn random_expr(rng: &mut impl Rng, arity: usize) -> LinearExpr {
    let n_terms = rng.gen_range(1..=arity.min(3));
    let mut vars: Vec<usize> = (0..arity).collect();
    for i in (1..vars.len()).rev() {
        vars.swap(i, rng.gen_range(0..=i));
    }
    let terms: Vec<(usize, f64)> = vars
        .into_iter()
        .take(n_terms)
        .map(|v| {
            let mut c = 0.0;
            while c == 0.0 {
                c = (rng.gen_range(-20i32..=20) as f64) / 8.0;
            }
            (v, c)
        })
        .collect();
    let bias = (rng.gen_range(-32i32..=32) as f64) / 8.0;
    LinearExpr::new(terms, bias)
}

fn random_relation(rng: &mut impl Rng, strict_share: f64) -> RawRelation {
    if rng.gen_bool(strict_share) {
        if rng.gen_bool(0.5) {
            RawRelation::Lt
        } else {
            RawRelation::Gt
        }
    } else if rng.gen_bool(0.5) {
        RawRelation::Le
    } else {
        RawRelation::Ge
    }
}

/// Random formula in the raw grammar: all four comparators, occasional
/// negation over atoms, connectives alternating with depth.
pub fn random_raw_formula(
    rng: &mut impl Rng,
    max_depth: usize,
    max_fanout: usize,
    arity: usize,
) -> RawFormula {
    fn gen(
        rng: &mut impl Rng,
        depth_left: usize,
        max_fanout: usize,
        arity: usize,
        parent_and: Option<bool>,
    ) -> RawFormula {
        let make_atom = depth_left == 0 || rng.gen_bool(0.35);
        if make_atom {
            let atom = RawFormula::atom(random_expr(rng, arity), random_relation(rng, 0.3));
            if rng.gen_bool(0.2) {
                return RawFormula::Not(Box::new(atom));
            }
            return atom;
        }
        let is_and = match parent_and {
            Some(parent) => !parent,
            None => rng.gen_bool(0.5),
        };
        let fanout = rng.gen_range(2..=max_fanout.max(2));
        let children = (0..fanout)
            .map(|_| gen(rng, depth_left - 1, max_fanout, arity, Some(is_and)))
            .collect();
        if is_and {
            RawFormula::And(children)
        } else {
            RawFormula::Or(children)
        }
    }
    gen(rng, max_depth, max_fanout, arity, None)
}

/// Random canonical formula, via the raw generator; retries until the result
/// does not fold to a constant.
pub fn random_formula(
    rng: &mut impl Rng,
    max_depth: usize,
    max_fanout: usize,
    arity: usize,
    strict_share: f64,
) -> Formula {
    loop {
        let raw = random_raw_formula_with(rng, max_depth, max_fanout, arity, strict_share);
        if let Ok(crate::formula::Normalized::Formula(f)) = raw.normalize() {
            return f;
        }
    }
}

fn random_raw_formula_with(
    rng: &mut impl Rng,
    max_depth: usize,
    max_fanout: usize,
    arity: usize,
    strict_share: f64,
) -> RawFormula {
    fn gen(
        rng: &mut impl Rng,
        depth_left: usize,
        max_fanout: usize,
        arity: usize,
        strict_share: f64,
        parent_and: Option<bool>,
    ) -> RawFormula {
        let make_atom = depth_left == 0 || rng.gen_bool(0.3);
        if make_atom {
            return RawFormula::atom(random_expr(rng, arity), random_relation(rng, strict_share));
        }
        let is_and = match parent_and {
            Some(parent) => !parent,
            None => rng.gen_bool(0.5),
        };
        let fanout = rng.gen_range(2..=max_fanout.max(2));
        let children = (0..fanout)
            .map(|_| {
                gen(
                    rng,
                    depth_left - 1,
                    max_fanout,
                    arity,
                    strict_share,
                    Some(is_and),
                )
            })
            .collect();
        if is_and {
            RawFormula::And(children)
        } else {
            RawFormula::Or(children)
        }
    }
    gen(rng, max_depth, max_fanout, arity, strict_share, None)
}

/// Random DNF (or CNF): the shapes the error-bound statement covers.
///
/// Clause widths vary from 1 (a bare atom next to wider clauses) up to
/// `max_literals`; `strict_share` mixes strict atoms in.
pub fn random_normal_form(
    rng: &mut impl Rng,
    dnf: bool,
    clauses: usize,
    max_literals: usize,
    arity: usize,
    strict_share: f64,
) -> Formula {
    let mut children = Vec::with_capacity(clauses);
    for _ in 0..clauses {
        let width = rng.gen_range(1..=max_literals.max(1));
        let atoms: Vec<Formula> = (0..width)
            .map(|_| {
                let expr = random_expr(rng, arity);
                Formula::Atom(if rng.gen_bool(strict_share) {
                    Atom::lt(expr)
                } else {
                    Atom::le(expr)
                })
            })
            .collect();
        children.push(if dnf {
            Formula::and(atoms)
        } else {
            Formula::or(atoms)
        });
    }
    if dnf {
        Formula::or(children)
    } else {
        Formula::and(children)
    }
}

/// Stratified point: uniform over the box, or projected onto a random atom's
/// hyperplane at a signed offset in `{0, eta/2, eta, 2eta}`.
pub fn stratified_point(
    rng: &mut impl Rng,
    f: &Formula,
    arity: usize,
    eta: f64,
    lo: f64,
    hi: f64,
) -> Vec<f64> {
    let mut p = random_point(rng, arity, lo, hi);
    if rng.gen_bool(0.5) {
        return p;
    }
    let atoms = f.atoms();
    if atoms.is_empty() {
        return p;
    }
    let atom = atoms[rng.gen_range(0..atoms.len())];
    let norm_sq = atom.expr.coeff_norm_sq();
    if norm_sq == 0.0 {
        return p;
    }
    let offsets = [0.0, 0.5 * eta, eta, 2.0 * eta];
    let mut d = offsets[rng.gen_range(0..offsets.len())];
    if rng.gen_bool(0.5) {
        d = -d;
    }
    // shift along the gradient so that LE(p) = d exactly (up to rounding)
    let shift = (d - atom.expr.eval(&p)) / norm_sq;
    for (v, c) in atom.expr.coeffs() {
        p[v] += shift * c;
    }
    p
}
