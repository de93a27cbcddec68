//! Post-condition formulas: Boolean combinations of linear constraints over
//! the network outputs.
//!
//! The canonical [`Formula`] keeps atoms in `LE <= 0` / `LE < 0` form only
//! (`>=`/`>` are absorbed by negating coefficients), alternates `and`/`or`
//! along every root-to-leaf path, and never contains negation. User-facing
//! input arrives as a [`RawFormula`], which additionally permits the two
//! remaining comparators and negation applied to atoms, and is brought into
//! canonical form by [`RawFormula::normalize`].

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// A linear expression `sum_i c_i * y_i + bias` over output variables.
///
/// Zero coefficients are dropped on construction, so structural equality is
/// meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearExpr {
    coeffs: BTreeMap<usize, f64>,
    bias: f64,
}

impl LinearExpr {
    pub fn new(terms: impl IntoIterator<Item = (usize, f64)>, bias: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        for (var, c) in terms {
            let entry = coeffs.entry(var).or_insert(0.0);
            *entry += c;
        }
        coeffs.retain(|_, c| *c != 0.0);
        LinearExpr { coeffs, bias }
    }

    /// The single variable `y_var`.
    pub fn var(var: usize) -> Self {
        LinearExpr::new([(var, 1.0)], 0.0)
    }

    /// `y_a - y_b + bias`, the margin shape used by every built-in property.
    pub fn margin(a: usize, b: usize, bias: f64) -> Self {
        LinearExpr::new([(a, 1.0), (b, -1.0)], bias)
    }

    pub fn constant(bias: f64) -> Self {
        LinearExpr::new([], bias)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().map(|(v, c)| (*v, *c))
    }

    pub fn coeff(&self, var: usize) -> f64 {
        self.coeffs.get(&var).copied().unwrap_or(0.0)
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest referenced variable index plus one; 0 for constants.
    pub fn arity(&self) -> usize {
        self.coeffs.keys().next_back().map_or(0, |v| v + 1)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = self.bias;
        for (&v, &c) in &self.coeffs {
            acc += c * point[v];
        }
        acc
    }

    /// `-self`; flips every coefficient and the bias.
    pub fn negated(&self) -> Self {
        LinearExpr {
            coeffs: self.coeffs.iter().map(|(&v, &c)| (v, -c)).collect(),
            bias: -self.bias,
        }
    }

    /// `self - delta`, used for margin substitution `Q[eta]`.
    pub fn minus(&self, delta: f64) -> Self {
        LinearExpr {
            coeffs: self.coeffs.clone(),
            bias: self.bias - delta,
        }
    }

    /// Squared Euclidean norm of the coefficient vector.
    pub fn coeff_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&v, &c) in &self.coeffs {
            if first {
                if c == -1.0 {
                    write!(f, "-y{v}")?;
                } else if c == 1.0 {
                    write!(f, "y{v}")?;
                } else {
                    write!(f, "{c}*y{v}")?;
                }
                first = false;
            } else if c < 0.0 {
                if c == -1.0 {
                    write!(f, " - y{v}")?;
                } else {
                    write!(f, " - {}*y{v}", -c)?;
                }
            } else if c == 1.0 {
                write!(f, " + y{v}")?;
            } else {
                write!(f, " + {c}*y{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.bias)?;
        } else if self.bias < 0.0 {
            write!(f, " - {}", -self.bias)?;
        } else if self.bias > 0.0 {
            write!(f, " + {}", self.bias)?;
        }
        Ok(())
    }
}

/// Canonical atom comparators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// `LE <= 0`
    LeZero,
    /// `LE < 0`
    LtZero,
}

impl Relation {
    pub fn is_strict(self) -> bool {
        matches!(self, Relation::LtZero)
    }

    pub fn holds(self, value: f64) -> bool {
        match self {
            Relation::LeZero => value <= 0.0,
            Relation::LtZero => value < 0.0,
        }
    }
}

/// A single linear constraint in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub expr: LinearExpr,
    pub relation: Relation,
}

impl Atom {
    pub fn le(expr: LinearExpr) -> Self {
        Atom {
            expr,
            relation: Relation::LeZero,
        }
    }

    pub fn lt(expr: LinearExpr) -> Self {
        Atom {
            expr,
            relation: Relation::LtZero,
        }
    }

    pub fn holds_at(&self, point: &[f64]) -> bool {
        self.relation.holds(self.expr.eval(point))
    }

    /// Complement with the comparator flipped and re-canonicalized:
    /// `not (LE <= 0)` is `-LE < 0`, `not (LE < 0)` is `-LE <= 0`.
    pub fn complement(&self) -> Atom {
        match self.relation {
            Relation::LeZero => Atom::lt(self.expr.negated()),
            Relation::LtZero => Atom::le(self.expr.negated()),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::LeZero => "<=",
            Relation::LtZero => "<",
        };
        write!(f, "{} {} 0", self.expr, op)
    }
}

/// Canonical negation-free formula tree.
///
/// Invariants (established by [`RawFormula::normalize`] and preserved by every
/// operation here): `and`/`or` strictly alternate, composite nodes have at
/// least two children, and constant atoms are folded away.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

/// Comparator family of the four raw grammar relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawRelation {
    Le,
    Lt,
    Ge,
    Gt,
}

/// Formula as written by the user: all four comparators plus negation over
/// atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum RawFormula {
    Atom {
        expr: LinearExpr,
        relation: RawRelation,
    },
    Not(Box<RawFormula>),
    And(Vec<RawFormula>),
    Or(Vec<RawFormula>),
}

impl RawFormula {
    pub fn atom(expr: LinearExpr, relation: RawRelation) -> Self {
        RawFormula::Atom { expr, relation }
    }

    /// Direct recursive evaluation; the reference semantics used by the
    /// normalization property tests.
    pub fn eval(&self, point: &[f64]) -> bool {
        match self {
            RawFormula::Atom { expr, relation } => {
                let v = expr.eval(point);
                match relation {
                    RawRelation::Le => v <= 0.0,
                    RawRelation::Lt => v < 0.0,
                    RawRelation::Ge => v >= 0.0,
                    RawRelation::Gt => v > 0.0,
                }
            }
            RawFormula::Not(inner) => !inner.eval(point),
            RawFormula::And(children) => children.iter().all(|c| c.eval(point)),
            RawFormula::Or(children) => children.iter().any(|c| c.eval(point)),
        }
    }

    /// Canonicalize: push negation into atoms, rewrite `>=`/`>` by coefficient
    /// negation, fold constant atoms, flatten and collapse.
    ///
    /// Negation applied to a non-atomic subtree is outside the grammar and is
    /// rejected.
    pub fn normalize(&self) -> Result<Normalized> {
        let folded = self.canonicalize(false)?;
        Ok(match folded {
            Folded::Const(b) => Normalized::Const(b),
            Folded::Formula(f) => Normalized::Formula(f.flatten()),
        })
    }

    fn canonicalize(&self, negate: bool) -> Result<Folded> {
        match self {
            RawFormula::Atom { expr, relation } => {
                // Under negation the comparator complements: !(<=) is >, !(<) is >=.
                let relation = if negate {
                    match relation {
                        RawRelation::Le => RawRelation::Gt,
                        RawRelation::Lt => RawRelation::Ge,
                        RawRelation::Ge => RawRelation::Lt,
                        RawRelation::Gt => RawRelation::Le,
                    }
                } else {
                    *relation
                };
                let atom = match relation {
                    RawRelation::Le => Atom::le(expr.clone()),
                    RawRelation::Lt => Atom::lt(expr.clone()),
                    RawRelation::Ge => Atom::le(expr.negated()),
                    RawRelation::Gt => Atom::lt(expr.negated()),
                };
                Ok(if atom.expr.is_constant() {
                    Folded::Const(atom.relation.holds(atom.expr.bias()))
                } else {
                    Folded::Formula(Formula::Atom(atom))
                })
            }
            RawFormula::Not(inner) => match inner.as_ref() {
                RawFormula::Atom { .. } => inner.canonicalize(!negate),
                _ => Err(Error::NegationNotAtomic),
            },
            RawFormula::And(children) if !negate => Folded::and_of(
                children
                    .iter()
                    .map(|c| c.canonicalize(false))
                    .collect::<Result<Vec<_>>>()?,
            ),
            RawFormula::Or(children) if !negate => Folded::or_of(
                children
                    .iter()
                    .map(|c| c.canonicalize(false))
                    .collect::<Result<Vec<_>>>()?,
            ),
            // negate is only ever set directly above an atom
            _ => Err(Error::NegationNotAtomic),
        }
    }
}

/// Result of constant folding a subtree.
enum Folded {
    Const(bool),
    Formula(Formula),
}

impl Folded {
    fn and_of(children: Vec<Folded>) -> Result<Folded> {
        let mut kept = Vec::new();
        for c in children {
            match c {
                Folded::Const(false) => return Ok(Folded::Const(false)),
                Folded::Const(true) => {}
                Folded::Formula(f) => kept.push(f),
            }
        }
        Ok(match kept.len() {
            0 => Folded::Const(true),
            1 => Folded::Formula(kept.pop().unwrap()),
            _ => Folded::Formula(Formula::And(kept)),
        })
    }

    fn or_of(children: Vec<Folded>) -> Result<Folded> {
        let mut kept = Vec::new();
        for c in children {
            match c {
                Folded::Const(true) => return Ok(Folded::Const(true)),
                Folded::Const(false) => {}
                Folded::Formula(f) => kept.push(f),
            }
        }
        Ok(match kept.len() {
            0 => Folded::Const(false),
            1 => Folded::Formula(kept.pop().unwrap()),
            _ => Folded::Formula(Formula::Or(kept)),
        })
    }
}

/// A normalized formula, or the constant the input folded to.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalized {
    Const(bool),
    Formula(Formula),
}

impl Normalized {
    /// Unwrap the formula; constant formulas have nothing left to compile.
    pub fn into_formula(self) -> Result<Formula> {
        match self {
            Normalized::Formula(f) => Ok(f),
            Normalized::Const(b) => Err(Error::ConstantFormula(b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootKind {
    Atomic,
    Conjunctive,
    Disjunctive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Shape {
    Dnf,
    Cnf,
    PureConj,
    PureDisj,
    General,
}

/// Comparator strictness, computed recursively: a conjunction is nonstrict
/// only if every child is, a disjunction is strict only if every child is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Strictness {
    Strict,
    NonStrict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FormulaClass {
    pub root: RootKind,
    pub shape: Shape,
    pub strictness: Strictness,
}

impl Formula {
    pub fn atom(atom: Atom) -> Self {
        Formula::Atom(atom)
    }

    /// Conjunction smart constructor: splices nested `and`s and collapses a
    /// single child.
    pub fn and(children: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Formula::And(grand) => flat.extend(grand),
                other => flat.push(other),
            }
        }
        match flat.len() {
            1 => flat.pop().unwrap(),
            _ => Formula::And(flat),
        }
    }

    /// Disjunction smart constructor, dual of [`Formula::and`].
    pub fn or(children: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Formula::Or(grand) => flat.extend(grand),
                other => flat.push(other),
            }
        }
        match flat.len() {
            1 => flat.pop().unwrap(),
            _ => Formula::Or(flat),
        }
    }

    /// Re-establish alternation and the two-child minimum. Idempotent.
    pub fn flatten(self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a),
            Formula::And(children) => {
                Formula::and(children.into_iter().map(Formula::flatten).collect())
            }
            Formula::Or(children) => {
                Formula::or(children.into_iter().map(Formula::flatten).collect())
            }
        }
    }

    /// Error unless `and`/`or` alternate and composites have >= 2 children.
    pub fn check_flattened(&self) -> Result<()> {
        match self {
            Formula::Atom(_) => Ok(()),
            Formula::And(children) => {
                if children.len() < 2 || children.iter().any(|c| matches!(c, Formula::And(_))) {
                    return Err(Error::NotFlattened("and"));
                }
                children.iter().try_for_each(Formula::check_flattened)
            }
            Formula::Or(children) => {
                if children.len() < 2 || children.iter().any(|c| matches!(c, Formula::Or(_))) {
                    return Err(Error::NotFlattened("or"));
                }
                children.iter().try_for_each(Formula::check_flattened)
            }
        }
    }

    /// Number of alternation levels above the atoms; an atom has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::And(children) | Formula::Or(children) => {
                1 + children.iter().map(Formula::depth).max().unwrap_or(0)
            }
        }
    }

    /// Smallest output count this formula is well-formed over.
    pub fn arity(&self) -> usize {
        match self {
            Formula::Atom(a) => a.expr.arity(),
            Formula::And(children) | Formula::Or(children) => {
                children.iter().map(Formula::arity).max().unwrap_or(0)
            }
        }
    }

    /// Atoms in pre-order.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::And(children) | Formula::Or(children) => {
                children.iter().for_each(|c| c.collect_atoms(out));
            }
        }
    }

    /// Total node count (atoms plus composite nodes).
    pub fn node_count(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::And(children) | Formula::Or(children) => {
                1 + children.iter().map(Formula::node_count).sum::<usize>()
            }
        }
    }

    /// Standard semantics of the tree at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<bool> {
        let arity = self.arity();
        if point.len() < arity {
            return Err(Error::ArityMismatch {
                var: arity - 1,
                arity: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> bool {
        match self {
            Formula::Atom(a) => a.holds_at(point),
            Formula::And(children) => children.iter().all(|c| c.eval_unchecked(point)),
            Formula::Or(children) => children.iter().any(|c| c.eval_unchecked(point)),
        }
    }

    /// Root kind, normal-form shape and recursive strictness.
    pub fn classify(&self) -> FormulaClass {
        let root = match self {
            Formula::Atom(_) => RootKind::Atomic,
            Formula::And(_) => RootKind::Conjunctive,
            Formula::Or(_) => RootKind::Disjunctive,
        };
        let shape = match self {
            // A lone atom is treated as a one-literal conjunction.
            Formula::Atom(_) => Shape::PureConj,
            Formula::And(children) => {
                if children.iter().all(|c| matches!(c, Formula::Atom(_))) {
                    Shape::PureConj
                } else if self.depth() <= 2 {
                    Shape::Cnf
                } else {
                    Shape::General
                }
            }
            Formula::Or(children) => {
                if children.iter().all(|c| matches!(c, Formula::Atom(_))) {
                    Shape::PureDisj
                } else if self.depth() <= 2 {
                    Shape::Dnf
                } else {
                    Shape::General
                }
            }
        };
        FormulaClass {
            root,
            shape,
            strictness: self.strictness(),
        }
    }

    pub fn strictness(&self) -> Strictness {
        match self {
            Formula::Atom(a) => {
                if a.relation.is_strict() {
                    Strictness::Strict
                } else {
                    Strictness::NonStrict
                }
            }
            Formula::And(children) => {
                if children
                    .iter()
                    .all(|c| c.strictness() == Strictness::NonStrict)
                {
                    Strictness::NonStrict
                } else {
                    Strictness::Strict
                }
            }
            Formula::Or(children) => {
                if children
                    .iter()
                    .all(|c| c.strictness() == Strictness::Strict)
                {
                    Strictness::Strict
                } else {
                    Strictness::NonStrict
                }
            }
        }
    }

    /// `Q[eta]`: relax every atom `LE <= 0` to `LE <= eta` (strict atoms
    /// analogously), leaving the tree structure unchanged.
    pub fn substitute_margin(&self, eta: f64) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(Atom {
                expr: a.expr.minus(eta),
                relation: a.relation,
            }),
            Formula::And(children) => {
                Formula::And(children.iter().map(|c| c.substitute_margin(eta)).collect())
            }
            Formula::Or(children) => {
                Formula::Or(children.iter().map(|c| c.substitute_margin(eta)).collect())
            }
        }
    }

    /// Signed distance from satisfaction under the nonstrict reading: the
    /// worst atom value along the cheapest way to satisfy the tree
    /// (`max` over conjunctions, `min` over disjunctions). At most 0 iff
    /// the formula holds with every strict atom read as nonstrict.
    pub fn satisfaction_margin(&self, point: &[f64]) -> f64 {
        match self {
            Formula::Atom(a) => a.expr.eval(point),
            Formula::And(children) => children
                .iter()
                .map(|c| c.satisfaction_margin(point))
                .fold(f64::NEG_INFINITY, f64::max),
            Formula::Or(children) => children
                .iter()
                .map(|c| c.satisfaction_margin(point))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// De Morgan dual with atom comparators complemented; satisfies
    /// `negate(f).eval(p) == !f.eval(p)` for every point.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.complement()),
            Formula::And(children) => Formula::Or(children.iter().map(Formula::negate).collect()),
            Formula::Or(children) => Formula::And(children.iter().map(Formula::negate).collect()),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::And(children) => {
                write!(f, "(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " and ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            Formula::Or(children) => {
                write!(f, "(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " or ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_point, random_raw_formula};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn y(i: usize) -> LinearExpr {
        LinearExpr::var(i)
    }

    #[test]
    fn negated_ge_atom_becomes_strict_less() {
        // not (y0 >= 0)  ->  y0 < 0
        let raw = RawFormula::Not(Box::new(RawFormula::atom(y(0), RawRelation::Ge)));
        let f = raw.normalize().unwrap().into_formula().unwrap();
        assert_eq!(f, Formula::Atom(Atom::lt(y(0))));
    }

    #[test]
    fn negated_le_atom_flips_sign() {
        // not (y0 + 2 <= 0)  ->  -y0 - 2 < 0
        let raw = RawFormula::Not(Box::new(RawFormula::atom(
            LinearExpr::new([(0, 1.0)], 2.0),
            RawRelation::Le,
        )));
        let f = raw.normalize().unwrap().into_formula().unwrap();
        assert_eq!(
            f,
            Formula::Atom(Atom::lt(LinearExpr::new([(0, -1.0)], -2.0)))
        );
    }

    #[test]
    fn normalize_flattens_nested_and() {
        // (A and (B and C)) or D over atom sign patterns
        let atoms: Vec<RawFormula> = (0..4)
            .map(|i| RawFormula::atom(y(i), RawRelation::Le))
            .collect();
        let raw = RawFormula::Or(vec![
            RawFormula::And(vec![
                atoms[0].clone(),
                RawFormula::And(vec![atoms[1].clone(), atoms[2].clone()]),
            ]),
            atoms[3].clone(),
        ]);
        let f = raw.normalize().unwrap().into_formula().unwrap();
        match &f {
            Formula::Or(children) => {
                assert_eq!(children.len(), 2);
                match &children[0] {
                    Formula::And(inner) => assert_eq!(inner.len(), 3),
                    other => panic!("expected and, got {other:?}"),
                }
            }
            other => panic!("expected or, got {other:?}"),
        }
        // oracle equivalence over all sign patterns of the four atoms
        for mask in 0..16u32 {
            let point: Vec<f64> = (0..4)
                .map(|i| if mask & (1 << i) != 0 { -1.0 } else { 1.0 })
                .collect();
            assert_eq!(f.eval(&point).unwrap(), raw.eval(&point));
        }
    }

    #[test]
    fn negation_under_composite_is_rejected() {
        let raw = RawFormula::Not(Box::new(RawFormula::And(vec![
            RawFormula::atom(y(0), RawRelation::Le),
            RawFormula::atom(y(1), RawRelation::Le),
        ])));
        assert!(matches!(raw.normalize(), Err(Error::NegationNotAtomic)));
    }

    #[test]
    fn constant_atoms_fold() {
        // (0 <= 0) and (y0 <= 0)  ->  y0 <= 0
        let raw = RawFormula::And(vec![
            RawFormula::atom(LinearExpr::constant(0.0), RawRelation::Le),
            RawFormula::atom(y(0), RawRelation::Le),
        ]);
        let f = raw.normalize().unwrap().into_formula().unwrap();
        assert_eq!(f, Formula::Atom(Atom::le(y(0))));

        // (1 <= 0) or (2 > 0)  ->  const true
        let raw = RawFormula::Or(vec![
            RawFormula::atom(LinearExpr::constant(1.0), RawRelation::Le),
            RawFormula::atom(LinearExpr::constant(2.0), RawRelation::Gt),
        ]);
        assert_eq!(raw.normalize().unwrap(), Normalized::Const(true));
    }

    #[test]
    fn empty_coefficient_atom_evaluates() {
        let f = Formula::Atom(Atom::le(LinearExpr::constant(0.0)));
        assert!(f.eval(&[]).unwrap());
    }

    #[test]
    fn eval_checks_arity() {
        let f = Formula::Atom(Atom::le(y(3)));
        assert!(matches!(
            f.eval(&[0.0, 0.0]),
            Err(Error::ArityMismatch { var: 3, arity: 2 })
        ));
    }

    #[test]
    fn classify_matches_strictness_recursion() {
        let conj = Formula::and(vec![
            Formula::Atom(Atom::le(y(0))),
            Formula::Atom(Atom::lt(y(1))),
        ]);
        let c = conj.classify();
        assert_eq!(c.root, RootKind::Conjunctive);
        assert_eq!(c.shape, Shape::PureConj);
        assert_eq!(c.strictness, Strictness::Strict);

        let disj = Formula::or(vec![
            Formula::Atom(Atom::lt(y(0))),
            Formula::Atom(Atom::lt(y(1))),
        ]);
        assert_eq!(disj.classify().strictness, Strictness::Strict);

        let dnf = Formula::or(vec![
            Formula::and(vec![
                Formula::Atom(Atom::le(y(0))),
                Formula::Atom(Atom::le(y(1))),
            ]),
            Formula::and(vec![
                Formula::Atom(Atom::le(y(2))),
                Formula::Atom(Atom::le(y(3))),
            ]),
        ]);
        let c = dnf.classify();
        assert_eq!(c.shape, Shape::Dnf);
        assert_eq!(c.strictness, Strictness::NonStrict);
    }

    /// Exhaustive depth-2 strictness check against a direct table computation.
    #[test]
    fn strictness_exhaustive_small_cases() {
        for root_or in [false, true] {
            for n_children in 2..=3usize {
                for child_atoms in 2..=3usize {
                    // every strictness bit pattern over the child atoms
                    let total_atoms = n_children * child_atoms;
                    for mask in 0..(1u32 << total_atoms) {
                        let mut idx = 0;
                        let children: Vec<Formula> = (0..n_children)
                            .map(|_| {
                                let atoms: Vec<Formula> = (0..child_atoms)
                                    .map(|_| {
                                        let strict = mask & (1 << idx) != 0;
                                        idx += 1;
                                        let a = y(idx % 4);
                                        Formula::Atom(if strict {
                                            Atom::lt(a)
                                        } else {
                                            Atom::le(a)
                                        })
                                    })
                                    .collect();
                                if root_or {
                                    Formula::and(atoms)
                                } else {
                                    Formula::or(atoms)
                                }
                            })
                            .collect();
                        let f = if root_or {
                            Formula::Or(children)
                        } else {
                            Formula::And(children)
                        };

                        // direct table: inner nodes first, then the root rule
                        let mut idx2 = 0;
                        let child_strict: Vec<bool> = (0..n_children)
                            .map(|_| {
                                let bits: Vec<bool> = (0..child_atoms)
                                    .map(|_| {
                                        let b = mask & (1 << idx2) != 0;
                                        idx2 += 1;
                                        b
                                    })
                                    .collect();
                                if root_or {
                                    // child is a conjunction: strict unless all nonstrict
                                    bits.iter().any(|&b| b)
                                } else {
                                    // child is a disjunction: strict only if all strict
                                    bits.iter().all(|&b| b)
                                }
                            })
                            .collect();
                        let expect_strict = if root_or {
                            child_strict.iter().all(|&b| b)
                        } else {
                            child_strict.iter().any(|&b| b)
                        };
                        let got = f.strictness() == Strictness::Strict;
                        assert_eq!(got, expect_strict, "mask={mask:b} root_or={root_or}");
                    }
                }
            }
        }
    }

    #[test]
    fn substitute_margin_basics() {
        let f = Formula::Atom(Atom::le(y(0)));
        let g = f.substitute_margin(0.4);
        assert_eq!(
            g,
            Formula::Atom(Atom::le(LinearExpr::new([(0, 1.0)], -0.4)))
        );
        // Q[0] is Q structurally
        assert_eq!(f.substitute_margin(0.0), f);
    }

    #[test]
    fn fig3c_margin_spot_check() {
        // atom y2 <= 2 relaxed by 0.4 admits y2 = 2.3
        let atom = Formula::Atom(Atom::le(LinearExpr::new([(2, 1.0)], -2.0)));
        let relaxed = atom.substitute_margin(0.4);
        assert!(!atom.eval(&[0.0, 0.0, 2.3]).unwrap());
        assert!(relaxed.eval(&[0.0, 0.0, 2.3]).unwrap());
    }

    #[test]
    fn negate_is_de_morgan() {
        let f = Formula::and(vec![
            Formula::Atom(Atom::le(y(0))),
            Formula::Atom(Atom::le(y(1))),
        ]);
        let g = f.negate();
        match &g {
            Formula::Or(children) => assert_eq!(children.len(), 2),
            other => panic!("expected or, got {other:?}"),
        }
        assert_eq!(
            g,
            Formula::or(vec![
                Formula::Atom(Atom::lt(y(0).negated())),
                Formula::Atom(Atom::lt(y(1).negated())),
            ])
        );
    }

    #[test]
    fn random_normalize_agrees_with_raw_semantics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0usize;
        for _ in 0..1000 {
            let raw = random_raw_formula(&mut rng, 4, 5, 6);
            let normalized = raw.normalize().unwrap();
            for _ in 0..200 {
                let p = random_point(&mut rng, 6, -10.0, 10.0);
                let want = raw.eval(&p);
                let got = match &normalized {
                    Normalized::Const(b) => *b,
                    Normalized::Formula(f) => f.eval(&p).unwrap(),
                };
                assert_eq!(got, want, "formula {raw:?} at {p:?}");
                checked += 1;
            }
        }
        assert_eq!(checked, 200_000);
    }

    #[test]
    fn flatten_is_idempotent_and_negate_involutive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let raw = random_raw_formula(&mut rng, 4, 4, 5);
            if let Normalized::Formula(f) = raw.normalize().unwrap() {
                assert_eq!(f.clone().flatten(), f);
                assert_eq!(f.negate().negate().flatten(), f);
                f.check_flattened().unwrap();
            }
        }
    }

    #[test]
    fn margin_substitution_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let raw = random_raw_formula(&mut rng, 3, 4, 4);
            if let Normalized::Formula(f) = raw.normalize().unwrap() {
                for &eta in &[0.0, 1e-4, 0.1, 2.0] {
                    let relaxed = f.substitute_margin(eta);
                    for _ in 0..50 {
                        let p = random_point(&mut rng, 4, -10.0, 10.0);
                        if f.eval(&p).unwrap() {
                            assert!(relaxed.eval(&p).unwrap(), "Q => Q[{eta}] failed at {p:?}");
                        }
                    }
                }
            }
        }
    }
}
