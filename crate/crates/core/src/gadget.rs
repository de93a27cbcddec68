//! Lowers a formula into affine + ReLU layers whose single scalar output
//! reduces the post-condition to a comparison against a threshold.
//!
//! Two routes exist. The fast path handles pure conjunctions of nonstrict
//! atoms (`y <= 0` iff the conjunction holds) and pure disjunctions of strict
//! atoms (`y > 0` iff the disjunction holds); both are exact. Everything else
//! goes through the recursive flip gadget, which interleaves per-node bias
//! stages `b(op, k, eta)` with ReLUs: a satisfied conjunction drives the
//! stage value to at most `eta`, a satisfied disjunction to at least `eta`,
//! and any counterexample reported against the threshold satisfies the
//! formula with every atom relaxed by at most `2*eta`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{Formula, LinearExpr, RootKind, Shape, Strictness};

/// Smallest accepted slack parameter; solvers below this precision cannot
/// separate the query threshold from the satisfied side.
pub const ETA_FLOOR: f64 = 1e-7;

/// Default slack parameter.
pub const DEFAULT_ETA: f64 = 1e-4;

/// Dense affine layer: `out = weights * x + bias`, rows indexed by output.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl AffineLayer {
    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                // bias-first accumulation in index order, matching the atom
                // evaluation order so exact comparators stay exact on
                // boundary points
                let mut acc = *b;
                for (w, v) in row.iter().zip(x) {
                    acc += w * v;
                }
                acc
            })
            .collect()
    }
}

/// Boolean connective of a gadget stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GateOp {
    And,
    Or,
}

/// How the compiled circuit was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompileMode {
    /// The scalar comparator is equivalent to the formula (pure-shape fast
    /// path, or a lone atom through its base gadget).
    FastPathExact,
    /// Recursive gadget; sound with a bounded over-approximation.
    GadgetApprox,
}

/// Per-composite-node gadget parameters, in formula pre-order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GadgetNode {
    pub op: GateOp,
    pub fan_out: usize,
    pub b: f64,
}

/// Compilation metadata kept alongside the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitMeta {
    pub eta: f64,
    pub root_op: GateOp,
    pub strictness: Strictness,
    pub mode: CompileMode,
    /// Constant term of each atom's base gadget, in formula pre-order.
    pub atom_constants: Vec<f64>,
    /// Stage parameters of each composite node, in formula pre-order.
    pub gadget_nodes: Vec<GadgetNode>,
    /// Identity neurons inserted to carry signals of shallow subtrees across
    /// ReLU stages; zero for depth-aligned formulas.
    pub carry_neurons: usize,
    /// Atom slack bound for a counterexample on the asserted side, when one
    /// is guaranteed.
    pub error_margin: Option<f64>,
}

/// The appended sub-network: alternating affine layers with implicit ReLUs
/// between consecutive layers (none after the last).
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitIR {
    pub input_arity: usize,
    pub layers: Vec<AffineLayer>,
    pub meta: CircuitMeta,
}

impl CircuitIR {
    pub fn relu_stages(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    /// Total affine rows, i.e. neurons including the scalar output.
    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(AffineLayer::out_dim).sum()
    }
}

/// Scalar output comparator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn negated(self) -> Comparator {
        match self {
            Comparator::Lt => Comparator::Ge,
            Comparator::Le => Comparator::Gt,
            Comparator::Gt => Comparator::Le,
            Comparator::Ge => Comparator::Lt,
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

/// Final scalar query: the comparison asserted to the solver (satisfiable iff
/// a counterexample candidate exists) and, dually, the goal whose validity
/// establishes the property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuerySpec {
    pub assert_cmp: Comparator,
    pub threshold: f64,
}

impl QuerySpec {
    pub fn verify_cmp(&self) -> Comparator {
        self.assert_cmp.negated()
    }

    /// True when the circuit output lies on the asserted (counterexample)
    /// side.
    pub fn asserted(&self, y: f64) -> bool {
        self.assert_cmp.holds(y, self.threshold)
    }
}

/// A compiled formula: appended layers plus the scalar query.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub circuit: CircuitIR,
    pub query: QuerySpec,
}

/// Stage bias: `eta * (1 + 1/k)` for conjunctions, `2 * eta` for
/// disjunctions.
pub fn b_value(op: GateOp, fan_out: usize, eta: f64) -> f64 {
    match op {
        GateOp::And => eta * (1.0 + 1.0 / fan_out as f64),
        GateOp::Or => 2.0 * eta,
    }
}

/// Guaranteed atom slack of a counterexample, by shape: exact for a lone
/// atom, `2*eta` for CNF/DNF (pure shapes included), and no bound is claimed
/// for general-shape formulas.
pub fn expected_error_margin(f: &Formula, eta: f64) -> Option<f64> {
    let class = f.classify();
    match (class.root, class.shape) {
        (RootKind::Atomic, _) => Some(0.0),
        (_, Shape::Dnf | Shape::Cnf | Shape::PureConj | Shape::PureDisj) => Some(2.0 * eta),
        _ => None,
    }
}

/// Exact single-ReLU-stage encoding of pure shapes.
///
/// Requires a pure conjunction with every atom nonstrict (assert `y <= 0`)
/// or a pure disjunction with every atom strict (assert `y > 0`); any other
/// strictness pattern breaks the equivalence and must go through the gadget.
pub fn compile_fast_path(f: &Formula, arity: usize) -> Result<Compiled> {
    f.check_flattened()?;
    check_arity(f, arity)?;
    let class = f.classify();
    let (children, op) = match f {
        Formula::And(children) if class.strictness == Strictness::NonStrict => {
            (children, GateOp::And)
        }
        Formula::Or(children) if class.strictness == Strictness::Strict => (children, GateOp::Or),
        _ => return Err(Error::FastPathShape),
    };
    let mut rows = Vec::with_capacity(children.len());
    let mut bias = Vec::with_capacity(children.len());
    let mut atom_constants = Vec::with_capacity(children.len());
    for child in children {
        let Formula::Atom(a) = child else {
            return Err(Error::FastPathShape);
        };
        // conjunction keeps LE; disjunction negates so that y > 0 iff some
        // strict atom holds
        let expr = match op {
            GateOp::And => a.expr.clone(),
            GateOp::Or => a.expr.negated(),
        };
        rows.push(dense_row(&expr, arity));
        bias.push(expr.bias());
        atom_constants.push(expr.bias());
    }
    let n = rows.len();
    let layers = vec![
        AffineLayer {
            weights: rows,
            bias,
        },
        AffineLayer {
            weights: vec![vec![1.0; n]],
            bias: vec![0.0],
        },
    ];
    let assert_cmp = match op {
        GateOp::And => Comparator::Le,
        GateOp::Or => Comparator::Gt,
    };
    Ok(Compiled {
        circuit: CircuitIR {
            input_arity: arity,
            layers,
            meta: CircuitMeta {
                eta: 0.0,
                root_op: op,
                strictness: class.strictness,
                mode: CompileMode::FastPathExact,
                atom_constants,
                gadget_nodes: Vec::new(),
                carry_neurons: 0,
                error_margin: Some(0.0),
            },
        },
        query: QuerySpec {
            assert_cmp,
            threshold: 0.0,
        },
    })
}

/// Recursive gadget encoding of an arbitrary flattened formula.
pub fn compile_gadget(f: &Formula, arity: usize, eta: f64) -> Result<Compiled> {
    if eta <= 0.0 {
        return Err(Error::EtaNotPositive(eta));
    }
    if eta < ETA_FLOOR {
        return Err(Error::EtaTooSmall(eta));
    }
    f.check_flattened()?;
    check_arity(f, arity)?;

    let strictness = f.strictness();
    let (atom_constants, gadget_nodes) = collect_meta(f, eta);

    // A lone atom compiles to a single affine row through the conjunctive
    // base gadget `LE + eta`, giving an exact comparator against eta.
    if let Formula::Atom(a) = f {
        let row = dense_row(&a.expr, arity);
        let bias = a.expr.bias() + eta;
        let layers = vec![AffineLayer {
            weights: vec![row],
            bias: vec![bias],
        }];
        let assert_cmp = match strictness {
            Strictness::NonStrict => Comparator::Le,
            Strictness::Strict => Comparator::Lt,
        };
        return Ok(Compiled {
            circuit: CircuitIR {
                input_arity: arity,
                layers,
                meta: CircuitMeta {
                    eta,
                    root_op: GateOp::And,
                    strictness,
                    mode: CompileMode::FastPathExact,
                    atom_constants,
                    gadget_nodes,
                    carry_neurons: 0,
                    error_margin: Some(0.0),
                },
            },
            query: QuerySpec {
                assert_cmp,
                threshold: eta,
            },
        });
    }

    let mut builder = StageBuilder {
        eta,
        stages: Vec::new(),
        carries: 0,
    };
    let (stage, refs) = builder.lower(f)?;
    debug_assert_eq!(stage + 1, builder.stages.len());

    let mut layers = Vec::with_capacity(builder.stages.len() + 1);
    for (s, rows) in builder.stages.iter().enumerate() {
        let in_dim = if s == 0 {
            arity
        } else {
            builder.stages[s - 1].len()
        };
        let mut weights = Vec::with_capacity(rows.len());
        let mut bias = Vec::with_capacity(rows.len());
        for row in rows {
            let mut dense = vec![0.0; in_dim];
            for &(i, w) in &row.terms {
                dense[i] += w;
            }
            weights.push(dense);
            bias.push(row.bias);
        }
        layers.push(AffineLayer { weights, bias });
    }
    // output row: sum of the root's flip neurons
    let last_dim = builder.stages[stage].len();
    let mut out_row = vec![0.0; last_dim];
    for &i in &refs {
        out_row[i] = 1.0;
    }
    layers.push(AffineLayer {
        weights: vec![out_row],
        bias: vec![0.0],
    });

    let root_op = match f {
        Formula::And(_) => GateOp::And,
        Formula::Or(_) => GateOp::Or,
        Formula::Atom(_) => unreachable!(),
    };
    let assert_cmp = match (root_op, strictness) {
        (GateOp::Or, Strictness::NonStrict) => Comparator::Ge,
        (GateOp::Or, Strictness::Strict) => Comparator::Gt,
        (GateOp::And, Strictness::NonStrict) => Comparator::Le,
        (GateOp::And, Strictness::Strict) => Comparator::Lt,
    };
    Ok(Compiled {
        circuit: CircuitIR {
            input_arity: arity,
            layers,
            meta: CircuitMeta {
                eta,
                root_op,
                strictness,
                mode: CompileMode::GadgetApprox,
                atom_constants,
                gadget_nodes,
                carry_neurons: builder.carries,
                error_margin: expected_error_margin(f, eta),
            },
        },
        query: QuerySpec {
            assert_cmp,
            threshold: eta,
        },
    })
}

/// Route a formula to the exact fast path when its shape admits one, and to
/// the gadget otherwise.
///
/// For a pure conjunction the recursive strictness is nonstrict exactly when
/// every atom is, and dually for pure disjunctions, so the class alone
/// decides eligibility; mixed-strictness pure shapes land in the gadget.
pub fn compile(f: &Formula, arity: usize, eta: f64) -> Result<Compiled> {
    let class = f.classify();
    let fast_eligible = match (class.root, class.shape, class.strictness) {
        (RootKind::Atomic, _, _) => false,
        (_, Shape::PureConj, Strictness::NonStrict) => true,
        (_, Shape::PureDisj, Strictness::Strict) => true,
        _ => false,
    };
    if fast_eligible {
        return compile_fast_path(f, arity);
    }
    compile_gadget(f, arity, eta)
}

fn check_arity(f: &Formula, arity: usize) -> Result<()> {
    if f.arity() > arity {
        return Err(Error::ArityMismatch {
            var: f.arity() - 1,
            arity,
        });
    }
    Ok(())
}

fn dense_row(expr: &LinearExpr, arity: usize) -> Vec<f64> {
    let mut row = vec![0.0; arity];
    for (v, c) in expr.coeffs() {
        row[v] = c;
    }
    row
}

/// Pre-order metadata walk: atom base-gadget constants and per-node stage
/// parameters. The atom role is the dual of its parent's connective; a root
/// atom takes the conjunctive role.
fn collect_meta(f: &Formula, eta: f64) -> (Vec<f64>, Vec<GadgetNode>) {
    fn walk(
        f: &Formula,
        parent_op: Option<GateOp>,
        eta: f64,
        atoms: &mut Vec<f64>,
        nodes: &mut Vec<GadgetNode>,
    ) {
        match f {
            Formula::Atom(a) => {
                // role dual to the parent: conjunction below a disjunction
                // and vice versa
                let role = match parent_op {
                    Some(GateOp::And) => GateOp::Or,
                    Some(GateOp::Or) | None => GateOp::And,
                };
                let c = match role {
                    GateOp::And => a.expr.bias() + eta,
                    GateOp::Or => -a.expr.bias() + eta,
                };
                atoms.push(c);
            }
            Formula::And(children) => {
                nodes.push(GadgetNode {
                    op: GateOp::And,
                    fan_out: children.len(),
                    b: b_value(GateOp::And, children.len(), eta),
                });
                for c in children {
                    walk(c, Some(GateOp::And), eta, atoms, nodes);
                }
            }
            Formula::Or(children) => {
                nodes.push(GadgetNode {
                    op: GateOp::Or,
                    fan_out: children.len(),
                    b: b_value(GateOp::Or, children.len(), eta),
                });
                for c in children {
                    walk(c, Some(GateOp::Or), eta, atoms, nodes);
                }
            }
        }
    }
    let mut atoms = Vec::new();
    let mut nodes = Vec::new();
    walk(f, None, eta, &mut atoms, &mut nodes);
    (atoms, nodes)
}

/// Affine row over the previous ReLU stage (stage 0 reads the raw inputs).
struct Row {
    terms: Vec<(usize, f64)>,
    bias: f64,
}

struct StageBuilder {
    eta: f64,
    stages: Vec<Vec<Row>>,
    carries: usize,
}

impl StageBuilder {
    fn push_row(&mut self, stage: usize, row: Row) -> usize {
        while self.stages.len() <= stage {
            self.stages.push(Vec::new());
        }
        self.stages[stage].push(row);
        self.stages[stage].len() - 1
    }

    /// Copy a nonnegative (post-ReLU) neuron one stage forward.
    fn carry(&mut self, stage: usize, index: usize) -> usize {
        self.carries += 1;
        self.push_row(
            stage + 1,
            Row {
                terms: vec![(index, 1.0)],
                bias: 0.0,
            },
        )
    }

    /// Lower a composite node; returns the ReLU stage holding its per-child
    /// flip neurons and their indices within that stage.
    fn lower(&mut self, f: &Formula) -> Result<(usize, Vec<usize>)> {
        let (op, children) = match f {
            Formula::And(c) => (GateOp::And, c),
            Formula::Or(c) => (GateOp::Or, c),
            Formula::Atom(_) => unreachable!("lower is only called on composites"),
        };
        let b = b_value(op, children.len(), self.eta);
        // (stage, index) of each child's flip neuron before alignment
        let mut placed = Vec::with_capacity(children.len());
        for child in children {
            match child {
                Formula::Atom(a) => {
                    // fold the child base gadget into the flip:
                    //   and-stage: b - (-LE + eta) = LE + (b - eta)
                    //   or-stage:  b - (LE + eta) = -LE + (b - eta)
                    let expr = match op {
                        GateOp::And => a.expr.clone(),
                        GateOp::Or => a.expr.negated(),
                    };
                    let terms = expr.coeffs().collect();
                    let idx = self.push_row(
                        0,
                        Row {
                            terms,
                            bias: expr.bias() + b - self.eta,
                        },
                    );
                    placed.push((0, idx));
                }
                composite => {
                    let (child_stage, refs) = self.lower(composite)?;
                    let terms = refs.iter().map(|&i| (i, -1.0)).collect();
                    let idx = self.push_row(child_stage + 1, Row { terms, bias: b });
                    placed.push((child_stage + 1, idx));
                }
            }
        }
        let target = placed.iter().map(|&(s, _)| s).max().unwrap();
        let refs = placed
            .into_iter()
            .map(|(mut s, mut i)| {
                while s < target {
                    i = self.carry(s, i);
                    s += 1;
                }
                i
            })
            .collect();
        Ok((target, refs))
    }
}
