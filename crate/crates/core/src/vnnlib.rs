//! Property-file subset: s-expressions with `declare-const X_i|Y_i Real`,
//! `assert`, the connectives `and`/`or`, comparators `<= >= < >`, and linear
//! arithmetic built from `+ - *` where `*` joins a constant and a variable.
//! `;` starts a comment. This covers the robustness files exchanged between
//! verifiers and everything this tool emits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formula::{Formula, LinearExpr, RawFormula, RawRelation, Relation};
use crate::gadget::QuerySpec;
use crate::query::{InputBox, VerificationQuery};

// ---------------------------------------------------------------------------
// s-expressions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum SExpr {
    Atom(String, usize),
    List(Vec<SExpr>, usize),
}

impl SExpr {
    fn line(&self) -> usize {
        match self {
            SExpr::Atom(_, line) | SExpr::List(_, line) => *line,
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(String, usize)>> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' => {
                tokens.push((c.to_string(), line));
                chars.next();
            }
            _ => {
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                }
                tokens.push((atom, line));
            }
        }
    }
    Ok(tokens)
}

fn parse_sexprs(text: &str) -> Result<Vec<SExpr>> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<(Vec<SExpr>, usize)> = Vec::new();
    let mut top = Vec::new();
    for (tok, line) in tokens {
        match tok.as_str() {
            "(" => stack.push((Vec::new(), line)),
            ")" => {
                let (items, open_line) = stack
                    .pop()
                    .ok_or_else(|| Error::vnnlib(line, "unbalanced `)`"))?;
                let expr = SExpr::List(items, open_line);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(expr),
                    None => top.push(expr),
                }
            }
            _ => {
                let expr = SExpr::Atom(tok, line);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(expr),
                    None => top.push(expr),
                }
            }
        }
    }
    if let Some((_, line)) = stack.last() {
        return Err(Error::vnnlib(*line, "unbalanced `(`"));
    }
    Ok(top)
}

// ---------------------------------------------------------------------------
// linear terms over X and Y variables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Var {
    X(usize),
    Y(usize),
}

#[derive(Debug, Clone, Default)]
struct Lin {
    coeffs: BTreeMap<Var, f64>,
    bias: f64,
}

impl Lin {
    fn constant(bias: f64) -> Self {
        Lin {
            coeffs: BTreeMap::new(),
            bias,
        }
    }

    fn var(v: Var) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, 1.0);
        Lin { coeffs, bias: 0.0 }
    }

    fn add(mut self, other: &Lin, sign: f64) -> Lin {
        for (&v, &c) in &other.coeffs {
            *self.coeffs.entry(v).or_insert(0.0) += sign * c;
        }
        self.bias += sign * other.bias;
        self.coeffs.retain(|_, c| *c != 0.0);
        self
    }

    fn scale(mut self, factor: f64) -> Lin {
        for c in self.coeffs.values_mut() {
            *c *= factor;
        }
        self.bias *= factor;
        self.coeffs.retain(|_, c| *c != 0.0);
        self
    }

    fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn split(&self) -> (bool, bool) {
        let has_x = self.coeffs.keys().any(|v| matches!(v, Var::X(_)));
        let has_y = self.coeffs.keys().any(|v| matches!(v, Var::Y(_)));
        (has_x, has_y)
    }
}

struct Declared {
    n_inputs: usize,
    m_outputs: usize,
}

fn parse_var(name: &str) -> Option<Var> {
    let idx = |s: &str| s.parse::<usize>().ok();
    if let Some(rest) = name.strip_prefix("X_") {
        return idx(rest).map(Var::X);
    }
    if let Some(rest) = name.strip_prefix("Y_") {
        return idx(rest).map(Var::Y);
    }
    None
}

fn parse_lin(expr: &SExpr, decl: &Declared) -> Result<Lin> {
    match expr {
        SExpr::Atom(tok, line) => {
            if let Some(var) = parse_var(tok) {
                check_declared(var, decl, *line)?;
                return Ok(Lin::var(var));
            }
            tok.parse::<f64>().map(Lin::constant).map_err(|_| {
                Error::vnnlib(*line, format!("expected a number or variable, got `{tok}`"))
            })
        }
        SExpr::List(items, line) => {
            let (head, args) = items
                .split_first()
                .ok_or_else(|| Error::vnnlib(*line, "empty arithmetic term"))?;
            let SExpr::Atom(op, _) = head else {
                return Err(Error::vnnlib(*line, "expected an operator"));
            };
            match op.as_str() {
                "+" => {
                    let mut acc = Lin::constant(0.0);
                    for a in args {
                        let t = parse_lin(a, decl)?;
                        acc = acc.add(&t, 1.0);
                    }
                    Ok(acc)
                }
                "-" => match args {
                    [one] => Ok(parse_lin(one, decl)?.scale(-1.0)),
                    [first, rest @ ..] => {
                        let mut acc = parse_lin(first, decl)?;
                        for a in rest {
                            let t = parse_lin(a, decl)?;
                            acc = acc.add(&t, -1.0);
                        }
                        Ok(acc)
                    }
                    [] => Err(Error::vnnlib(*line, "`-` needs at least one argument")),
                },
                "*" => {
                    if args.len() != 2 {
                        return Err(Error::vnnlib(*line, "`*` takes exactly two arguments"));
                    }
                    let a = parse_lin(&args[0], decl)?;
                    let b = parse_lin(&args[1], decl)?;
                    if a.is_constant() {
                        Ok(b.scale(a.bias))
                    } else if b.is_constant() {
                        Ok(a.scale(b.bias))
                    } else {
                        Err(Error::vnnlib(
                            *line,
                            "nonlinear term: `*` must join a constant and a variable",
                        ))
                    }
                }
                other => Err(Error::vnnlib(*line, format!("unknown operator `{other}`"))),
            }
        }
    }
}

fn check_declared(var: Var, decl: &Declared, line: usize) -> Result<()> {
    let ok = match var {
        Var::X(i) => i < decl.n_inputs,
        Var::Y(i) => i < decl.m_outputs,
    };
    if !ok {
        let name = match var {
            Var::X(i) => format!("X_{i}"),
            Var::Y(i) => format!("Y_{i}"),
        };
        return Err(Error::vnnlib(line, format!("undeclared variable `{name}`")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// parsing a property file
// ---------------------------------------------------------------------------

enum AssertItem {
    XBound {
        var: usize,
        lin: Lin,
        relation: RawRelation,
        line: usize,
    },
    YFormula(RawFormula),
}

fn parse_bexpr(
    expr: &SExpr,
    decl: &Declared,
    items: &mut Vec<AssertItem>,
    top: bool,
) -> Result<()> {
    let SExpr::List(parts, line) = expr else {
        return Err(Error::vnnlib(expr.line(), "expected a constraint"));
    };
    let (head, args) = parts
        .split_first()
        .ok_or_else(|| Error::vnnlib(*line, "empty constraint"))?;
    let SExpr::Atom(op, _) = head else {
        return Err(Error::vnnlib(*line, "expected a connective or comparator"));
    };
    match op.as_str() {
        // a top-level `and` is the same as separate asserts
        "and" if top => {
            for a in args {
                parse_bexpr(a, decl, items, true)?;
            }
            Ok(())
        }
        "and" | "or" => {
            let f = parse_formula(expr, decl)?;
            items.push(AssertItem::YFormula(f));
            Ok(())
        }
        "<=" | "<" | ">=" | ">" => {
            let (lin, relation) = parse_comparison(parts, decl, *line)?;
            let (has_x, has_y) = lin.split();
            match (has_x, has_y) {
                (true, true) => Err(Error::vnnlib(
                    *line,
                    "constraint mixes input and output variables",
                )),
                (true, false) => {
                    if lin.coeffs.len() != 1 {
                        return Err(Error::vnnlib(
                            *line,
                            "input constraints must bound a single input variable",
                        ));
                    }
                    let (&var, _) = lin.coeffs.iter().next().unwrap();
                    let Var::X(i) = var else { unreachable!() };
                    items.push(AssertItem::XBound {
                        var: i,
                        lin,
                        relation,
                        line: *line,
                    });
                    Ok(())
                }
                (false, _) => {
                    items.push(AssertItem::YFormula(lin_to_atom(&lin, relation)));
                    Ok(())
                }
            }
        }
        other => Err(Error::vnnlib(*line, format!("unknown form `{other}`"))),
    }
}

/// Comparator applied to two linear sides, normalized to `lhs - rhs (op) 0`.
fn parse_comparison(parts: &[SExpr], decl: &Declared, line: usize) -> Result<(Lin, RawRelation)> {
    let SExpr::Atom(op, _) = &parts[0] else {
        unreachable!()
    };
    if parts.len() != 3 {
        return Err(Error::vnnlib(
            line,
            format!("`{op}` takes exactly two arguments"),
        ));
    }
    let lhs = parse_lin(&parts[1], decl)?;
    let rhs = parse_lin(&parts[2], decl)?;
    let lin = lhs.add(&rhs, -1.0);
    let relation = match op.as_str() {
        "<=" => RawRelation::Le,
        "<" => RawRelation::Lt,
        ">=" => RawRelation::Ge,
        ">" => RawRelation::Gt,
        _ => unreachable!(),
    };
    Ok((lin, relation))
}

fn lin_to_atom(lin: &Lin, relation: RawRelation) -> RawFormula {
    let terms = lin.coeffs.iter().map(|(&v, &c)| {
        let Var::Y(i) = v else {
            unreachable!("x terms are filtered before atom construction")
        };
        (i, c)
    });
    RawFormula::atom(LinearExpr::new(terms, lin.bias), relation)
}

fn parse_formula(expr: &SExpr, decl: &Declared) -> Result<RawFormula> {
    let SExpr::List(parts, line) = expr else {
        return Err(Error::vnnlib(expr.line(), "expected a constraint"));
    };
    let (head, args) = parts
        .split_first()
        .ok_or_else(|| Error::vnnlib(*line, "empty constraint"))?;
    let SExpr::Atom(op, _) = head else {
        return Err(Error::vnnlib(*line, "expected a connective or comparator"));
    };
    match op.as_str() {
        "and" => Ok(RawFormula::And(
            args.iter()
                .map(|a| parse_formula(a, decl))
                .collect::<Result<Vec<_>>>()?,
        )),
        "or" => Ok(RawFormula::Or(
            args.iter()
                .map(|a| parse_formula(a, decl))
                .collect::<Result<Vec<_>>>()?,
        )),
        "<=" | "<" | ">=" | ">" => {
            let (lin, relation) = parse_comparison(parts, decl, *line)?;
            let (has_x, _) = lin.split();
            if has_x {
                return Err(Error::vnnlib(
                    *line,
                    "input variables are not allowed inside the post-condition",
                ));
            }
            Ok(lin_to_atom(&lin, relation))
        }
        other => Err(Error::vnnlib(*line, format!("unknown form `{other}`"))),
    }
}

/// Parse a property file into the input box and the (negated) post-condition.
///
/// Top-level asserts are conjoined. Simple bounds on `X_i` build the box;
/// everything else must mention only `Y` variables.
pub fn parse_vnnlib(text: &str) -> Result<(InputBox, Formula)> {
    let forms = parse_sexprs(text)?;
    let mut n_inputs = 0usize;
    let mut m_outputs = 0usize;
    let mut asserts = Vec::new();
    for form in &forms {
        let SExpr::List(parts, line) = form else {
            return Err(Error::vnnlib(form.line(), "expected a top-level form"));
        };
        let Some(SExpr::Atom(head, _)) = parts.first() else {
            return Err(Error::vnnlib(*line, "expected a top-level form"));
        };
        match head.as_str() {
            "declare-const" => {
                if parts.len() != 3 {
                    return Err(Error::vnnlib(
                        *line,
                        "declare-const takes a name and a sort",
                    ));
                }
                let SExpr::Atom(name, _) = &parts[1] else {
                    return Err(Error::vnnlib(*line, "expected a variable name"));
                };
                let SExpr::Atom(sort, _) = &parts[2] else {
                    return Err(Error::vnnlib(*line, "expected a sort"));
                };
                if sort != "Real" {
                    return Err(Error::vnnlib(*line, format!("unsupported sort `{sort}`")));
                }
                match parse_var(name) {
                    Some(Var::X(i)) => n_inputs = n_inputs.max(i + 1),
                    Some(Var::Y(i)) => m_outputs = m_outputs.max(i + 1),
                    None => {
                        return Err(Error::vnnlib(
                            *line,
                            format!("variable `{name}` must be X_<i> or Y_<i>"),
                        ))
                    }
                }
            }
            "assert" => {
                if parts.len() != 2 {
                    return Err(Error::vnnlib(*line, "assert takes exactly one constraint"));
                }
                asserts.push(&parts[1]);
            }
            other => return Err(Error::vnnlib(*line, format!("unknown form `{other}`"))),
        }
    }

    let decl = Declared {
        n_inputs,
        m_outputs,
    };
    let mut items = Vec::new();
    for a in asserts {
        parse_bexpr(a, &decl, &mut items, true)?;
    }

    let mut lower = vec![f64::NEG_INFINITY; n_inputs];
    let mut upper = vec![f64::INFINITY; n_inputs];
    let mut conjuncts = Vec::new();
    for item in items {
        match item {
            AssertItem::XBound {
                var,
                lin,
                relation,
                line,
            } => {
                let c = *lin.coeffs.values().next().unwrap();
                // c * x + bias (op) 0, i.e. x (op') -bias/c with op' flipped
                // when c is negative
                let bound = -lin.bias / c;
                let upper_side = match relation {
                    RawRelation::Le => c > 0.0,
                    RawRelation::Ge => c < 0.0,
                    RawRelation::Lt | RawRelation::Gt => {
                        return Err(Error::vnnlib(
                            line,
                            "input bounds must be nonstrict (closed box)",
                        ))
                    }
                };
                if upper_side {
                    upper[var] = upper[var].min(bound);
                } else {
                    lower[var] = lower[var].max(bound);
                }
            }
            AssertItem::YFormula(f) => conjuncts.push(f),
        }
    }

    if let Some(i) = (0..n_inputs).find(|&i| !lower[i].is_finite() || !upper[i].is_finite()) {
        return Err(Error::InputBox(format!(
            "X_{i} is missing a lower or upper bound"
        )));
    }
    let input_box = InputBox::new(lower, upper)?;

    if conjuncts.is_empty() {
        return Err(Error::vnnlib(
            0,
            "no output constraints: the file asserts no property",
        ));
    }
    let raw = if conjuncts.len() == 1 {
        conjuncts.pop().expect("nonempty")
    } else {
        RawFormula::And(conjuncts)
    };
    let formula = raw.normalize()?.into_formula()?;
    Ok((input_box, formula))
}

// ---------------------------------------------------------------------------
// emission
// ---------------------------------------------------------------------------

fn fmt_f64(v: f64) -> String {
    // shortest decimal that round-trips; integral values keep a `.0`
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("nan") {
        s
    } else {
        format!("{s}.0")
    }
}

fn write_expr(out: &mut String, expr: &LinearExpr) {
    let terms: Vec<String> = expr
        .coeffs()
        .map(|(v, c)| {
            if c == 1.0 {
                format!("Y_{v}")
            } else {
                format!("(* {} Y_{v})", fmt_f64(c))
            }
        })
        .collect();
    let bias = expr.bias();
    let n_parts = terms.len() + usize::from(bias != 0.0);
    if n_parts > 1 {
        out.push_str("(+ ");
        out.push_str(&terms.join(" "));
        if bias != 0.0 {
            let _ = write!(out, " {}", fmt_f64(bias));
        }
        out.push(')');
    } else if let Some(t) = terms.first() {
        out.push_str(t);
    } else {
        out.push_str(&fmt_f64(bias));
    }
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::Atom(a) => {
            let op = match a.relation {
                Relation::LeZero => "<=",
                Relation::LtZero => "<",
            };
            let _ = write!(out, "({op} ");
            write_expr(out, &a.expr);
            out.push_str(" 0.0)");
        }
        Formula::And(children) => {
            out.push_str("(and ");
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_formula(out, c);
            }
            out.push(')');
        }
        Formula::Or(children) => {
            out.push_str("(or ");
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_formula(out, c);
            }
            out.push(')');
        }
    }
}

/// Serialize a box plus formula back into the subset grammar; used for
/// round-tripping parsed files.
pub fn emit_vnnlib(input_box: &InputBox, formula: &Formula) -> String {
    let mut out = String::new();
    let m = formula.arity().max(1);
    for i in 0..input_box.dim() {
        let _ = writeln!(out, "(declare-const X_{i} Real)");
    }
    for i in 0..m {
        let _ = writeln!(out, "(declare-const Y_{i} Real)");
    }
    out.push('\n');
    for i in 0..input_box.dim() {
        let _ = writeln!(out, "(assert (>= X_{i} {}))", fmt_f64(input_box.lower[i]));
        let _ = writeln!(out, "(assert (<= X_{i} {}))", fmt_f64(input_box.upper[i]));
    }
    out.push('\n');
    out.push_str("(assert ");
    write_formula(&mut out, formula);
    out.push_str(")\n");
    out
}

/// Serialize a compiled query: box over the original inputs plus the scalar
/// assertion on the appended output `Y_0`.
pub fn emit_query(query: &VerificationQuery, spec: &QuerySpec) -> String {
    let mut out = String::new();
    let p = &query.provenance;
    let _ = writeln!(out, "; kind: {}", p.kind.as_str());
    if !p.deltas.is_empty() {
        let deltas: Vec<String> = p.deltas.iter().map(|d| fmt_f64(*d)).collect();
        let _ = writeln!(out, "; delta: {}", deltas.join(" "));
    }
    let _ = writeln!(out, "; eta: {}", fmt_f64(p.eta));
    let input_box = &query.input_box;
    for i in 0..input_box.dim() {
        let _ = writeln!(out, "(declare-const X_{i} Real)");
    }
    let _ = writeln!(out, "(declare-const Y_0 Real)");
    out.push('\n');
    for i in 0..input_box.dim() {
        let _ = writeln!(out, "(assert (>= X_{i} {}))", fmt_f64(input_box.lower[i]));
        let _ = writeln!(out, "(assert (<= X_{i} {}))", fmt_f64(input_box.upper[i]));
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "(assert ({} Y_0 {}))",
        spec.assert_cmp.symbol(),
        fmt_f64(spec.threshold)
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Atom, Shape};
    use crate::gadget::Comparator;
    use crate::query::{PropertyKind, QueryProvenance};

    #[test]
    fn simple_bounds_and_margin() {
        let text = "
            (declare-const X_0 Real)
            (declare-const Y_0 Real)
            (declare-const Y_1 Real)
            (assert (<= X_0 0.5))
            (assert (>= X_0 0.3))
            (assert (>= Y_1 Y_0))
        ";
        let (b, f) = parse_vnnlib(text).unwrap();
        assert_eq!(b.lower, vec![0.3]);
        assert_eq!(b.upper, vec![0.5]);
        // (>= Y_1 Y_0) canonicalizes to y0 - y1 <= 0
        assert_eq!(
            f,
            Formula::Atom(Atom::le(LinearExpr::new([(0, 1.0), (1, -1.0)], 0.0)))
        );
    }

    #[test]
    fn nested_or_and() {
        let text = "
            (declare-const X_0 Real)
            (declare-const Y_0 Real)
            (declare-const Y_1 Real)
            (declare-const Y_2 Real)
            (declare-const Y_3 Real)
            (assert (<= X_0 1.0))
            (assert (>= X_0 0.0))
            (assert (or (and (>= Y_0 Y_1) (>= Y_0 Y_2)) (>= Y_3 1.0)))
        ";
        let (_, f) = parse_vnnlib(text).unwrap();
        assert_eq!(f.classify().shape, Shape::Dnf);
        assert_eq!(f.atoms().len(), 3);
    }

    #[test]
    fn empty_property_is_an_error() {
        let text = "
            (declare-const X_0 Real)
            (assert (<= X_0 1.0))
            (assert (>= X_0 0.0))
        ";
        assert!(parse_vnnlib(text).is_err());
    }

    #[test]
    fn x_inside_post_condition_rejected() {
        let text = "
            (declare-const X_0 Real)
            (declare-const Y_0 Real)
            (assert (<= X_0 1.0))
            (assert (>= X_0 0.0))
            (assert (or (<= Y_0 0.0) (<= X_0 0.5)))
        ";
        let err = parse_vnnlib(text).unwrap_err();
        assert!(err.to_string().contains("post-condition"), "{err}");
    }

    #[test]
    fn undeclared_variable_rejected() {
        let text = "
            (declare-const X_0 Real)
            (declare-const Y_0 Real)
            (assert (<= X_0 1.0))
            (assert (>= X_0 0.0))
            (assert (<= Y_4 0.0))
        ";
        let err = parse_vnnlib(text).unwrap_err();
        assert!(err.to_string().contains("undeclared"), "{err}");
    }

    #[test]
    fn nonlinear_term_rejected() {
        let text = "
            (declare-const Y_0 Real)
            (declare-const Y_1 Real)
            (assert (<= (* Y_0 Y_1) 0.0))
        ";
        let err = parse_vnnlib(text).unwrap_err();
        assert!(err.to_string().contains("nonlinear"), "{err}");
    }

    #[test]
    fn missing_bound_rejected() {
        let text = "
            (declare-const X_0 Real)
            (declare-const Y_0 Real)
            (assert (<= X_0 1.0))
            (assert (<= Y_0 0.0))
        ";
        let err = parse_vnnlib(text).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }

    #[test]
    fn comments_and_top_level_and() {
        let text = "
            ; a property file
            (declare-const X_0 Real)
            (declare-const Y_0 Real)
            (assert (and (<= X_0 1.0) (>= X_0 -1.0))) ; box in one assert
            (assert (< Y_0 2.5))
        ";
        let (b, f) = parse_vnnlib(text).unwrap();
        assert_eq!(b.lower, vec![-1.0]);
        assert_eq!(b.upper, vec![1.0]);
        assert_eq!(f.atoms().len(), 1);
        assert!(f.eval(&[2.0]).unwrap());
        assert!(!f.eval(&[2.5]).unwrap());
    }

    #[test]
    fn round_trip_is_oracle_equivalent() {
        let text = "
            (declare-const X_0 Real)
            (declare-const X_1 Real)
            (declare-const Y_0 Real)
            (declare-const Y_1 Real)
            (declare-const Y_2 Real)
            (assert (<= X_0 0.125))
            (assert (>= X_0 -0.25))
            (assert (<= X_1 1.0))
            (assert (>= X_1 0.5))
            (assert (or (and (>= Y_0 (+ Y_1 0.01)) (> Y_0 Y_2)) (<= (- Y_2 (* 2.0 Y_1)) -3.5)))
        ";
        let (b1, f1) = parse_vnnlib(text).unwrap();
        let emitted = emit_vnnlib(&b1, &f1);
        let (b2, f2) = parse_vnnlib(&emitted).unwrap();
        assert_eq!(b1, b2);
        // oracle equivalence on a grid
        for i in 0..1000 {
            let p = [
                f64::from(i % 10) - 5.0 + 0.01,
                f64::from((i / 10) % 10) - 5.0 + 0.005,
                f64::from(i / 100) - 5.0,
            ];
            assert_eq!(f1.eval(&p).unwrap(), f2.eval(&p).unwrap());
        }
    }

    #[test]
    fn query_emission_formats() {
        let q = VerificationQuery {
            input_box: InputBox::new(vec![0.0], vec![1.0]).unwrap(),
            formula: Formula::Atom(Atom::le(LinearExpr::var(0))),
            provenance: QueryProvenance::bare(PropertyKind::Relaxed, 1e-4),
        };
        let qs = QuerySpec {
            assert_cmp: Comparator::Ge,
            threshold: 1e-4,
        };
        let text = emit_query(&q, &qs);
        assert!(text.contains("(assert (>= Y_0 0.0001))"), "{text}");
        let qs = QuerySpec {
            assert_cmp: Comparator::Le,
            threshold: 1e-4,
        };
        assert!(emit_query(&q, &qs).contains("(assert (<= Y_0 0.0001))"));
        let qs = QuerySpec {
            assert_cmp: Comparator::Gt,
            threshold: 1e-4,
        };
        assert!(emit_query(&q, &qs).contains("(assert (> Y_0 0.0001))"));
    }
}
