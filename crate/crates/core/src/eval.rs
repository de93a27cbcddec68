//! Reference execution: forward passes over the supported op subset, softmax
//! confidence, and circuit evaluation.
//!
//! Everything runs in f64; float32 weights are widened on load, so the only
//! rounding left is the arithmetic itself.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gadget::CircuitIR;
use crate::onnx::{ModelGraph, NodeDef};

#[derive(Debug, Clone)]
struct Value {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Value {
    /// Rows/cols view, treating rank-1 as a single row.
    fn as_matrix(&self) -> (usize, usize) {
        match self.dims.len() {
            0 => (1, 1),
            1 => (1, self.dims[0]),
            2 => (self.dims[0], self.dims[1]),
            _ => {
                // flatten leading axes into the batch
                let cols = *self.dims.last().unwrap();
                (self.data.len() / cols, cols)
            }
        }
    }
}

/// Run the graph on a single flattened input vector and return the flattened
/// first output.
///
/// Supported ops: Gemm, MatMul, Add, Relu, Flatten. Anything else is
/// reported by name.
pub fn forward(graph: &ModelGraph, x: &[f64]) -> Result<Vec<f64>> {
    let n = graph.input_arity()?;
    if x.len() != n {
        return Err(Error::model(format!(
            "input has {} values but the model expects {n}",
            x.len()
        )));
    }
    let mut values: HashMap<&str, Value> = HashMap::new();
    for t in &graph.initializers {
        let data = t.float_data()?;
        values.insert(
            &t.name,
            Value {
                dims: t.dims.iter().map(|&d| d as usize).collect(),
                data: data.iter().map(|&v| f64::from(v)).collect(),
            },
        );
    }
    let input = graph.data_input()?;
    values.insert(
        &input.name,
        Value {
            dims: vec![1, n],
            data: x.to_vec(),
        },
    );

    for node in &graph.nodes {
        let out = eval_node(node, &values)?;
        values.insert(&node.outputs[0], out);
    }

    let out_name = &graph
        .outputs
        .first()
        .ok_or_else(|| Error::model("graph has no outputs"))?
        .name;
    let out = values
        .get(out_name.as_str())
        .ok_or_else(|| Error::model(format!("output `{out_name}` was never produced")))?;
    Ok(out.data.clone())
}

fn eval_node(node: &NodeDef, values: &HashMap<&str, Value>) -> Result<Value> {
    let get = |name: &str| -> Result<&Value> {
        values.get(name).ok_or_else(|| {
            Error::model(format!(
                "node `{}` needs `{name}` before it is produced",
                node.name
            ))
        })
    };
    match node.op_type.as_str() {
        "Gemm" => {
            let a = get(&node.inputs[0])?;
            let b = get(&node.inputs[1])?;
            let alpha = f64::from(node.attr_f("alpha", 1.0));
            let beta = f64::from(node.attr_f("beta", 1.0));
            let trans_a = node.attr_i("transA", 0) != 0;
            let trans_b = node.attr_i("transB", 0) != 0;
            let mut y = matmul(a, trans_a, b, trans_b, alpha)?;
            if let Some(c_name) = node.inputs.get(2) {
                let c = get(c_name)?;
                add_broadcast(&mut y, c, beta)?;
            }
            Ok(y)
        }
        "MatMul" => {
            let a = get(&node.inputs[0])?;
            let b = get(&node.inputs[1])?;
            matmul(a, false, b, false, 1.0)
        }
        "Add" => {
            let a = get(&node.inputs[0])?;
            let b = get(&node.inputs[1])?;
            let mut y = a.clone();
            add_broadcast(&mut y, b, 1.0)?;
            Ok(y)
        }
        "Relu" => {
            let a = get(&node.inputs[0])?;
            Ok(Value {
                dims: a.dims.clone(),
                data: a.data.iter().map(|&v| v.max(0.0)).collect(),
            })
        }
        "Flatten" => {
            let a = get(&node.inputs[0])?;
            Ok(Value {
                dims: vec![1, a.data.len()],
                data: a.data.clone(),
            })
        }
        other => Err(Error::UnsupportedOp(other.to_string())),
    }
}

fn matmul(a: &Value, trans_a: bool, b: &Value, trans_b: bool, alpha: f64) -> Result<Value> {
    let (ar, ac) = a.as_matrix();
    let (br, bc) = b.as_matrix();
    let (m, k) = if trans_a { (ac, ar) } else { (ar, ac) };
    let (kb, n) = if trans_b { (bc, br) } else { (br, bc) };
    if k != kb {
        return Err(Error::model(format!(
            "matmul inner dimensions disagree: {k} vs {kb}"
        )));
    }
    let fetch_a = |i: usize, j: usize| {
        if trans_a {
            a.data[j * ac + i]
        } else {
            a.data[i * ac + j]
        }
    };
    let fetch_b = |i: usize, j: usize| {
        if trans_b {
            b.data[j * bc + i]
        } else {
            b.data[i * bc + j]
        }
    };
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for l in 0..k {
            let av = fetch_a(i, l);
            if av == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += av * fetch_b(l, j);
            }
        }
    }
    if alpha != 1.0 {
        for v in &mut out {
            *v *= alpha;
        }
    }
    Ok(Value {
        dims: vec![m, n],
        data: out,
    })
}

/// `y += beta * c`, broadcasting `c` over rows when it is a vector.
fn add_broadcast(y: &mut Value, c: &Value, beta: f64) -> Result<()> {
    let (_, cols) = y.as_matrix();
    if c.data.len() == y.data.len() {
        for (v, &a) in y.data.iter_mut().zip(&c.data) {
            *v += beta * a;
        }
    } else if c.data.len() == cols {
        for (i, v) in y.data.iter_mut().enumerate() {
            *v += beta * c.data[i % cols];
        }
    } else {
        return Err(Error::model(format!(
            "cannot broadcast {} values onto {}",
            c.data.len(),
            y.data.len()
        )));
    }
    Ok(())
}

/// Softmax confidence of `class`, in percent, computed with max-subtracted
/// exponentials.
pub fn confidence(logits: &[f64], class: usize) -> Result<f64> {
    if class >= logits.len() {
        return Err(Error::ClassIndex {
            class,
            m: logits.len(),
        });
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLogits);
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
    Ok(100.0 * (logits[class] - max).exp() / sum)
}

/// Evaluate the circuit layers (ReLU between consecutive affine layers) on a
/// logit vector.
pub fn eval_circuit(circuit: &CircuitIR, logits: &[f64]) -> Result<f64> {
    if logits.len() != circuit.input_arity {
        return Err(Error::ArityMismatch {
            var: circuit.input_arity.saturating_sub(1),
            arity: logits.len(),
        });
    }
    let mut current = logits.to_vec();
    let last = circuit.layers.len() - 1;
    for (i, layer) in circuit.layers.iter().enumerate() {
        current = layer.apply(&current);
        if i < last {
            for v in &mut current {
                *v = v.max(0.0);
            }
        }
    }
    debug_assert_eq!(current.len(), 1);
    Ok(current[0])
}

/// Argmax with ties resolved toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
