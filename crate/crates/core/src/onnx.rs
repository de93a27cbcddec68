//! ONNX model reading, writing and graph surgery.
//!
//! The in-memory [`ModelGraph`] keeps exactly what surgery and the reference
//! evaluator need: node list, float initializers, and input/output shapes.
//! Ops outside the evaluator subset load fine (appending to them is
//! supported, running them is not); unknown protobuf fields are skipped and
//! non-float tensors are carried through opaquely so foreign models survive
//! a load/save cycle.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::gadget::CircuitIR;
use crate::pb::{Reader, Writer, WIRE_I32, WIRE_LEN, WIRE_VARINT};

const DATA_TYPE_FLOAT: i64 = 1;
const MIN_OPSET: i64 = 13;
const IR_VERSION: i64 = 8;

/// Tensor dimension: known extent or a symbolic (batch) parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dim {
    Known(u64),
    Sym(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueDef {
    pub name: String,
    pub dims: Vec<Dim>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Int(i64),
    Float(f32),
    Ints(Vec<i64>),
    Floats(Vec<f32>),
    Str(String),
    /// Unparsed attribute payload, re-emitted verbatim.
    Opaque(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttrDef {
    pub name: String,
    pub value: AttrValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDef {
    pub name: String,
    pub op_type: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub attrs: Vec<AttrDef>,
}

impl NodeDef {
    pub fn attr_i(&self, name: &str, default: i64) -> i64 {
        self.attrs
            .iter()
            .find(|a| a.name == name)
            .and_then(|a| match &a.value {
                AttrValue::Int(v) => Some(*v),
                _ => None,
            })
            .unwrap_or(default)
    }

    pub fn attr_f(&self, name: &str, default: f32) -> f32 {
        self.attrs
            .iter()
            .find(|a| a.name == name)
            .and_then(|a| match &a.value {
                AttrValue::Float(v) => Some(*v),
                _ => None,
            })
            .unwrap_or(default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorPayload {
    Float(Vec<f32>),
    /// Full original TensorProto bytes for dtypes we do not interpret.
    Opaque {
        data_type: i64,
        bytes: Vec<u8>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorDef {
    pub name: String,
    pub dims: Vec<u64>,
    pub payload: TensorPayload,
}

impl TensorDef {
    pub fn float(name: impl Into<String>, dims: Vec<u64>, data: Vec<f32>) -> Self {
        TensorDef {
            name: name.into(),
            dims,
            payload: TensorPayload::Float(data),
        }
    }

    pub fn float_data(&self) -> Result<&[f32]> {
        match &self.payload {
            TensorPayload::Float(data) => Ok(data),
            TensorPayload::Opaque { data_type, .. } => Err(Error::model(format!(
                "initializer `{}` has data type {} (only float32 is interpreted)",
                self.name, data_type
            ))),
        }
    }
}

/// Minimal computation-graph view of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGraph {
    pub graph_name: String,
    pub producer: String,
    pub opset: i64,
    pub nodes: Vec<NodeDef>,
    pub initializers: Vec<TensorDef>,
    pub inputs: Vec<ValueDef>,
    pub outputs: Vec<ValueDef>,
}

impl ModelGraph {
    pub fn initializer(&self, name: &str) -> Option<&TensorDef> {
        self.initializers.iter().find(|t| t.name == name)
    }

    /// First graph input that is not shadowed by an initializer.
    pub fn data_input(&self) -> Result<&ValueDef> {
        self.inputs
            .iter()
            .find(|v| self.initializer(&v.name).is_none())
            .ok_or_else(|| Error::model("graph has no data input"))
    }

    /// Flattened element count of the data input, batch dimension excluded.
    pub fn input_arity(&self) -> Result<usize> {
        let input = self.data_input()?;
        flat_arity(&input.dims)
            .ok_or_else(|| Error::model(format!("input `{}` has no usable shape", input.name)))
    }

    /// Flattened element count of the first graph output, batch excluded.
    pub fn output_arity(&self) -> Result<usize> {
        let out = self
            .outputs
            .first()
            .ok_or_else(|| Error::model("graph has no outputs"))?;
        flat_arity(&out.dims)
            .ok_or_else(|| Error::model(format!("output `{}` has no usable shape", out.name)))
    }
}

/// Non-batch element count: rank-1 shapes must be known; for higher ranks the
/// leading dimension is treated as batch and the rest must be known.
fn flat_arity(dims: &[Dim]) -> Option<usize> {
    match dims {
        [] => None,
        [Dim::Known(n)] => Some(*n as usize),
        [Dim::Sym(_)] => None,
        [_, rest @ ..] => {
            let mut prod: usize = 1;
            for d in rest {
                match d {
                    Dim::Known(n) => prod *= *n as usize,
                    Dim::Sym(_) => return None,
                }
            }
            Some(prod)
        }
    }
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

pub fn load_model(bytes: &[u8]) -> Result<ModelGraph> {
    let mut reader = Reader::new(bytes);
    let mut graph: Option<ModelGraph> = None;
    let mut producer = String::new();
    let mut opset: i64 = 0;
    while !reader.is_empty() {
        let (field, wire) = reader.read_tag()?;
        match field {
            2 if wire == WIRE_LEN => producer = reader.read_string()?,
            7 if wire == WIRE_LEN => {
                let mut sub = reader.read_message()?;
                graph = Some(decode_graph(&mut sub)?);
            }
            8 if wire == WIRE_LEN => {
                let mut sub = reader.read_message()?;
                let (domain, version) = decode_opset(&mut sub)?;
                if domain.is_empty() {
                    opset = opset.max(version);
                }
            }
            _ => reader.skip(wire)?,
        }
    }
    let mut graph = graph.ok_or_else(|| Error::model("model has no graph"))?;
    graph.producer = producer;
    graph.opset = if opset == 0 { MIN_OPSET } else { opset };
    check_unique_names(&graph)?;
    Ok(graph)
}

fn check_unique_names(graph: &ModelGraph) -> Result<()> {
    let mut seen = HashSet::new();
    for name in graph
        .initializers
        .iter()
        .map(|t| &t.name)
        .chain(graph.nodes.iter().flat_map(|n| n.outputs.iter()))
        .chain(
            graph
                .inputs
                .iter()
                .filter(|v| graph.initializer(&v.name).is_none())
                .map(|v| &v.name),
        )
    {
        if !seen.insert(name.clone()) {
            return Err(Error::model(format!("duplicate value name `{name}`")));
        }
    }
    Ok(())
}

fn decode_opset(reader: &mut Reader) -> Result<(String, i64)> {
    let mut domain = String::new();
    let mut version = 0i64;
    while !reader.is_empty() {
        let (field, wire) = reader.read_tag()?;
        match field {
            1 if wire == WIRE_LEN => domain = reader.read_string()?,
            2 if wire == WIRE_VARINT => version = reader.read_varint()? as i64,
            _ => reader.skip(wire)?,
        }
    }
    Ok((domain, version))
}

fn decode_graph(reader: &mut Reader) -> Result<ModelGraph> {
    let mut graph = ModelGraph {
        graph_name: String::new(),
        producer: String::new(),
        opset: 0,
        nodes: Vec::new(),
        initializers: Vec::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    while !reader.is_empty() {
        let (field, wire) = reader.read_tag()?;
        match field {
            1 if wire == WIRE_LEN => {
                let mut sub = reader.read_message()?;
                graph.nodes.push(decode_node(&mut sub)?);
            }
            2 if wire == WIRE_LEN => graph.graph_name = reader.read_string()?,
            5 if wire == WIRE_LEN => {
                let bytes = reader.read_bytes()?;
                graph.initializers.push(decode_tensor(bytes)?);
            }
            11 if wire == WIRE_LEN => {
                let mut sub = reader.read_message()?;
                graph.inputs.push(decode_value_info(&mut sub)?);
            }
            12 if wire == WIRE_LEN => {
                let mut sub = reader.read_message()?;
                graph.outputs.push(decode_value_info(&mut sub)?);
            }
            _ => reader.skip(wire)?,
        }
    }
    Ok(graph)
}

fn decode_node(reader: &mut Reader) -> Result<NodeDef> {
    let mut node = NodeDef {
        name: String::new(),
        op_type: String::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        attrs: Vec::new(),
    };
    while !reader.is_empty() {
        let (field, wire) = reader.read_tag()?;
        match field {
            1 if wire == WIRE_LEN => node.inputs.push(reader.read_string()?),
            2 if wire == WIRE_LEN => node.outputs.push(reader.read_string()?),
            3 if wire == WIRE_LEN => node.name = reader.read_string()?,
            4 if wire == WIRE_LEN => node.op_type = reader.read_string()?,
            5 if wire == WIRE_LEN => {
                let bytes = reader.read_bytes()?;
                node.attrs.push(decode_attr(bytes)?);
            }
            _ => reader.skip(wire)?,
        }
    }
    Ok(node)
}

fn decode_attr(bytes: &[u8]) -> Result<AttrDef> {
    let mut reader = Reader::new(bytes);
    let mut name = String::new();
    let mut ints = Vec::new();
    let mut floats = Vec::new();
    let mut int_val: Option<i64> = None;
    let mut float_val: Option<f32> = None;
    let mut str_val: Option<String> = None;
    let mut attr_type: i64 = 0;
    let mut opaque = false;
    while !reader.is_empty() {
        let (field, wire) = reader.read_tag()?;
        match field {
            1 if wire == WIRE_LEN => name = reader.read_string()?,
            2 if wire == WIRE_I32 => float_val = Some(reader.read_f32()?),
            3 if wire == WIRE_VARINT => int_val = Some(reader.read_varint()? as i64),
            4 if wire == WIRE_LEN => str_val = Some(reader.read_string()?),
            7 => reader.read_packed_f32(wire, &mut floats)?,
            8 => reader.read_packed_varints(wire, &mut ints)?,
            20 if wire == WIRE_VARINT => attr_type = reader.read_varint()? as i64,
            // tensor-, graph- or type-valued attributes: keep verbatim
            5 | 6 | 9 | 10 | 11 | 14 => {
                reader.skip(wire)?;
                opaque = true;
            }
            _ => reader.skip(wire)?,
        }
    }
    let value = if opaque {
        AttrValue::Opaque(bytes.to_vec())
    } else {
        // AttributeType: FLOAT=1 INT=2 STRING=3 FLOATS=6 INTS=7
        match attr_type {
            1 => AttrValue::Float(float_val.unwrap_or(0.0)),
            2 => AttrValue::Int(int_val.unwrap_or(0)),
            3 => AttrValue::Str(str_val.unwrap_or_default()),
            6 => AttrValue::Floats(floats),
            7 => AttrValue::Ints(ints),
            _ => {
                // untyped writers: infer from whichever payload is present
                if let Some(v) = int_val {
                    AttrValue::Int(v)
                } else if let Some(v) = float_val {
                    AttrValue::Float(v)
                } else if let Some(v) = str_val {
                    AttrValue::Str(v)
                } else if !ints.is_empty() {
                    AttrValue::Ints(ints)
                } else if !floats.is_empty() {
                    AttrValue::Floats(floats)
                } else {
                    AttrValue::Opaque(bytes.to_vec())
                }
            }
        }
    };
    Ok(AttrDef { name, value })
}

fn decode_tensor(bytes: &[u8]) -> Result<TensorDef> {
    let mut reader = Reader::new(bytes);
    let mut dims_i: Vec<i64> = Vec::new();
    let mut data_type: i64 = 0;
    let mut name = String::new();
    let mut raw: Option<Vec<u8>> = None;
    let mut floats: Vec<f32> = Vec::new();
    while !reader.is_empty() {
        let (field, wire) = reader.read_tag()?;
        match field {
            1 => reader.read_packed_varints(wire, &mut dims_i)?,
            2 if wire == WIRE_VARINT => data_type = reader.read_varint()? as i64,
            4 => reader.read_packed_f32(wire, &mut floats)?,
            8 if wire == WIRE_LEN => name = reader.read_string()?,
            9 if wire == WIRE_LEN => raw = Some(reader.read_bytes()?.to_vec()),
            _ => reader.skip(wire)?,
        }
    }
    let dims: Vec<u64> = dims_i.iter().map(|&d| d.max(0) as u64).collect();
    if data_type != DATA_TYPE_FLOAT {
        return Ok(TensorDef {
            name,
            dims,
            payload: TensorPayload::Opaque {
                data_type,
                bytes: bytes.to_vec(),
            },
        });
    }
    let expected: usize = dims.iter().product::<u64>() as usize;
    let data = if let Some(raw) = raw {
        if raw.len() != expected * 4 {
            return Err(Error::model(format!(
                "tensor `{name}`: raw data has {} bytes, shape wants {}",
                raw.len(),
                expected * 4
            )));
        }
        raw.chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else {
        if floats.len() != expected {
            return Err(Error::model(format!(
                "tensor `{name}`: float data has {} values, shape wants {expected}",
                floats.len()
            )));
        }
        floats
    };
    Ok(TensorDef::float(name, dims, data))
}

fn decode_value_info(reader: &mut Reader) -> Result<ValueDef> {
    let mut name = String::new();
    let mut dims = Vec::new();
    while !reader.is_empty() {
        let (field, wire) = reader.read_tag()?;
        match field {
            1 if wire == WIRE_LEN => name = reader.read_string()?,
            2 if wire == WIRE_LEN => {
                let mut type_proto = reader.read_message()?;
                while !type_proto.is_empty() {
                    let (tf, tw) = type_proto.read_tag()?;
                    if tf == 1 && tw == WIRE_LEN {
                        let mut tensor_type = type_proto.read_message()?;
                        while !tensor_type.is_empty() {
                            let (sf, sw) = tensor_type.read_tag()?;
                            if sf == 2 && sw == WIRE_LEN {
                                let mut shape = tensor_type.read_message()?;
                                while !shape.is_empty() {
                                    let (df, dw) = shape.read_tag()?;
                                    if df == 1 && dw == WIRE_LEN {
                                        let mut dim = shape.read_message()?;
                                        dims.push(decode_dim(&mut dim)?);
                                    } else {
                                        shape.skip(dw)?;
                                    }
                                }
                            } else {
                                tensor_type.skip(sw)?;
                            }
                        }
                    } else {
                        type_proto.skip(tw)?;
                    }
                }
            }
            _ => reader.skip(wire)?,
        }
    }
    Ok(ValueDef { name, dims })
}

fn decode_dim(reader: &mut Reader) -> Result<Dim> {
    let mut dim = Dim::Sym(String::new());
    while !reader.is_empty() {
        let (field, wire) = reader.read_tag()?;
        match field {
            1 if wire == WIRE_VARINT => dim = Dim::Known(reader.read_varint()?),
            2 if wire == WIRE_LEN => dim = Dim::Sym(reader.read_string()?),
            _ => reader.skip(wire)?,
        }
    }
    Ok(dim)
}

// ---------------------------------------------------------------------------
// encode
// ---------------------------------------------------------------------------

pub fn save_model(graph: &ModelGraph) -> Vec<u8> {
    let mut model = Writer::new();
    model.field_i64(1, IR_VERSION);
    model.field_string(2, &graph.producer);
    let mut g = Writer::new();
    for node in &graph.nodes {
        g.field_message(1, encode_node(node));
    }
    g.field_string(2, &graph.graph_name);
    for tensor in &graph.initializers {
        match &tensor.payload {
            TensorPayload::Float(_) => g.field_message(5, encode_tensor(tensor)),
            TensorPayload::Opaque { bytes, .. } => g.field_raw_message(5, bytes),
        }
    }
    for input in &graph.inputs {
        g.field_message(11, encode_value_info(input));
    }
    for output in &graph.outputs {
        g.field_message(12, encode_value_info(output));
    }
    model.field_message(7, g);
    let mut opset = Writer::new();
    opset.field_string(1, "");
    opset.field_i64(2, graph.opset.max(MIN_OPSET));
    model.field_message(8, opset);
    model.into_bytes()
}

fn encode_node(node: &NodeDef) -> Writer {
    let mut w = Writer::new();
    for input in &node.inputs {
        w.field_string(1, input);
    }
    for output in &node.outputs {
        w.field_string(2, output);
    }
    w.field_string(3, &node.name);
    w.field_string(4, &node.op_type);
    for attr in &node.attrs {
        match &attr.value {
            AttrValue::Opaque(bytes) => w.field_raw_message(5, bytes),
            _ => w.field_message(5, encode_attr(attr)),
        }
    }
    w
}

fn encode_attr(attr: &AttrDef) -> Writer {
    let mut w = Writer::new();
    w.field_string(1, &attr.name);
    match &attr.value {
        AttrValue::Float(v) => {
            w.field_f32(2, *v);
            w.field_varint(20, 1);
        }
        AttrValue::Int(v) => {
            w.field_i64(3, *v);
            w.field_varint(20, 2);
        }
        AttrValue::Str(v) => {
            w.field_string(4, v);
            w.field_varint(20, 3);
        }
        AttrValue::Floats(vs) => {
            let mut packed = Vec::with_capacity(vs.len() * 4);
            for &v in vs {
                packed.extend_from_slice(&v.to_le_bytes());
            }
            w.field_bytes(7, &packed);
            w.field_varint(20, 6);
        }
        AttrValue::Ints(vs) => {
            w.field_packed_i64(8, vs);
            w.field_varint(20, 7);
        }
        AttrValue::Opaque(_) => unreachable!("opaque attrs are emitted verbatim"),
    }
    w
}

fn encode_tensor(tensor: &TensorDef) -> Writer {
    let mut w = Writer::new();
    w.field_packed_i64(
        1,
        &tensor.dims.iter().map(|&d| d as i64).collect::<Vec<_>>(),
    );
    w.field_varint(2, DATA_TYPE_FLOAT as u64);
    w.field_string(8, &tensor.name);
    let data = match &tensor.payload {
        TensorPayload::Float(data) => data,
        TensorPayload::Opaque { .. } => unreachable!("opaque tensors are emitted verbatim"),
    };
    let mut raw = Vec::with_capacity(data.len() * 4);
    for &v in data {
        raw.extend_from_slice(&v.to_le_bytes());
    }
    w.field_bytes(9, &raw);
    w
}

fn encode_value_info(value: &ValueDef) -> Writer {
    let mut shape = Writer::new();
    for dim in &value.dims {
        let mut d = Writer::new();
        match dim {
            Dim::Known(n) => d.field_varint(1, *n),
            Dim::Sym(s) => d.field_string(2, s),
        }
        shape.field_message(1, d);
    }
    let mut tensor_type = Writer::new();
    tensor_type.field_varint(1, DATA_TYPE_FLOAT as u64);
    tensor_type.field_message(2, shape);
    let mut type_proto = Writer::new();
    type_proto.field_message(1, tensor_type);
    let mut w = Writer::new();
    w.field_string(1, &value.name);
    w.field_message(2, type_proto);
    w
}

// ---------------------------------------------------------------------------
// surgery
// ---------------------------------------------------------------------------

/// Attach a compiled circuit after the graph's first output.
///
/// Adds one Gemm per affine layer with a Relu between consecutive stages,
/// stores weights and biases as float32 initializers, and makes the fresh
/// scalar `Y_prop` the only graph output. The original output stays
/// computable; no existing node is renamed, and fresh names are suffixed on
/// collision.
pub fn append_circuit(graph: &ModelGraph, circuit: &CircuitIR) -> Result<ModelGraph> {
    let m = graph.output_arity()?;
    if m != circuit.input_arity {
        return Err(Error::model(format!(
            "cannot append: circuit expects {} inputs but the model has {} outputs",
            circuit.input_arity, m
        )));
    }
    let orig_output = graph
        .outputs
        .first()
        .ok_or_else(|| Error::model("graph has no outputs"))?
        .clone();

    let mut out = graph.clone();
    let mut taken: HashSet<String> = HashSet::new();
    taken.extend(out.initializers.iter().map(|t| t.name.clone()));
    taken.extend(out.inputs.iter().map(|v| v.name.clone()));
    taken.extend(out.outputs.iter().map(|v| v.name.clone()));
    for node in &out.nodes {
        taken.insert(node.name.clone());
        taken.extend(node.outputs.iter().cloned());
    }
    let fresh = |base: String, taken: &mut HashSet<String>| -> String {
        let mut name = base.clone();
        let mut k = 1;
        while taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        taken.insert(name.clone());
        name
    };

    let mut current = orig_output.name.clone();
    let last = circuit.layers.len() - 1;
    let mut final_name = String::new();
    for (i, layer) in circuit.layers.iter().enumerate() {
        let (rows, cols) = (layer.out_dim(), layer.in_dim());
        // Gemm computes A[1,K] x B[K,N] + C[N]; store B as the transpose of
        // the row-major layer weights.
        let mut b_data = vec![0f32; rows * cols];
        for (n, row) in layer.weights.iter().enumerate() {
            for (k, &w) in row.iter().enumerate() {
                b_data[k * rows + n] = w as f32;
            }
        }
        let c_data: Vec<f32> = layer.bias.iter().map(|&b| b as f32).collect();
        let w_name = fresh(format!("prop_w{i}"), &mut taken);
        let b_name = fresh(format!("prop_b{i}"), &mut taken);
        out.initializers.push(TensorDef::float(
            w_name.clone(),
            vec![cols as u64, rows as u64],
            b_data,
        ));
        out.initializers
            .push(TensorDef::float(b_name.clone(), vec![rows as u64], c_data));

        let gemm_out = if i == last {
            let name = fresh("Y_prop".to_string(), &mut taken);
            final_name = name.clone();
            name
        } else {
            fresh(format!("prop_gemm{i}_out"), &mut taken)
        };
        let gemm_name = fresh(format!("prop_gemm{i}"), &mut taken);
        out.nodes.push(NodeDef {
            name: gemm_name,
            op_type: "Gemm".to_string(),
            inputs: vec![current.clone(), w_name, b_name],
            outputs: vec![gemm_out.clone()],
            attrs: vec![
                AttrDef {
                    name: "alpha".into(),
                    value: AttrValue::Float(1.0),
                },
                AttrDef {
                    name: "beta".into(),
                    value: AttrValue::Float(1.0),
                },
                AttrDef {
                    name: "transA".into(),
                    value: AttrValue::Int(0),
                },
                AttrDef {
                    name: "transB".into(),
                    value: AttrValue::Int(0),
                },
            ],
        });
        current = gemm_out;
        if i < last {
            let relu_out = fresh(format!("prop_relu{i}_out"), &mut taken);
            let relu_name = fresh(format!("prop_relu{i}"), &mut taken);
            out.nodes.push(NodeDef {
                name: relu_name,
                op_type: "Relu".to_string(),
                inputs: vec![current.clone()],
                outputs: vec![relu_out.clone()],
                attrs: Vec::new(),
            });
            current = relu_out;
        }
    }

    // scalar output mirroring the rank of the original output
    let out_dims = if orig_output.dims.len() >= 2 {
        vec![Dim::Known(1), Dim::Known(1)]
    } else {
        vec![Dim::Known(1)]
    };
    out.outputs = vec![ValueDef {
        name: final_name,
        dims: out_dims,
    }];
    out.opset = out.opset.max(MIN_OPSET);
    Ok(out)
}

/// Fully connected Gemm/Relu chain with the given layer sizes; weights are
/// drawn from `weight`. Handy for fixtures and demos.
pub fn build_mlp(dims: &[usize], mut weight: impl FnMut() -> f32) -> ModelGraph {
    assert!(dims.len() >= 2, "need at least input and output sizes");
    let mut nodes = Vec::new();
    let mut initializers = Vec::new();
    let mut current = "x".to_string();
    let depth = dims.len() - 1;
    for i in 0..depth {
        let (k, n) = (dims[i], dims[i + 1]);
        let w_name = format!("w{i}");
        let b_name = format!("b{i}");
        initializers.push(TensorDef::float(
            w_name.clone(),
            vec![k as u64, n as u64],
            (0..k * n).map(|_| weight()).collect(),
        ));
        initializers.push(TensorDef::float(
            b_name.clone(),
            vec![n as u64],
            (0..n).map(|_| weight()).collect(),
        ));
        let gemm_out = if i == depth - 1 {
            "logits".to_string()
        } else {
            format!("gemm{i}_out")
        };
        nodes.push(NodeDef {
            name: format!("gemm{i}"),
            op_type: "Gemm".to_string(),
            inputs: vec![current.clone(), w_name, b_name],
            outputs: vec![gemm_out.clone()],
            attrs: vec![
                AttrDef {
                    name: "alpha".into(),
                    value: AttrValue::Float(1.0),
                },
                AttrDef {
                    name: "beta".into(),
                    value: AttrValue::Float(1.0),
                },
                AttrDef {
                    name: "transA".into(),
                    value: AttrValue::Int(0),
                },
                AttrDef {
                    name: "transB".into(),
                    value: AttrValue::Int(0),
                },
            ],
        });
        current = gemm_out.clone();
        if i < depth - 1 {
            let relu_out = format!("relu{i}_out");
            nodes.push(NodeDef {
                name: format!("relu{i}"),
                op_type: "Relu".to_string(),
                inputs: vec![current.clone()],
                outputs: vec![relu_out.clone()],
                attrs: Vec::new(),
            });
            current = relu_out;
        }
    }
    ModelGraph {
        graph_name: "mlp".to_string(),
        producer: "robustify".to_string(),
        opset: MIN_OPSET,
        nodes,
        initializers,
        inputs: vec![ValueDef {
            name: "x".to_string(),
            dims: vec![Dim::Known(1), Dim::Known(dims[0] as u64)],
        }],
        outputs: vec![ValueDef {
            name: "logits".to_string(),
            dims: vec![Dim::Known(1), Dim::Known(dims[dims.len() - 1] as u64)],
        }],
    }
}
