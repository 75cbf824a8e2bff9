//! Circuit intermediate representation, ASAP layering and interaction counting.
//!
//! Layers are 1-based: layer `l` ranges over `1..=depth`, matching the time axis
//! used by segmentation and placement.

mod qasm;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use qasm::{parse_qasm, serialize_qasm};

pub type Qubit = usize;

/// A unitary gate on one or two logical qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub name: String,
    pub qubits: Vec<Qubit>,
    pub params: Vec<f64>,
}

impl GateOp {
    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    /// The unordered pair a two-qubit gate acts on, smaller index first.
    pub fn pair(&self) -> Option<(Qubit, Qubit)> {
        match self.qubits.as_slice() {
            &[a, b] => Some((a.min(b), a.max(b))),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    Gate(GateOp),
    Measure { qubit: Qubit, clbit: usize },
    Barrier(Vec<Qubit>),
}

impl Instruction {
    pub fn qubits(&self) -> &[Qubit] {
        match self {
            Instruction::Gate(g) => &g.qubits,
            Instruction::Measure { qubit, .. } => std::slice::from_ref(qubit),
            Instruction::Barrier(qs) => qs,
        }
    }

    pub fn as_gate(&self) -> Option<&GateOp> {
        match self {
            Instruction::Gate(g) => Some(g),
            _ => None,
        }
    }
}

/// An ordered instruction list over a single quantum register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub name: String,
    n_qubits: usize,
    n_clbits: usize,
    ops: Vec<Instruction>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Param("a circuit needs at least one qubit".into()));
        }
        Ok(Circuit {
            name: name.into(),
            n_qubits,
            n_clbits: 0,
            ops: Vec::new(),
        })
    }

    pub fn with_clbits(mut self, n_clbits: usize) -> Self {
        self.n_clbits = n_clbits;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_clbits(&self) -> usize {
        self.n_clbits
    }

    pub fn ops(&self) -> &[Instruction] {
        &self.ops
    }

    pub fn gates(&self) -> impl Iterator<Item = &GateOp> {
        self.ops.iter().filter_map(Instruction::as_gate)
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates().filter(|g| g.is_two_qubit()).count()
    }

    fn check_qubit(&self, q: Qubit) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::Range(format!(
                "qubit {q} in a {}-qubit circuit",
                self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn push_gate(&mut self, name: &str, qubits: &[Qubit], params: &[f64]) -> Result<()> {
        if qubits.is_empty() || qubits.len() > 2 {
            return Err(Error::Unsupported(format!(
                "gate `{name}` on {} qubits",
                qubits.len()
            )));
        }
        for &q in qubits {
            self.check_qubit(q)?;
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::Param(format!(
                "gate `{name}` repeats qubit {}",
                qubits[0]
            )));
        }
        self.ops.push(Instruction::Gate(GateOp {
            name: name.to_string(),
            qubits: qubits.to_vec(),
            params: params.to_vec(),
        }));
        Ok(())
    }

    pub fn push_measure(&mut self, qubit: Qubit, clbit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        if clbit >= self.n_clbits {
            self.n_clbits = clbit + 1;
        }
        self.ops.push(Instruction::Measure { qubit, clbit });
        Ok(())
    }

    pub fn push_barrier(&mut self, qubits: &[Qubit]) -> Result<()> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        self.ops.push(Instruction::Barrier(qubits.to_vec()));
        Ok(())
    }

    // Infallible helpers for generators; indices are trusted.
    pub(crate) fn g1(&mut self, name: &str, q: Qubit) {
        self.push_gate(name, &[q], &[]).expect("valid 1q gate");
    }

    pub(crate) fn g1p(&mut self, name: &str, q: Qubit, theta: f64) {
        self.push_gate(name, &[q], &[theta]).expect("valid 1q gate");
    }

    pub(crate) fn g2(&mut self, name: &str, a: Qubit, b: Qubit) {
        self.push_gate(name, &[a, b], &[]).expect("valid 2q gate");
    }

    pub(crate) fn g2p(&mut self, name: &str, a: Qubit, b: Qubit, theta: f64) {
        self.push_gate(name, &[a, b], &[theta]).expect("valid 2q gate");
    }
}

/// Two-qubit gate counts per unordered qubit pair over some layer interval.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionCount {
    pairs: BTreeMap<(Qubit, Qubit), u64>,
}

impl InteractionCount {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, a: Qubit, b: Qubit, count: u64) {
        if count == 0 {
            return;
        }
        *self.pairs.entry((a.min(b), a.max(b))).or_insert(0) += count;
    }

    pub fn get(&self, a: Qubit, b: Qubit) -> u64 {
        self.pairs.get(&(a.min(b), a.max(b))).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((Qubit, Qubit), u64)> + '_ {
        self.pairs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.pairs.values().sum()
    }

    pub fn merge(&mut self, other: &InteractionCount) {
        for ((a, b), c) in other.iter() {
            self.add(a, b, c);
        }
    }

    /// Per-qubit adjacency lists `(partner, count)`, sized for `n_qubits`.
    pub fn adjacency(&self, n_qubits: usize) -> Vec<Vec<(Qubit, u64)>> {
        let mut adj = vec![Vec::new(); n_qubits];
        for ((a, b), c) in self.iter() {
            adj[a].push((b, c));
            adj[b].push((a, c));
        }
        adj
    }
}

/// A circuit scheduled into ASAP dependency layers.
#[derive(Debug, Clone)]
pub struct LayeredCircuit {
    circuit: Circuit,
    /// Instruction indices per layer; `layers[0]` is layer 1. Barriers belong to no layer.
    layers: Vec<Vec<usize>>,
    /// Two-qubit pairs executed in each layer.
    pairs_by_layer: Vec<Vec<(Qubit, Qubit)>>,
}

/// Schedules every gate and measurement at the earliest layer after all earlier
/// instructions that share a qubit. A barrier closes the current layers: nothing
/// after it may share a layer with anything before it.
pub fn layerize(circuit: &Circuit) -> LayeredCircuit {
    let mut frontier = vec![0usize; circuit.n_qubits()];
    let mut floor = 0usize;
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut pairs_by_layer: Vec<Vec<(Qubit, Qubit)>> = Vec::new();

    for (idx, op) in circuit.ops().iter().enumerate() {
        if let Instruction::Barrier(_) = op {
            floor = layers.len();
            continue;
        }
        let qs = op.qubits();
        let layer = qs.iter().map(|&q| frontier[q]).max().unwrap_or(0).max(floor) + 1;
        for &q in qs {
            frontier[q] = layer;
        }
        if layers.len() < layer {
            layers.resize_with(layer, Vec::new);
            pairs_by_layer.resize_with(layer, Vec::new);
        }
        layers[layer - 1].push(idx);
        if let Some(pair) = op.as_gate().and_then(GateOp::pair) {
            pairs_by_layer[layer - 1].push(pair);
        }
    }

    LayeredCircuit {
        circuit: circuit.clone(),
        layers,
        pairs_by_layer,
    }
}

impl LayeredCircuit {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Instruction indices in 1-based layer `l`.
    pub fn layer(&self, l: usize) -> &[usize] {
        &self.layers[l - 1]
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    /// Two-qubit pairs executed in 1-based layer `l`.
    pub fn layer_pairs(&self, l: usize) -> &[(Qubit, Qubit)] {
        &self.pairs_by_layer[l - 1]
    }

    pub fn check_interval(&self, from_layer: usize, to_layer: usize) -> Result<()> {
        if from_layer == 0 || from_layer > to_layer || to_layer > self.depth() {
            return Err(Error::Range(format!(
                "layer interval [{from_layer}, {to_layer}] outside [1, {}]",
                self.depth()
            )));
        }
        Ok(())
    }

    /// Two-qubit gate counts for gates scheduled in `[from_layer, to_layer]` (inclusive).
    pub fn count_interactions(&self, from_layer: usize, to_layer: usize) -> Result<InteractionCount> {
        self.check_interval(from_layer, to_layer)?;
        let mut counts = InteractionCount::new();
        for pairs in &self.pairs_by_layer[from_layer - 1..to_layer] {
            for &(a, b) in pairs {
                counts.add(a, b, 1);
            }
        }
        Ok(counts)
    }
}
