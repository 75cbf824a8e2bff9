//! Benchmark circuit generators: QFT, QAOA MaxCut and a ripple-carry adder.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Qubit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKind {
    Qft,
    Qaoa,
    Adder,
}

impl std::str::FromStr for BenchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qft" => Ok(BenchKind::Qft),
            "qaoa" => Ok(BenchKind::Qaoa),
            "adder" => Ok(BenchKind::Adder),
            other => Err(Error::Param(format!("unknown benchmark `{other}`"))),
        }
    }
}

impl BenchKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchKind::Qft => "qft",
            BenchKind::Qaoa => "qaoa",
            BenchKind::Adder => "adder",
        }
    }

    pub fn generate(self, size: usize, seed: u64) -> Result<Circuit> {
        match self {
            BenchKind::Qft => gen_qft(size),
            BenchKind::Qaoa => gen_qaoa(size, 1, seed),
            BenchKind::Adder => gen_adder(size),
        }
    }
}

/// Textbook QFT: H and a controlled-phase ladder per qubit, then the reversal swaps.
pub fn gen_qft(n: usize) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::Param(format!("qft needs at least 2 qubits, got {n}")));
    }
    let mut c = Circuit::new(format!("qft_{n}"), n)?;
    for j in 0..n {
        c.g1("h", j);
        for k in j + 1..n {
            c.g2p("cp", k, j, PI / 2f64.powi((k - j) as i32));
        }
    }
    for i in 0..n / 2 {
        c.g2("swap", i, n - 1 - i);
    }
    Ok(c)
}

/// Random simple graph where every vertex has degree 3 (or `n-1` when smaller),
/// sampled with the pairing model and restarted until simple. With an odd stub
/// count one vertex is left a stub short.
fn random_regular_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<(Qubit, Qubit)> {
    let degree = 3.min(n - 1);
    'attempt: loop {
        let mut stubs: Vec<Qubit> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
        stubs.shuffle(rng);
        if stubs.len() % 2 == 1 {
            stubs.pop();
        }
        let mut edges: Vec<(Qubit, Qubit)> = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || edges.contains(&(a, b)) {
                continue 'attempt;
            }
            edges.push((a, b));
        }
        edges.sort_unstable();
        return edges;
    }
}

/// QAOA MaxCut ansatz on a random 3-regular graph: `p_layers` rounds of
/// ZZ phase separation (CZ-conjugated RZ) and an RX mixer.
pub fn gen_qaoa(n: usize, p_layers: usize, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::Param(format!("qaoa needs at least 2 qubits, got {n}")));
    }
    if p_layers == 0 {
        return Err(Error::Param("qaoa needs at least one layer".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_regular_edges(n, &mut rng);
    let mut c = Circuit::new(format!("qaoa_{n}"), n)?;
    for q in 0..n {
        c.g1("h", q);
    }
    for _ in 0..p_layers {
        let gamma = rng.gen_range(0.0..PI);
        let beta = rng.gen_range(0.0..PI / 2.0);
        for &(a, b) in &edges {
            // exp(-iγ Z⊗Z) as CX·RZ·CX with each CX written as H·CZ·H
            c.g1("h", b);
            c.g2("cz", a, b);
            c.g1("h", b);
            c.g1p("rz", b, 2.0 * gamma);
            c.g1("h", b);
            c.g2("cz", a, b);
            c.g1("h", b);
        }
        for q in 0..n {
            c.g1p("rx", q, 2.0 * beta);
        }
    }
    Ok(c)
}

/// Toffoli in the standard 6-CNOT Clifford+T form.
fn ccx(c: &mut Circuit, a: Qubit, b: Qubit, t: Qubit) {
    c.g1("h", t);
    c.g2("cx", b, t);
    c.g1("tdg", t);
    c.g2("cx", a, t);
    c.g1("t", t);
    c.g2("cx", b, t);
    c.g1("tdg", t);
    c.g2("cx", a, t);
    c.g1("t", b);
    c.g1("t", t);
    c.g1("h", t);
    c.g2("cx", a, b);
    c.g1("t", a);
    c.g1("tdg", b);
    c.g2("cx", a, b);
}

fn maj(c: &mut Circuit, x: Qubit, y: Qubit, z: Qubit) {
    c.g2("cx", z, y);
    c.g2("cx", z, x);
    ccx(c, x, y, z);
}

fn uma(c: &mut Circuit, x: Qubit, y: Qubit, z: Qubit) {
    ccx(c, x, y, z);
    c.g2("cx", z, x);
    c.g2("cx", x, y);
}

/// CDKM ripple-carry adder on `n` total qubits: carry-in, `(n-2)/2` interleaved
/// `a_i`/`b_i` bit pairs and carry-out. An odd width leaves the last qubit idle.
pub fn gen_adder(n: usize) -> Result<Circuit> {
    if n < 4 {
        return Err(Error::Param(format!("adder needs at least 4 qubits, got {n}")));
    }
    let bits = (n - 2) / 2;
    let cin = 0;
    let a = |i: usize| 1 + 2 * i;
    let b = |i: usize| 2 + 2 * i;
    let cout = 2 * bits + 1;
    let mut c = Circuit::new(format!("adder_n{n}"), n)?;

    maj(&mut c, cin, b(0), a(0));
    for i in 1..bits {
        maj(&mut c, a(i - 1), b(i), a(i));
    }
    c.g2("cx", a(bits - 1), cout);
    for i in (1..bits).rev() {
        uma(&mut c, a(i - 1), b(i), a(i));
    }
    uma(&mut c, cin, b(0), a(0));
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{layerize, parse_qasm, serialize_qasm};

    #[test]
    fn qft2_structure() {
        let c = gen_qft(2).unwrap();
        let names: Vec<&str> = c.gates().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["h", "cp", "h", "swap"]);
        assert_eq!(c.two_qubit_gate_count(), 2);
        assert_eq!(c.gates().nth(1).unwrap().params, vec![PI / 2.0]);
    }

    #[test]
    fn qft_two_qubit_count() {
        for n in 2..20 {
            let c = gen_qft(n).unwrap();
            assert_eq!(c.two_qubit_gate_count(), n * (n - 1) / 2 + n / 2);
        }
        assert!(gen_qft(1).is_err());
    }

    #[test]
    fn qft_round_trips() {
        let c = gen_qft(4).unwrap();
        let back = parse_qasm(&serialize_qasm(&c)).unwrap();
        assert_eq!(back.ops(), c.ops());
    }

    #[test]
    fn qaoa_graph_is_regular_and_seeded() {
        for n in [4, 6, 10, 16] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let edges = random_regular_edges(n, &mut rng);
            let mut deg = vec![0; n];
            for &(a, b) in &edges {
                deg[a] += 1;
                deg[b] += 1;
            }
            assert!(deg.iter().all(|&d| d == 3), "{deg:?}");
        }
        assert_eq!(gen_qaoa(12, 1, 5).unwrap(), gen_qaoa(12, 1, 5).unwrap());
        assert_ne!(gen_qaoa(12, 1, 5).unwrap(), gen_qaoa(12, 1, 6).unwrap());
        let c = gen_qaoa(16, 2, 1).unwrap();
        // 24 edges × 2 CZ per layer
        assert_eq!(c.two_qubit_gate_count(), 2 * 24 * 2);
        assert!(gen_qaoa(7, 1, 0).is_ok());
        assert!(gen_qaoa(2, 1, 0).is_ok());
        assert!(gen_qaoa(1, 1, 0).is_err());
    }

    #[test]
    fn adder_shape() {
        let c = gen_adder(16).unwrap();
        assert_eq!(c.n_qubits(), 16);
        // 7 bits: 7 MAJ + 7 UMA, each 2 CX + 6-CX Toffoli, plus the carry-out CX
        assert_eq!(c.two_qubit_gate_count(), 14 * 8 + 1);
        assert!(layerize(&c).depth() > 50);
        assert!(gen_adder(3).is_err());
        assert!(gen_adder(5).is_ok());
    }
}
