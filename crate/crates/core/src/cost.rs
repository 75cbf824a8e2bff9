//! The annealing objective `E = γ1·E_inter + γ2·E_local + γ3·E_move` and its
//! incremental evaluation.
//!
//! Each term is priced per segment from that segment's raw two-qubit counts.
//! `E_local` charges a co-located pair `cx_cost` per gate plus `swap_cost` for
//! every routing SWAP its physical distance implies, `E_inter` charges cut pairs
//! `remote_op_cost` times the weighted link-path cost, and `E_move` charges each
//! qubit that changed QPU since the previous segment `teleport_cost` times the
//! same path cost.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{InteractionCount, Qubit};
use crate::error::{Error, Result};
use crate::hardware::{ClusterTopology, Qpu, QpuId};
use crate::placement::Assignment;
use crate::segmentation::Segment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub cx_cost: f64,
    pub swap_cost: f64,
    pub remote_op_cost: f64,
    pub teleport_cost: f64,
}

pub const DEFAULT_RATIO: f64 = 5.0;

impl Default for CostParams {
    fn default() -> Self {
        CostParams::with_ratio(DEFAULT_RATIO)
    }
}

impl CostParams {
    /// Unit weights, `cx_cost = 1`, `swap_cost = 3`, and remote/teleport costs at
    /// `ratio` times a local CNOT.
    pub fn with_ratio(ratio: f64) -> Self {
        CostParams {
            gamma1: 1.0,
            gamma2: 1.0,
            gamma3: 1.0,
            cx_cost: 1.0,
            swap_cost: 3.0,
            remote_op_cost: ratio,
            teleport_cost: ratio,
        }
    }

    pub fn set_ratio(&mut self, ratio: f64) {
        self.remote_op_cost = ratio * self.cx_cost;
        self.teleport_cost = ratio * self.cx_cost;
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("cx_cost", self.cx_cost),
            ("swap_cost", self.swap_cost),
            ("remote_op_cost", self.remote_op_cost),
            ("teleport_cost", self.teleport_cost),
        ];
        for (name, v) in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Param(format!("{name} must be a nonnegative number, got {v}")));
            }
        }
        if self.cx_cost <= 0.0 {
            return Err(Error::Param("cx_cost must be positive".into()));
        }
        Ok(())
    }

    /// Cost of one gate between physical qubits `d` hops apart.
    pub fn local_gate_cost(&self, d: u32) -> f64 {
        self.cx_cost + self.swap_cost * f64::from(d.saturating_sub(1))
    }
}

/// Logical → physical placement inside one QPU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntraLayout {
    pub qpu: QpuId,
    /// `(logical, physical)` sorted by logical qubit.
    pub physical: Vec<(Qubit, usize)>,
}

impl IntraLayout {
    pub fn physical_of(&self, q: Qubit) -> Option<usize> {
        self.physical
            .binary_search_by_key(&q, |&(l, _)| l)
            .ok()
            .map(|i| self.physical[i].1)
    }
}

/// Pairs among `qubits` (sorted) with their counts, as local indices.
fn local_pairs(qubits: &[Qubit], interactions: &InteractionCount) -> Vec<(usize, usize, u64)> {
    let mut pairs = Vec::new();
    for ((a, b), f) in interactions.iter() {
        if let (Ok(i), Ok(j)) = (qubits.binary_search(&a), qubits.binary_search(&b)) {
            pairs.push((i, j, f));
        }
    }
    pairs
}

/// Greedy layout of `qubits` (sorted) on `qpu`; returns physical index per local qubit.
fn greedy_positions(qpu: &Qpu, m: usize, pairs: &[(usize, usize, u64)]) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); m];
    let mut strength = vec![0u64; m];
    for &(i, j, f) in pairs {
        adj[i].push((j, f));
        adj[j].push((i, f));
        strength[i] += f;
        strength[j] += f;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(strength[i]), i));

    let cap = qpu.comp_capacity;
    let mut pos = vec![usize::MAX; m];
    let mut used = vec![false; cap];
    for (rank, &i) in order.iter().enumerate() {
        let phys = if rank == 0 {
            (0..cap)
                .max_by_key(|&p| (qpu.degree[p], std::cmp::Reverse(p)))
                .expect("capacity ≥ 1")
        } else {
            let mut best = (u64::MAX, usize::MAX);
            for p in (0..cap).filter(|&p| !used[p]) {
                let cost: u64 = adj[i]
                    .iter()
                    .filter(|&&(j, _)| pos[j] != usize::MAX)
                    .map(|&(j, f)| f * u64::from(qpu.distance[p][pos[j]]))
                    .sum();
                if cost < best.0 {
                    best = (cost, p);
                }
            }
            best.1
        };
        pos[i] = phys;
        used[phys] = true;
    }
    pos
}

/// Deterministic greedy layout: qubits in descending order of interaction
/// weight inside this QPU; the first takes the highest-degree physical qubit,
/// each later one the free physical qubit nearest (by weighted hop distance)
/// to its already placed partners. Ties go to the lower index.
pub fn intra_layout(qpu: &Qpu, qubits: &[Qubit], interactions: &InteractionCount) -> Result<IntraLayout> {
    if qubits.len() > qpu.comp_capacity {
        return Err(Error::Infeasible(format!(
            "{} qubits on QPU {} with capacity {}",
            qubits.len(),
            qpu.id,
            qpu.comp_capacity
        )));
    }
    let mut sorted = qubits.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let pairs = local_pairs(&sorted, interactions);
    let pos = greedy_positions(qpu, sorted.len(), &pairs);
    Ok(IntraLayout {
        qpu: qpu.id,
        physical: sorted.into_iter().zip(pos).collect(),
    })
}

/// Unweighted local cost of `qubits` (sorted) sharing `qpu`.
fn local_cost_sorted(qpu: &Qpu, qubits: &[Qubit], interactions: &InteractionCount, cp: &CostParams) -> f64 {
    let pairs = local_pairs(qubits, interactions);
    if pairs.is_empty() {
        return 0.0;
    }
    let pos = greedy_positions(qpu, qubits.len(), &pairs);
    pairs
        .iter()
        .map(|&(i, j, f)| f as f64 * cp.local_gate_cost(qpu.distance[pos[i]][pos[j]]))
        .sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub e_inter: f64,
    pub e_local: f64,
    pub e_move: f64,
    pub e_total: f64,
    pub epr_pairs: u64,
}

impl CostBreakdown {
    fn compose(e_inter: f64, e_local: f64, e_move: f64, epr_pairs: u64, cp: &CostParams) -> Self {
        CostBreakdown {
            e_inter,
            e_local,
            e_move,
            e_total: cp.gamma1 * e_inter + cp.gamma2 * e_local + cp.gamma3 * e_move,
            epr_pairs,
        }
    }

    pub fn add(&mut self, other: &CostBreakdown) {
        self.e_inter += other.e_inter;
        self.e_local += other.e_local;
        self.e_move += other.e_move;
        self.e_total += other.e_total;
        self.epr_pairs += other.epr_pairs;
    }
}

fn check_cover(a: &Assignment, n: usize, cluster: &ClusterTopology) -> Result<()> {
    if a.n_qubits() < n {
        return Err(Error::Unassigned(a.n_qubits()));
    }
    if let Some(q) = (0..a.n_qubits()).find(|&q| a.qpu(q) >= cluster.n_qpus()) {
        return Err(Error::Param(format!("qubit {q} on unknown QPU {}", a.qpu(q))));
    }
    Ok(())
}

fn max_qubit(seg: &Segment) -> usize {
    seg.interactions.iter().map(|((_, b), _)| b + 1).max().unwrap_or(0)
}

pub fn e_local(a: &Assignment, seg: &Segment, cluster: &ClusterTopology, cp: &CostParams) -> Result<f64> {
    check_cover(a, max_qubit(seg), cluster)?;
    let mut total = 0.0;
    for p in 0..cluster.n_qpus() {
        let members = a.members(p);
        if members.len() > cluster.qpu(p).comp_capacity {
            return Err(Error::Infeasible(format!("QPU {p} is over capacity")));
        }
        total += local_cost_sorted(cluster.qpu(p), &members, &seg.interactions, cp);
    }
    Ok(total)
}

pub fn e_inter(a: &Assignment, seg: &Segment, cluster: &ClusterTopology, cp: &CostParams) -> Result<f64> {
    check_cover(a, max_qubit(seg), cluster)?;
    Ok(seg
        .interactions
        .iter()
        .map(|((i, j), f)| f as f64 * cp.remote_op_cost * cluster.inter_cost(a.qpu(i), a.qpu(j)))
        .sum())
}

pub fn e_move(prev: &Assignment, cur: &Assignment, cluster: &ClusterTopology, cp: &CostParams) -> Result<f64> {
    if prev.n_qubits() != cur.n_qubits() {
        return Err(Error::Param("assignments cover different qubit sets".into()));
    }
    check_cover(prev, 0, cluster)?;
    check_cover(cur, 0, cluster)?;
    Ok((0..cur.n_qubits())
        .map(|q| cp.teleport_cost * cluster.inter_cost(prev.qpu(q), cur.qpu(q)))
        .sum())
}

fn epr_pairs(a: &Assignment, seg: &Segment, prev: Option<&Assignment>, cluster: &ClusterTopology) -> u64 {
    let inter = cluster.inter();
    let remote: u64 = seg
        .interactions
        .iter()
        .map(|((i, j), f)| f * u64::from(inter.hops(a.qpu(i), a.qpu(j))))
        .sum();
    let moves: u64 = prev.map_or(0, |prev| {
        (0..a.n_qubits())
            .map(|q| u64::from(inter.hops(prev.qpu(q), a.qpu(q))))
            .sum()
    });
    remote + moves
}

/// Full breakdown of one segment's cost; `prev` is the previous segment's assignment.
pub fn total(
    a: &Assignment,
    seg: &Segment,
    prev: Option<&Assignment>,
    cluster: &ClusterTopology,
    cp: &CostParams,
) -> Result<CostBreakdown> {
    let inter = e_inter(a, seg, cluster, cp)?;
    let local = e_local(a, seg, cluster, cp)?;
    let mv = match prev {
        Some(prev) => e_move(prev, a, cluster, cp)?,
        None => 0.0,
    };
    Ok(CostBreakdown::compose(
        inter,
        local,
        mv,
        epr_pairs(a, seg, prev, cluster),
        cp,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    Relocate { qubit: Qubit, to: QpuId },
    Swap { a: Qubit, b: Qubit },
}

/// A mutable assignment for one segment with its cost terms kept current.
///
/// Local costs are cached per (QPU, member set); the state lives for one
/// segment so the segment is implied by the key.
#[derive(Debug, Clone)]
pub struct SegmentState<'a> {
    cluster: &'a ClusterTopology,
    cp: CostParams,
    seg: &'a Segment,
    prev: Option<&'a Assignment>,
    adj: Vec<Vec<(Qubit, f64)>>,
    assignment: Assignment,
    members: Vec<Vec<Qubit>>,
    local: Vec<f64>,
    e_inter: f64,
    e_move: f64,
    cache: HashMap<(QpuId, Vec<Qubit>), f64>,
}

impl<'a> SegmentState<'a> {
    pub fn new(
        assignment: Assignment,
        seg: &'a Segment,
        prev: Option<&'a Assignment>,
        cluster: &'a ClusterTopology,
        cp: &CostParams,
    ) -> Result<Self> {
        cp.validate()?;
        let n = assignment.n_qubits();
        check_cover(&assignment, max_qubit(seg), cluster)?;
        if !assignment.is_feasible(cluster) {
            return Err(Error::Infeasible("initial assignment violates capacity".into()));
        }
        if let Some(prev) = prev {
            if prev.n_qubits() != n {
                return Err(Error::Param("assignments cover different qubit sets".into()));
            }
        }
        let adj = seg
            .interactions
            .adjacency(n)
            .into_iter()
            .map(|row| row.into_iter().map(|(r, f)| (r, f as f64)).collect())
            .collect();
        let mut state = SegmentState {
            cluster,
            cp: *cp,
            seg,
            prev,
            adj,
            members: (0..cluster.n_qpus()).map(|p| assignment.members(p)).collect(),
            assignment,
            local: vec![0.0; cluster.n_qpus()],
            e_inter: 0.0,
            e_move: 0.0,
            cache: HashMap::new(),
        };
        for p in 0..cluster.n_qpus() {
            let members = state.members[p].clone();
            state.local[p] = state.local_cost(p, members);
        }
        state.e_inter = e_inter(&state.assignment, seg, cluster, cp)?;
        state.e_move = match prev {
            Some(prev) => e_move(prev, &state.assignment, cluster, cp)?,
            None => 0.0,
        };
        Ok(state)
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn cluster(&self) -> &ClusterTopology {
        self.cluster
    }

    pub fn members(&self, p: QpuId) -> &[Qubit] {
        &self.members[p]
    }

    pub fn load(&self, p: QpuId) -> usize {
        self.members[p].len()
    }

    pub fn e_local(&self) -> f64 {
        self.local.iter().sum()
    }

    pub fn energy(&self) -> f64 {
        self.cp.gamma1 * self.e_inter + self.cp.gamma2 * self.e_local() + self.cp.gamma3 * self.e_move
    }

    pub fn breakdown(&self) -> CostBreakdown {
        CostBreakdown::compose(
            self.e_inter,
            self.e_local(),
            self.e_move,
            epr_pairs(&self.assignment, self.seg, self.prev, self.cluster),
            &self.cp,
        )
    }

    fn local_cost(&mut self, p: QpuId, members: Vec<Qubit>) -> f64 {
        if let Some(&c) = self.cache.get(&(p, members.clone())) {
            return c;
        }
        let c = local_cost_sorted(self.cluster.qpu(p), &members, &self.seg.interactions, &self.cp);
        self.cache.insert((p, members), c);
        c
    }

    fn check_move(&self, mv: Move) -> Result<()> {
        let n = self.assignment.n_qubits();
        match mv {
            Move::Relocate { qubit, to } => {
                if qubit >= n || to >= self.cluster.n_qpus() {
                    return Err(Error::InvalidMove(format!("relocate {qubit} → {to}")));
                }
                let from = self.assignment.qpu(qubit);
                if from != to && self.load(to) >= self.cluster.qpu(to).comp_capacity {
                    return Err(Error::InvalidMove(format!("QPU {to} is full")));
                }
            }
            Move::Swap { a, b } => {
                if a >= n || b >= n {
                    return Err(Error::InvalidMove(format!("swap {a} ↔ {b}")));
                }
            }
        }
        Ok(())
    }

    fn inter_d(&self, p: QpuId, r: QpuId) -> f64 {
        self.cluster.inter_cost(p, r)
    }

    fn move_d(&self, q: Qubit, to: QpuId) -> f64 {
        self.prev.map_or(0.0, |prev| self.inter_d(prev.qpu(q), to))
    }

    /// Term changes `(Δinter, Δmove, [(qpu, new member set, new local)])` for `mv`.
    #[allow(clippy::type_complexity)]
    fn changes(&mut self, mv: Move) -> Result<(f64, f64, Vec<(QpuId, Vec<Qubit>, f64)>)> {
        self.check_move(mv)?;
        let (moves, from_to): (Vec<(Qubit, QpuId)>, Option<(QpuId, QpuId)>) = match mv {
            Move::Relocate { qubit, to } => {
                let from = self.assignment.qpu(qubit);
                if from == to {
                    return Ok((0.0, 0.0, Vec::new()));
                }
                (vec![(qubit, to)], Some((from, to)))
            }
            Move::Swap { a, b } => {
                let (pa, pb) = (self.assignment.qpu(a), self.assignment.qpu(b));
                if pa == pb {
                    return Ok((0.0, 0.0, Vec::new()));
                }
                (vec![(a, pb), (b, pa)], Some((pa, pb)))
            }
        };
        let moved = |r: Qubit| moves.iter().find(|&&(q, _)| q == r).map(|&(_, p)| p);

        let mut d_inter = 0.0;
        let mut d_move = 0.0;
        for &(q, to) in &moves {
            let from = self.assignment.qpu(q);
            for &(r, f) in &self.adj[q] {
                let pr_old = self.assignment.qpu(r);
                match moved(r) {
                    // pair with another moved qubit: count once, from the lower index
                    Some(pr_new) => {
                        if q < r {
                            d_inter += f * (self.inter_d(to, pr_new) - self.inter_d(from, pr_old));
                        }
                    }
                    None => d_inter += f * (self.inter_d(to, pr_old) - self.inter_d(from, pr_old)),
                }
            }
            d_move += self.move_d(q, to) - self.move_d(q, from);
        }
        d_inter *= self.cp.remote_op_cost;
        d_move *= self.cp.teleport_cost;

        let (p1, p2) = from_to.expect("non-null move");
        let mut locals = Vec::with_capacity(2);
        for p in [p1, p2] {
            let mut set: Vec<Qubit> = self.members[p]
                .iter()
                .copied()
                .filter(|&q| moved(q).is_none())
                .collect();
            for &(q, dest) in &moves {
                if dest == p {
                    set.push(q);
                }
            }
            set.sort_unstable();
            let c = self.local_cost(p, set.clone());
            locals.push((p, set, c));
        }
        Ok((d_inter, d_move, locals))
    }

    /// ΔE of `mv` without applying it.
    pub fn delta(&mut self, mv: Move) -> Result<f64> {
        let (d_inter, d_move, locals) = self.changes(mv)?;
        let d_local: f64 = locals.iter().map(|(p, _, c)| c - self.local[*p]).sum();
        Ok(self.cp.gamma1 * d_inter + self.cp.gamma2 * d_local + self.cp.gamma3 * d_move)
    }

    pub fn apply(&mut self, mv: Move) -> Result<()> {
        let (d_inter, d_move, locals) = self.changes(mv)?;
        self.e_inter += d_inter;
        self.e_move += d_move;
        match mv {
            Move::Relocate { qubit, to } => self.assignment.set(qubit, to),
            Move::Swap { a, b } => {
                let (pa, pb) = (self.assignment.qpu(a), self.assignment.qpu(b));
                self.assignment.set(a, pb);
                self.assignment.set(b, pa);
            }
        }
        for (p, set, c) in locals {
            self.members[p] = set;
            self.local[p] = c;
        }
        Ok(())
    }

    /// Layouts of every nonempty QPU under the current assignment.
    pub fn layouts(&self) -> Vec<IntraLayout> {
        (0..self.cluster.n_qpus())
            .filter(|&p| !self.members[p].is_empty())
            .map(|p| {
                intra_layout(self.cluster.qpu(p), &self.members[p], &self.seg.interactions)
                    .expect("members fit capacity")
            })
            .collect()
    }
}

/// Standalone ΔE: builds the state for `a` and evaluates `mv` against it.
pub fn delta_total(
    a: &Assignment,
    seg: &Segment,
    prev: Option<&Assignment>,
    cluster: &ClusterTopology,
    cp: &CostParams,
    mv: Move,
) -> Result<f64> {
    SegmentState::new(a.clone(), seg, prev, cluster, cp)?.delta(mv)
}
