//! Time-aware interaction graph and the initial qubit-to-QPU placement.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Qubit;
use crate::error::{Error, Result};
use crate::hardware::{ClusterTopology, QpuId};
use crate::segmentation::Segment;

/// Logical qubit → QPU map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<QpuId>);

impl Assignment {
    pub fn new(qpu_of: Vec<QpuId>) -> Self {
        Assignment(qpu_of)
    }

    pub fn uniform(n_qubits: usize, p: QpuId) -> Self {
        Assignment(vec![p; n_qubits])
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn qpu(&self, q: Qubit) -> QpuId {
        self.0[q]
    }

    pub fn set(&mut self, q: Qubit, p: QpuId) {
        self.0[q] = p;
    }

    pub fn as_slice(&self) -> &[QpuId] {
        &self.0
    }

    pub fn loads(&self, n_qpus: usize) -> Vec<usize> {
        let mut loads = vec![0; n_qpus];
        for &p in &self.0 {
            loads[p] += 1;
        }
        loads
    }

    pub fn members(&self, p: QpuId) -> Vec<Qubit> {
        (0..self.0.len()).filter(|&q| self.0[q] == p).collect()
    }

    pub fn is_feasible(&self, cluster: &ClusterTopology) -> bool {
        self.0.iter().all(|&p| p < cluster.n_qpus())
            && self
                .loads(cluster.n_qpus())
                .iter()
                .zip(cluster.qpus())
                .all(|(&load, qpu)| load <= qpu.comp_capacity)
    }
}

/// Undirected weighted graph over logical qubits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionGraph {
    n: usize,
    edges: BTreeMap<(Qubit, Qubit), f64>,
}

impl InteractionGraph {
    pub fn new(n: usize) -> Self {
        InteractionGraph {
            n,
            edges: BTreeMap::new(),
        }
    }

    pub fn add_weight(&mut self, a: Qubit, b: Qubit, w: f64) {
        if w > 0.0 {
            *self.edges.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn weight(&self, a: Qubit, b: Qubit) -> f64 {
        self.edges.get(&(a.min(b), a.max(b))).copied().unwrap_or(0.0)
    }

    pub fn edges(&self) -> impl Iterator<Item = ((Qubit, Qubit), f64)> + '_ {
        self.edges.iter().map(|(&k, &v)| (k, v))
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> Vec<Vec<(Qubit, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for ((a, b), w) in self.edges() {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        adj
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementParams {
    /// Decay constant λ of the segment weights `α_s = exp(-λ s)`.
    pub decay: f64,
    /// Number of QPUs to place onto.
    pub partitions: usize,
}

impl PlacementParams {
    /// `λ = 3/S` so the last segment keeps roughly 5% of the first one's weight.
    pub fn defaults_for(n_segments: usize, cluster: &ClusterTopology) -> Self {
        PlacementParams {
            decay: 3.0 / n_segments.max(1) as f64,
            partitions: cluster.n_qpus(),
        }
    }
}

/// Segment weight `α_s = exp(-λ s)` for 1-based `s`.
pub fn segment_weight(decay: f64, s: usize) -> f64 {
    (-decay * s as f64).exp()
}

/// `w_ij = Σ_s α_s · f_ij^(s)` over all segments.
pub fn build_graph(n_qubits: usize, segments: &[Segment], decay: f64) -> InteractionGraph {
    let mut g = InteractionGraph::new(n_qubits);
    for seg in segments {
        let alpha = segment_weight(decay, seg.index);
        for ((a, b), f) in seg.interactions.iter() {
            g.add_weight(a, b, alpha * f as f64);
        }
    }
    g
}

/// Total weight of edges whose endpoints sit on different QPUs.
pub fn edge_cut(g: &InteractionGraph, a: &Assignment) -> Result<f64> {
    if a.n_qubits() < g.n_vertices() {
        return Err(Error::Unassigned(a.n_qubits()));
    }
    Ok(g
        .edges()
        .filter(|&((i, j), _)| a.qpu(i) != a.qpu(j))
        .map(|(_, w)| w)
        .sum())
}

/// Whether groups of the given sizes could each take a distinct QPU, matching largest to largest.
fn sizes_fit(sizes: &mut [usize], caps_desc: &[usize]) -> bool {
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes.iter().zip(caps_desc).all(|(s, c)| s <= c)
}

/// Greedy agglomerative clustering into `partitions` groups, matched to the
/// largest QPUs, repaired for capacity and polished by [`refine_cut`].
///
/// Each step merges the pair of groups joined by the most weight, restricted to
/// merges after which the groups can still be matched size-for-size onto the
/// chosen QPUs. Ties prefer the smaller merged group, then lower group indices.
pub fn cluster_graph(g: &InteractionGraph, cluster: &ClusterTopology, partitions: usize) -> Result<Assignment> {
    let n = g.n_vertices();
    if partitions == 0 || partitions > cluster.n_qpus() {
        return Err(Error::Param(format!(
            "partitions {partitions} outside [1, {}]",
            cluster.n_qpus()
        )));
    }
    let mut chosen: Vec<QpuId> = (0..cluster.n_qpus()).collect();
    chosen.sort_by_key(|&p| (std::cmp::Reverse(cluster.qpu(p).comp_capacity), p));
    chosen.truncate(partitions);
    let caps_desc: Vec<usize> = chosen.iter().map(|&p| cluster.qpu(p).comp_capacity).collect();
    let chosen_cap: usize = caps_desc.iter().sum();
    if chosen_cap < n {
        return Err(Error::Infeasible(format!(
            "{n} qubits exceed the {chosen_cap} qubits of the {partitions} largest QPUs"
        )));
    }

    let mut groups: Vec<Vec<Qubit>> = (0..n).map(|q| vec![q]).collect();
    let mut between: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for ((a, b), w) in g.edges() {
        between[a][b] += w;
        between[b][a] += w;
    }

    while groups.len() > partitions.max(1) {
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        let mut fit_cache: HashMap<(usize, usize), bool> = HashMap::new();
        let mut fits = |i: usize, j: usize| -> bool {
            let key = (sizes[i].min(sizes[j]), sizes[i].max(sizes[j]));
            *fit_cache.entry(key).or_insert_with(|| {
                let mut after: Vec<usize> = sizes
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .map(|(_, &s)| s)
                    .collect();
                after.push(sizes[i] + sizes[j]);
                sizes_fit(&mut after, &caps_desc)
            })
        };

        let mut best: Option<(f64, usize, usize, usize)> = None;
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let w = between[i][j];
                let merged = sizes[i] + sizes[j];
                let better = match best {
                    None => true,
                    Some((bw, bs, _, _)) => w > bw || (w == bw && merged < bs),
                };
                if better && fits(i, j) {
                    best = Some((w, merged, i, j));
                }
            }
        }
        let (i, j) = match best {
            Some((_, _, i, j)) => (i, j),
            None => {
                // nothing fits; merge the two smallest and let repair sort it out
                let mut order: Vec<usize> = (0..groups.len()).collect();
                order.sort_by_key(|&k| (sizes[k], k));
                (order[0].min(order[1]), order[0].max(order[1]))
            }
        };

        let moved = groups.swap_remove(j);
        groups[i].extend(moved);
        // mirror swap_remove on the weight matrix
        let last = between.len() - 1;
        for k in 0..between.len() {
            let wj = between[j][k];
            between[i][k] += wj;
        }
        for k in 0..between.len() {
            between[k][i] = between[i][k];
        }
        between[i][i] = 0.0;
        between.swap(j, last);
        between.pop();
        for row in &mut between {
            row.swap(j, last);
            row.pop();
        }
    }

    for grp in &mut groups {
        grp.sort_unstable();
    }
    groups.sort_by_key(|grp| (std::cmp::Reverse(grp.len()), grp.first().copied()));
    let mut qpu_of = vec![0; n];
    for (grp, &p) in groups.iter().zip(&chosen) {
        for &q in grp {
            qpu_of[q] = p;
        }
    }
    let repaired = repair_capacity(&Assignment::new(qpu_of), g, cluster)?;
    let mut allowed = chosen;
    for p in repaired.as_slice() {
        if !allowed.contains(p) {
            allowed.push(*p);
        }
    }
    Ok(refine_cut(repaired, g, cluster, &allowed))
}

/// Steepest-descent polish of the edge cut: repeatedly applies the single
/// relocation (into a QPU with room) or cross-QPU swap that lowers the cut
/// most, restricted to `allowed` QPUs, until none helps. Keeps feasibility.
pub fn refine_cut(mut a: Assignment, g: &InteractionGraph, cluster: &ClusterTopology, allowed: &[QpuId]) -> Assignment {
    let n = a.n_qubits();
    let adj = g.adjacency();
    let mut loads = a.loads(cluster.n_qpus());
    loop {
        // to[q][i]: weight from q to the qubits on allowed[i]
        let to: Vec<Vec<f64>> = (0..n)
            .map(|q| allowed.iter().map(|&p| weight_to(&adj, &a, q, p)).collect())
            .collect();
        let slot = |p: QpuId| allowed.iter().position(|&x| x == p);
        let mut best: Option<(f64, Option<Qubit>, Qubit, QpuId)> = None;
        let mut consider = |gain: f64, other: Option<Qubit>, q: Qubit, p: QpuId| {
            if gain > 1e-12 && best.is_none_or(|(bg, ..)| gain > bg + 1e-12) {
                best = Some((gain, other, q, p));
            }
        };
        for q in 0..n {
            let Some(from) = slot(a.qpu(q)) else { continue };
            for (i, &p) in allowed.iter().enumerate() {
                if i != from && loads[p] < cluster.qpu(p).comp_capacity {
                    consider(to[q][i] - to[q][from], None, q, p);
                }
            }
        }
        for q in 0..n {
            let Some(fq) = slot(a.qpu(q)) else { continue };
            for r in q + 1..n {
                let Some(fr) = slot(a.qpu(r)) else { continue };
                if fq == fr {
                    continue;
                }
                // the q–r edge stays cut either way
                let w = g.weight(q, r);
                let gain = (to[q][fr] - w - to[q][fq]) + (to[r][fq] - w - to[r][fr]);
                consider(gain, Some(r), q, allowed[fr]);
            }
        }
        match best {
            None => return a,
            Some((_, None, q, p)) => {
                loads[a.qpu(q)] -= 1;
                loads[p] += 1;
                a.set(q, p);
            }
            Some((_, Some(r), q, _)) => {
                let (pq, pr) = (a.qpu(q), a.qpu(r));
                a.set(q, pr);
                a.set(r, pq);
            }
        }
    }
}

/// Weight from `q` to the other qubits currently on QPU `p`.
fn weight_to(adj: &[Vec<(Qubit, f64)>], a: &Assignment, q: Qubit, p: QpuId) -> f64 {
    adj[q]
        .iter()
        .filter(|&&(r, _)| r != q && a.qpu(r) == p)
        .map(|&(_, w)| w)
        .sum()
}

/// Moves qubits off overfull QPUs until every capacity holds.
///
/// From each overfull QPU (in id order) the qubit with the weakest connection
/// to its QPU-mates leaves first. It goes to the linked QPU with spare room that
/// adds the least edge cut; when no linked QPU has room, the search widens
/// hop by hop over the link graph.
pub fn repair_capacity(a: &Assignment, g: &InteractionGraph, cluster: &ClusterTopology) -> Result<Assignment> {
    let n = a.n_qubits();
    cluster.check_capacity(n)?;
    if let Some(q) = (0..n).find(|&q| a.qpu(q) >= cluster.n_qpus()) {
        return Err(Error::Param(format!("qubit {q} assigned to unknown QPU {}", a.qpu(q))));
    }
    let adj = g.adjacency();
    let mut out = a.clone();
    let mut loads = out.loads(cluster.n_qpus());

    for p in 0..cluster.n_qpus() {
        let cap = cluster.qpu(p).comp_capacity;
        while loads[p] > cap {
            let q = out
                .members(p)
                .into_iter()
                .map(|q| (weight_to(&adj, &out, q, p), q))
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
                .map(|(_, q)| q)
                .expect("overfull QPU has members");
            let dest = nearest_with_slack(cluster, &loads, p, |d| {
                weight_to(&adj, &out, q, p) - weight_to(&adj, &out, q, d)
            })
            .ok_or_else(|| Error::Infeasible("no QPU with spare capacity".into()))?;
            out.set(q, dest);
            loads[p] -= 1;
            loads[dest] += 1;
        }
    }
    Ok(out)
}

/// BFS over the link graph from `from`; among QPUs at the first hop level
/// holding spare capacity, the one with the lowest `cost` (ties: lowest id).
fn nearest_with_slack(
    cluster: &ClusterTopology,
    loads: &[usize],
    from: QpuId,
    cost: impl Fn(QpuId) -> f64,
) -> Option<QpuId> {
    let mut seen = vec![false; cluster.n_qpus()];
    seen[from] = true;
    let mut frontier = vec![from];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in cluster.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        let best = next
            .iter()
            .copied()
            .filter(|&d| loads[d] < cluster.qpu(d).comp_capacity)
            .map(|d| (cost(d), d))
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        if let Some((_, d)) = best {
            return Some(d);
        }
        frontier = next;
    }
    None
}

/// A uniformly shuffled filling of the cluster's physical slots: every
/// computational qubit is equally likely to host each logical qubit.
pub fn random_placement(n_qubits: usize, cluster: &ClusterTopology, seed: u64) -> Result<Assignment> {
    cluster.check_capacity(n_qubits)?;
    let mut slots: Vec<QpuId> = cluster
        .qpus()
        .iter()
        .flat_map(|q| std::iter::repeat_n(q.id, q.comp_capacity))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    slots.shuffle(&mut rng);
    slots.truncate(n_qubits);
    Ok(Assignment::new(slots))
}
