//! Heterogeneous QPU cluster model: per-QPU coupling maps, the weighted
//! inter-QPU link graph, precomputed distance tables and EPR accounting.
//!
//! QPU ids and physical qubit indices are 0-based throughout.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type QpuId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpuConfig {
    pub name: String,
    pub comp_capacity: usize,
    pub coupling: Vec<[usize; 2]>,
    pub comm_qubits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: QpuId,
    pub b: QpuId,
    pub cost_factor: f64,
}

/// On-disk cluster description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub qpus: Vec<QpuConfig>,
    pub links: Vec<LinkConfig>,
}

#[derive(Debug, Clone)]
pub struct Qpu {
    pub id: QpuId,
    pub name: String,
    pub comp_capacity: usize,
    pub coupling: Vec<(usize, usize)>,
    pub comm_qubits: usize,
    /// Hop distance between physical qubits on the coupling graph.
    pub distance: Vec<Vec<u32>>,
    pub degree: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: QpuId,
    pub b: QpuId,
    pub cost_factor: f64,
}

/// All-pairs weighted shortest paths on the QPU link graph.
#[derive(Debug, Clone)]
pub struct InterDistances {
    cost: Vec<Vec<f64>>,
    hops: Vec<Vec<u32>>,
    next: Vec<Vec<Option<QpuId>>>,
}

impl InterDistances {
    pub fn cost(&self, a: QpuId, b: QpuId) -> f64 {
        self.cost[a][b]
    }

    /// Number of links on the chosen shortest path.
    pub fn hops(&self, a: QpuId, b: QpuId) -> u32 {
        self.hops[a][b]
    }

    /// QPU sequence from `a` to `b`, inclusive at both ends.
    pub fn path(&self, a: QpuId, b: QpuId) -> Vec<QpuId> {
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            cur = self.next[cur][b].expect("link graph is connected");
            path.push(cur);
        }
        path
    }
}

#[derive(Debug, Clone)]
pub struct ClusterTopology {
    qpus: Vec<Qpu>,
    links: Vec<Link>,
    adjacency: Vec<Vec<QpuId>>,
    inter: InterDistances,
}

fn bfs_distances(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|src| {
            let mut dist = vec![u32::MAX; n];
            dist[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Floyd-Warshall with hop count as a tie-breaker so paths are deterministic.
fn inter_distances(n: usize, links: &[Link]) -> InterDistances {
    let mut cost = vec![vec![f64::INFINITY; n]; n];
    let mut hops = vec![vec![u32::MAX; n]; n];
    let mut next = vec![vec![None; n]; n];
    for i in 0..n {
        cost[i][i] = 0.0;
        hops[i][i] = 0;
        next[i][i] = Some(i);
    }
    for l in links {
        let (a, b) = (l.a, l.b);
        if l.cost_factor < cost[a][b] {
            cost[a][b] = l.cost_factor;
            cost[b][a] = l.cost_factor;
            hops[a][b] = 1;
            hops[b][a] = 1;
            next[a][b] = Some(b);
            next[b][a] = Some(a);
        }
    }
    for k in 0..n {
        for i in 0..n {
            if cost[i][k].is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = cost[i][k] + cost[k][j];
                let via_hops = hops[i][k].saturating_add(hops[k][j]);
                let better = via < cost[i][j] - 1e-12
                    || ((via - cost[i][j]).abs() <= 1e-12 && via_hops < hops[i][j]);
                if better {
                    cost[i][j] = via;
                    hops[i][j] = via_hops;
                    next[i][j] = next[i][k];
                }
            }
        }
    }
    InterDistances { cost, hops, next }
}

fn is_connected(dist: &[Vec<u32>]) -> bool {
    dist.first().is_none_or(|row| row.iter().all(|&d| d != u32::MAX))
}

impl ClusterTopology {
    pub fn from_config(config: &ClusterConfig) -> Result<Self> {
        if config.qpus.is_empty() {
            return Err(Error::Topology("cluster has no QPUs".into()));
        }
        let mut qpus = Vec::with_capacity(config.qpus.len());
        for (id, q) in config.qpus.iter().enumerate() {
            if q.comp_capacity == 0 {
                return Err(Error::Topology(format!("QPU {id} ({}) has zero capacity", q.name)));
            }
            if q.comm_qubits == 0 {
                return Err(Error::Topology(format!(
                    "QPU {id} ({}) has no communication qubits",
                    q.name
                )));
            }
            let mut coupling = Vec::with_capacity(q.coupling.len());
            for &[a, b] in &q.coupling {
                if a >= q.comp_capacity || b >= q.comp_capacity || a == b {
                    return Err(Error::Topology(format!(
                        "QPU {id} ({}) has invalid coupling edge [{a}, {b}]",
                        q.name
                    )));
                }
                coupling.push((a.min(b), a.max(b)));
            }
            coupling.sort_unstable();
            coupling.dedup();
            let distance = bfs_distances(q.comp_capacity, &coupling);
            if !is_connected(&distance) {
                return Err(Error::Topology(format!(
                    "QPU {id} ({}) has a disconnected coupling map",
                    q.name
                )));
            }
            let mut degree = vec![0; q.comp_capacity];
            for &(a, b) in &coupling {
                degree[a] += 1;
                degree[b] += 1;
            }
            qpus.push(Qpu {
                id,
                name: q.name.clone(),
                comp_capacity: q.comp_capacity,
                coupling,
                comm_qubits: q.comm_qubits,
                distance,
                degree,
            });
        }

        let n = qpus.len();
        let mut links = Vec::with_capacity(config.links.len());
        for l in &config.links {
            if l.a >= n || l.b >= n || l.a == l.b {
                return Err(Error::Topology(format!("invalid link {}-{}", l.a, l.b)));
            }
            if !(l.cost_factor > 0.0 && l.cost_factor.is_finite()) {
                return Err(Error::Topology(format!(
                    "link {}-{} needs a positive cost_factor",
                    l.a, l.b
                )));
            }
            links.push(Link {
                a: l.a.min(l.b),
                b: l.a.max(l.b),
                cost_factor: l.cost_factor,
            });
        }
        let mut adjacency = vec![Vec::new(); n];
        for l in &links {
            adjacency[l.a].push(l.b);
            adjacency[l.b].push(l.a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        let inter = inter_distances(n, &links);
        if inter.cost.iter().flatten().any(|c| c.is_infinite()) {
            return Err(Error::Topology("QPU link graph is disconnected".into()));
        }
        Ok(ClusterTopology {
            qpus,
            links,
            adjacency,
            inter,
        })
    }

    pub fn to_config(&self) -> ClusterConfig {
        ClusterConfig {
            qpus: self
                .qpus
                .iter()
                .map(|q| QpuConfig {
                    name: q.name.clone(),
                    comp_capacity: q.comp_capacity,
                    coupling: q.coupling.iter().map(|&(a, b)| [a, b]).collect(),
                    comm_qubits: q.comm_qubits,
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkConfig {
                    a: l.a,
                    b: l.b,
                    cost_factor: l.cost_factor,
                })
                .collect(),
        }
    }

    pub fn qpus(&self) -> &[Qpu] {
        &self.qpus
    }

    pub fn qpu(&self, id: QpuId) -> &Qpu {
        &self.qpus[id]
    }

    pub fn n_qpus(&self) -> usize {
        self.qpus.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn total_capacity(&self) -> usize {
        self.qpus.iter().map(|q| q.comp_capacity).sum()
    }

    pub fn capacities(&self) -> Vec<usize> {
        self.qpus.iter().map(|q| q.comp_capacity).collect()
    }

    /// QPUs directly linked to `p`, ascending.
    pub fn neighbors(&self, p: QpuId) -> &[QpuId] {
        &self.adjacency[p]
    }

    pub fn has_link(&self, a: QpuId, b: QpuId) -> bool {
        self.adjacency.get(a).is_some_and(|adj| adj.contains(&b))
    }

    pub fn inter(&self) -> &InterDistances {
        &self.inter
    }

    pub fn inter_cost(&self, a: QpuId, b: QpuId) -> f64 {
        self.inter.cost(a, b)
    }

    pub fn intra_distance(&self, p: QpuId, i: usize, j: usize) -> u32 {
        self.qpus[p].distance[i][j]
    }

    pub fn check_capacity(&self, n_qubits: usize) -> Result<()> {
        let total = self.total_capacity();
        if total < n_qubits {
            return Err(Error::Infeasible(format!(
                "{n_qubits} logical qubits exceed the cluster's {total} computational qubits"
            )));
        }
        Ok(())
    }
}

/// Parses and validates a cluster description in the JSON config format.
pub fn load_cluster(json: &str) -> Result<ClusterTopology> {
    let config: ClusterConfig = serde_json::from_str(json)?;
    ClusterTopology::from_config(&config)
}

pub fn cluster_to_json(cluster: &ClusterTopology) -> String {
    serde_json::to_string_pretty(&cluster.to_config()).expect("cluster config serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Line,
    Ring,
    Grid,
    HeavyHexLike,
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(TopologyKind::Line),
            "ring" => Ok(TopologyKind::Ring),
            "grid" => Ok(TopologyKind::Grid),
            "heavy_hex_like" | "heavy-hex-like" => Ok(TopologyKind::HeavyHexLike),
            other => Err(Error::Param(format!("unknown topology kind `{other}`"))),
        }
    }
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [
        TopologyKind::Line,
        TopologyKind::Ring,
        TopologyKind::Grid,
        TopologyKind::HeavyHexLike,
    ];

    /// Undirected edges of this shape on `n` nodes; always connected.
    pub fn edges(self, n: usize) -> Vec<(usize, usize)> {
        let line = || (1..n).map(|i| (i - 1, i)).collect::<Vec<_>>();
        match self {
            TopologyKind::Line => line(),
            TopologyKind::Ring => {
                let mut e = line();
                if n >= 3 {
                    e.push((0, n - 1));
                }
                e
            }
            TopologyKind::Grid => {
                let rows = ((n as f64).sqrt().floor() as usize).max(1);
                let cols = n.div_ceil(rows);
                let mut e = Vec::new();
                for i in 0..n {
                    let (r, c) = (i / cols, i % cols);
                    if c + 1 < cols && i + 1 < n {
                        e.push((i, i + 1));
                    }
                    if (r + 1) * cols + c < n {
                        e.push((i, i + cols));
                    }
                }
                e
            }
            TopologyKind::HeavyHexLike => {
                // A chain with degree-3 bridges every four nodes.
                let mut e = line();
                let mut i = 0;
                while i + 3 < n {
                    e.push((i, i + 3));
                    i += 4;
                }
                e
            }
        }
    }
}

/// Builds a cluster whose QPU link graph has the shape `kind`, one QPU per entry
/// of `sizes`. Each QPU's coupling map family and each link's cost factor are
/// drawn from `seed`.
pub fn gen_topology(kind: TopologyKind, sizes: &[usize], seed: u64) -> Result<ClusterTopology> {
    if sizes.is_empty() {
        return Err(Error::Param("topology needs at least one QPU".into()));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s < 2) {
        return Err(Error::Param(format!("QPU size {s} is below 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qpus = sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let family = *TopologyKind::ALL.choose(&mut rng).expect("nonempty");
            QpuConfig {
                name: format!("qpu{i}_{}{size}", family_tag(family)),
                comp_capacity: size,
                coupling: family.edges(size).into_iter().map(|(a, b)| [a, b]).collect(),
                comm_qubits: 2,
            }
        })
        .collect();
    let links = kind
        .edges(sizes.len())
        .into_iter()
        .map(|(a, b)| LinkConfig {
            a,
            b,
            cost_factor: 1.0 + 0.25 * f64::from(rng.gen_range(0u8..=4)),
        })
        .collect();
    ClusterTopology::from_config(&ClusterConfig { qpus, links })
}

fn family_tag(kind: TopologyKind) -> &'static str {
    match kind {
        TopologyKind::Line => "line",
        TopologyKind::Ring => "ring",
        TopologyKind::Grid => "grid",
        TopologyKind::HeavyHexLike => "hhex",
    }
}

/// Central EPR-pair ledger. Every hop of a remote gate or teleport consumes one pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct QuantumSwitch {
    pub epr_consumed: u64,
    pub per_link_epr: BTreeMap<(QpuId, QpuId), u64>,
}

impl QuantumSwitch {
    pub fn new() -> Self {
        Self::default()
    }

    fn consume_path(&mut self, cluster: &ClusterTopology, path: &[QpuId], times: u64) -> Result<()> {
        if path.is_empty() {
            return Err(Error::Param("empty QPU path".into()));
        }
        for w in path.windows(2) {
            if !cluster.has_link(w[0], w[1]) {
                return Err(Error::UnknownLink(w[0], w[1]));
            }
        }
        for w in path.windows(2) {
            let key = (w[0].min(w[1]), w[0].max(w[1]));
            *self.per_link_epr.entry(key).or_insert(0) += times;
            self.epr_consumed += times;
        }
        Ok(())
    }

    /// A cat-entangler remote gate along `path`.
    pub fn record_remote_op(&mut self, cluster: &ClusterTopology, path: &[QpuId]) -> Result<()> {
        self.consume_path(cluster, path, 1)
    }

    /// `count` remote gates along the same path.
    pub fn record_remote_ops(&mut self, cluster: &ClusterTopology, path: &[QpuId], count: u64) -> Result<()> {
        self.consume_path(cluster, path, count)
    }

    /// A qubit teleported along `path`.
    pub fn record_teleport(&mut self, cluster: &ClusterTopology, path: &[QpuId]) -> Result<()> {
        self.consume_path(cluster, path, 1)
    }
}
