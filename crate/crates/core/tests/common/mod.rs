// Fixtures and independent oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dqcmap::circuit::{Circuit, InteractionCount};
use dqcmap::cost::{intra_layout, CostParams};
use dqcmap::hardware::{ClusterConfig, ClusterTopology, LinkConfig, QpuConfig};
use dqcmap::placement::Assignment;
use dqcmap::segmentation::Segment;
use petgraph::algo::dijkstra;
use petgraph::graph::UnGraph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn line_qpu(name: &str, n: usize) -> QpuConfig {
    QpuConfig {
        name: name.into(),
        comp_capacity: n,
        coupling: (1..n).map(|i| [i - 1, i]).collect(),
        comm_qubits: 1,
    }
}

pub fn ring_qpu(name: &str, n: usize) -> QpuConfig {
    let mut q = line_qpu(name, n);
    if n >= 3 {
        q.coupling.push([0, n - 1]);
    }
    q
}

/// Line QPUs of the given sizes joined in a chain with the given link costs.
pub fn chain(sizes: &[usize], costs: &[f64]) -> ClusterTopology {
    assert_eq!(costs.len() + 1, sizes.len());
    ClusterTopology::from_config(&ClusterConfig {
        qpus: sizes.iter().enumerate().map(|(i, &n)| line_qpu(&format!("p{i}"), n)).collect(),
        links: costs
            .iter()
            .enumerate()
            .map(|(i, &c)| LinkConfig {
                a: i,
                b: i + 1,
                cost_factor: c,
            })
            .collect(),
    })
    .unwrap()
}

pub fn segment(index: usize, pairs: &[((usize, usize), u64)]) -> Segment {
    let mut ic = InteractionCount::new();
    for &((a, b), f) in pairs {
        ic.add(a, b, f);
    }
    Segment {
        index,
        from_layer: index,
        to_layer: index,
        interactions: ic,
    }
}

pub fn random_segment(rng: &mut ChaCha8Rng, index: usize, n: usize, max_pairs: usize) -> Segment {
    let mut ic = InteractionCount::new();
    for _ in 0..rng.gen_range(1..=max_pairs) {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        ic.add(a, b, rng.gen_range(1..=4));
    }
    Segment {
        index,
        from_layer: index,
        to_layer: index,
        interactions: ic,
    }
}

/// Circuit of random single- and two-qubit gates.
pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, n_gates: usize) -> Circuit {
    let mut c = Circuit::new(format!("rand_{n}"), n).unwrap();
    for _ in 0..n_gates {
        if rng.gen_bool(0.3) {
            c.push_gate("h", &[rng.gen_range(0..n)], &[]).unwrap();
        } else {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            c.push_gate("cx", &[a, b], &[]).unwrap();
        }
    }
    c
}

/// Random connected cluster with line or ring QPUs and random link costs.
pub fn random_cluster(rng: &mut ChaCha8Rng, sizes: &[usize]) -> ClusterTopology {
    let qpus = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            if rng.gen_bool(0.5) {
                line_qpu(&format!("p{i}"), n)
            } else {
                ring_qpu(&format!("p{i}"), n)
            }
        })
        .collect();
    let mut links = Vec::new();
    for b in 1..sizes.len() {
        links.push(LinkConfig {
            a: rng.gen_range(0..b),
            b,
            cost_factor: rng.gen_range(1..=3) as f64 * 0.5,
        });
    }
    ClusterTopology::from_config(&ClusterConfig { qpus, links }).unwrap()
}

/// All-pairs link-graph shortest costs by petgraph's Dijkstra.
pub fn dijkstra_costs(cluster: &ClusterTopology) -> Vec<Vec<f64>> {
    let mut g = UnGraph::<(), f64>::new_undirected();
    let nodes: Vec<_> = (0..cluster.n_qpus()).map(|_| g.add_node(())).collect();
    for l in cluster.links() {
        g.add_edge(nodes[l.a], nodes[l.b], l.cost_factor);
    }
    nodes
        .iter()
        .map(|&src| {
            let d = dijkstra(&g, src, None, |e| *e.weight());
            nodes.iter().map(|n| d[n]).collect()
        })
        .collect()
}

/// BFS hop count inside one QPU's coupling map.
fn coupling_hops(cluster: &ClusterTopology, p: usize, from: usize, to: usize) -> u32 {
    let qpu = cluster.qpu(p);
    let mut dist = vec![u32::MAX; qpu.comp_capacity];
    dist[from] = 0;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &(a, b) in &qpu.coupling {
            let v = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist[to]
}

/// Independent evaluator of `(e_inter, e_local, e_move, e_total)`. Path costs
/// come from petgraph and intra distances from a fresh BFS; only the greedy
/// layout itself is taken from the library, since it defines the placement
/// being priced.
pub fn oracle_total(
    a: &Assignment,
    seg: &Segment,
    prev: Option<&Assignment>,
    cluster: &ClusterTopology,
    cp: &CostParams,
) -> (f64, f64, f64, f64) {
    let dist = dijkstra_costs(cluster);
    let mut inter = 0.0;
    let mut by_qpu: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for q in 0..a.n_qubits() {
        by_qpu.entry(a.qpu(q)).or_default().push(q);
    }
    let mut local = 0.0;
    for (&p, members) in &by_qpu {
        let mut own = InteractionCount::new();
        for ((i, j), f) in seg.interactions.iter() {
            if a.qpu(i) == p && a.qpu(j) == p {
                own.add(i, j, f);
            }
        }
        let layout = intra_layout(cluster.qpu(p), members, &own).unwrap();
        for ((i, j), f) in own.iter() {
            let d = coupling_hops(cluster, p, layout.physical_of(i).unwrap(), layout.physical_of(j).unwrap());
            local += f as f64 * (cp.cx_cost + cp.swap_cost * (d as f64 - 1.0).max(0.0));
        }
    }
    for ((i, j), f) in seg.interactions.iter() {
        if a.qpu(i) != a.qpu(j) {
            inter += f as f64 * cp.remote_op_cost * dist[a.qpu(i)][a.qpu(j)];
        }
    }
    let mut mv = 0.0;
    if let Some(prev) = prev {
        for q in 0..a.n_qubits() {
            mv += cp.teleport_cost * dist[prev.qpu(q)][a.qpu(q)];
        }
    }
    let total = cp.gamma1 * inter + cp.gamma2 * local + cp.gamma3 * mv;
    (inter, local, mv, total)
}

/// Uniform feasible random assignment drawn by rejection.
pub fn random_feasible(rng: &mut ChaCha8Rng, n: usize, cluster: &ClusterTopology) -> Assignment {
    loop {
        let a = Assignment::new((0..n).map(|_| rng.gen_range(0..cluster.n_qpus())).collect());
        if a.is_feasible(cluster) {
            return a;
        }
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
