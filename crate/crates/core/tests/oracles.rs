// Independent re-derivations checked against the library on concrete inputs.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use dqcmap::anneal::{brute_force_optimum, evaluate_plan};
use dqcmap::bench::{gen_adder, gen_qft};
use dqcmap::circuit::{layerize, InteractionCount, LayeredCircuit};
use dqcmap::cost::{intra_layout, total, CostParams};
use dqcmap::hardware::{gen_topology, ClusterConfig, ClusterTopology, LinkConfig, TopologyKind};
use dqcmap::placement::{cluster_graph, edge_cut, repair_capacity, Assignment, InteractionGraph};
use dqcmap::segmentation::{segment, top_k_set, SegmentationParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{chain, close, dijkstra_costs, oracle_total, random_cluster, random_feasible, ring_qpu};

#[test]
fn inter_distances_match_dijkstra() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n_qpus = rng.gen_range(2..=7);
        let sizes: Vec<usize> = (0..n_qpus).map(|_| rng.gen_range(2..=5)).collect();
        let mut cluster = random_cluster(&mut rng, &sizes);
        // extra links create alternative routes
        let mut config = cluster.to_config();
        for _ in 0..rng.gen_range(0..4) {
            let a = rng.gen_range(0..n_qpus);
            let b = rng.gen_range(0..n_qpus);
            if a != b && !cluster.has_link(a, b) && !config.links.iter().any(|l| (l.a, l.b) == (b, a)) {
                config.links.push(LinkConfig {
                    a,
                    b,
                    cost_factor: rng.gen_range(1..=8) as f64 * 0.5,
                });
            }
        }
        cluster = ClusterTopology::from_config(&config).unwrap();
        let want = dijkstra_costs(&cluster);
        for a in 0..n_qpus {
            for b in 0..n_qpus {
                assert!(close(cluster.inter_cost(a, b), want[a][b], 1e-12));
                let path = cluster.inter().path(a, b);
                assert_eq!(path.first(), Some(&a));
                assert_eq!(path.last(), Some(&b));
                assert_eq!(path.len() as u32 - 1, cluster.inter().hops(a, b));
                let walked: f64 = path
                    .windows(2)
                    .map(|w| {
                        cluster
                            .links()
                            .iter()
                            .find(|l| (l.a, l.b) == (w[0], w[1]) || (l.b, l.a) == (w[0], w[1]))
                            .expect("path follows links")
                            .cost_factor
                    })
                    .sum();
                assert!(close(walked, want[a][b], 1e-12));
            }
        }
    }
}

#[test]
fn unit_ring_two_hops_either_way() {
    let cluster = ClusterTopology::from_config(&ClusterConfig {
        qpus: (0..4).map(|i| ring_qpu(&format!("r{i}"), 3)).collect(),
        links: [(0, 1), (1, 2), (2, 3), (3, 0)]
            .into_iter()
            .map(|(a, b)| LinkConfig { a, b, cost_factor: 1.0 })
            .collect(),
    })
    .unwrap();
    assert_eq!(dijkstra_costs(&cluster)[1][3], 2.0);
    assert_eq!(cluster.inter_cost(1, 3), 2.0);
}

#[test]
fn chain_layout_on_ring_is_exhaustively_optimal() {
    let cluster = ClusterTopology::from_config(&ClusterConfig {
        qpus: vec![ring_qpu("ring4", 4)],
        links: vec![],
    })
    .unwrap();
    let mut ic = InteractionCount::new();
    ic.add(0, 1, 3);
    ic.add(1, 2, 2);
    ic.add(2, 3, 1);
    let layout = intra_layout(cluster.qpu(0), &[0, 1, 2, 3], &ic).unwrap();
    let weighted = |pos: &dyn Fn(usize) -> usize| -> u64 {
        ic.iter()
            .map(|((a, b), f)| f * u64::from(cluster.intra_distance(0, pos(a), pos(b))))
            .sum()
    };
    let got = weighted(&|q| layout.physical_of(q).unwrap());

    let mut best = u64::MAX;
    let mut perm = [0usize, 1, 2, 3];
    // Heap's algorithm over all 4! placements
    let mut c = [0usize; 4];
    best = best.min(weighted(&|q| perm[q]));
    let mut i = 0;
    while i < 4 {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(weighted(&|q| perm[q]));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    assert_eq!(got, best);
    assert_eq!(best, 6);
}

#[test]
fn qft4_pair_counts_match_gate_scan() {
    let c = gen_qft(4).unwrap();
    let lc = layerize(&c);
    let mut scan: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for g in c.gates() {
        if g.qubits.len() == 2 {
            let (a, b) = (g.qubits[0].min(g.qubits[1]), g.qubits[0].max(g.qubits[1]));
            *scan.entry((a, b)).or_default() += 1;
        }
    }
    let counted: BTreeMap<_, _> = lc.count_interactions(1, lc.depth()).unwrap().iter().collect();
    assert_eq!(counted, scan);
}

/// ρ_q(l) for every layer, from a direct scan of the layer pair lists.
fn densities(lc: &LayeredCircuit) -> Vec<Vec<f64>> {
    let mut d = vec![0u64; lc.n_qubits()];
    let mut out = vec![vec![0.0; lc.n_qubits()]];
    for l in 1..=lc.depth() {
        for &(a, b) in lc.layer_pairs(l) {
            d[a] += 1;
            d[b] += 1;
        }
        out.push(d.iter().map(|&x| x as f64 / l as f64).collect());
    }
    out
}

fn oracle_top_k(rho: &[Vec<f64>], depth: usize, l: usize, w: usize, k: usize) -> Vec<usize> {
    let lo = if l > w { l - w } else { 1 };
    let hi = usize::min(depth, l + w);
    let n = rho[1].len();
    let mut avg: Vec<(usize, f64)> = (0..n)
        .map(|q| (q, (lo..=hi).map(|i| rho[i][q]).sum::<f64>() / (hi - lo + 1) as f64))
        .collect();
    avg.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    let mut top: Vec<usize> = avg[..k].iter().map(|&(q, _)| q).collect();
    top.sort();
    top
}

#[test]
fn top_k_matches_sort_oracle_on_qft8() {
    let lc = layerize(&gen_qft(8).unwrap());
    let params = SegmentationParams {
        top_k: 4,
        ..SegmentationParams::defaults_for(&lc)
    };
    let rho = densities(&lc);
    let l = lc.depth() / 2;
    let got: Vec<usize> = top_k_set(&lc, l, &params).unwrap().into_iter().collect();
    assert_eq!(got, oracle_top_k(&rho, lc.depth(), l, params.window, 4));
}

fn oracle_boundaries(lc: &LayeredCircuit, w: usize, k: usize, theta: f64, min_len: usize) -> Vec<usize> {
    let rho = densities(lc);
    let sets: Vec<HashSet<usize>> = (1..=lc.depth())
        .map(|l| oracle_top_k(&rho, lc.depth(), l, w, k).into_iter().collect())
        .collect();
    let mut starts = vec![1];
    for l in 2..=lc.depth() {
        let (cur, prev) = (&sets[l - 1], &sets[l - 2]);
        let inter = cur.intersection(prev).count() as f64;
        let union = cur.union(prev).count() as f64;
        let j = if union == 0.0 { 1.0 } else { inter / union };
        if j < theta && l - starts.last().unwrap() >= min_len {
            starts.push(l);
        }
    }
    starts
}

#[test]
fn adder_segmentation_matches_reimplementation() {
    let lc = layerize(&gen_adder(16).unwrap());
    let defaults = SegmentationParams::defaults_for(&lc);
    let variants = [
        defaults,
        SegmentationParams { threshold: 0.8, ..defaults },
        SegmentationParams {
            window: 1,
            min_segment_len: 1,
            top_k: 3,
            threshold: 0.6,
        },
    ];
    for p in variants {
        let got: Vec<usize> = segment(&lc, &p).unwrap().iter().map(|s| s.from_layer).collect();
        let want = oracle_boundaries(&lc, p.window, p.top_k, p.threshold, p.min_segment_len);
        assert_eq!(got, want, "{p:?}");
    }
    // counts over the segments add up to the whole circuit
    let segs = segment(&lc, &defaults).unwrap();
    let mut merged = InteractionCount::new();
    for s in &segs {
        merged.merge(&s.interactions);
    }
    assert_eq!(merged, lc.count_interactions(1, lc.depth()).unwrap());
}

#[test]
fn edge_cut_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let mut g = InteractionGraph::new(10);
        let mut list = Vec::new();
        for _ in 0..rng.gen_range(0..30) {
            let (a, b) = (rng.gen_range(0..10), rng.gen_range(0..10));
            if a != b {
                let w = rng.gen_range(0.5..3.0);
                g.add_weight(a, b, w);
                list.push((a, b, w));
            }
        }
        let a = Assignment::new((0..10).map(|_| rng.gen_range(0..3)).collect());
        let scan: f64 = list.iter().filter(|(i, j, _)| a.qpu(*i) != a.qpu(*j)).map(|t| t.2).sum();
        assert!(close(edge_cut(&g, &a).unwrap(), scan, 1e-12));
    }
}

#[test]
fn two_cliques_match_best_balanced_partition() {
    let mut g = InteractionGraph::new(4);
    g.add_weight(0, 2, 10.0);
    g.add_weight(1, 3, 10.0);
    g.add_weight(0, 1, 1.0);
    g.add_weight(2, 3, 0.5);
    let cluster = chain(&[2, 2], &[1.0]);
    let a = cluster_graph(&g, &cluster, 2).unwrap();
    let best = (0u32..16)
        .filter(|m| m.count_ones() == 2)
        .map(|m| edge_cut(&g, &Assignment::new((0..4).map(|q| ((m >> q) & 1) as usize).collect())).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(a.qpu(0), a.qpu(2));
    assert_eq!(a.qpu(1), a.qpu(3));
    assert_ne!(a.qpu(0), a.qpu(1));
    assert_eq!(edge_cut(&g, &a).unwrap(), best);
    assert_eq!(best, 1.5);
}

#[test]
fn clustering_is_close_to_balanced_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut good = 0;
    let trials = 50;
    for _ in 0..trials {
        let n: usize = rng.gen_range(4..=12);
        let half = n.div_ceil(2);
        let cluster = chain(&[half, half], &[1.0]);
        let mut g = InteractionGraph::new(n);
        let p = rng.gen_range(0.2..0.6);
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    g.add_weight(a, b, rng.gen_range(1..=5) as f64);
                }
            }
        }
        let got = edge_cut(&g, &cluster_graph(&g, &cluster, 2).unwrap()).unwrap();
        let best = (0u32..1 << n)
            .filter(|m| {
                let ones = m.count_ones() as usize;
                ones <= half && n - ones <= half
            })
            .map(|m| edge_cut(&g, &Assignment::new((0..n).map(|q| ((m >> q) & 1) as usize).collect())).unwrap())
            .fold(f64::INFINITY, f64::min);
        if got <= 1.25 * best + 1e-9 {
            good += 1;
        }
    }
    assert!(good * 10 >= trials * 9, "{good}/{trials} within 25% of the optimum");
}

/// Step-by-step restatement of the repair rule.
fn greedy_repair(a: &Assignment, g: &InteractionGraph, cluster: &ClusterTopology) -> Assignment {
    let n_qpus = cluster.n_qpus();
    let mut cur = a.as_slice().to_vec();
    let w = |x: usize, y: usize| g.weight(x, y);
    for p in 0..n_qpus {
        loop {
            let members: Vec<usize> = (0..cur.len()).filter(|&q| cur[q] == p).collect();
            if members.len() <= cluster.qpu(p).comp_capacity {
                break;
            }
            let internal = |q: usize| members.iter().filter(|&&r| r != q).map(|&r| w(q, r)).sum::<f64>();
            let mut q = members[0];
            for &m in &members[1..] {
                if internal(m) < internal(q) {
                    q = m;
                }
            }
            let load = |d: usize| cur.iter().filter(|&&x| x == d).count();
            let hops = dijkstra_hops(cluster, p);
            let max_hop = *hops.iter().max().unwrap();
            let mut dest = None;
            for level in 1..=max_hop {
                let mut best: Option<(f64, usize)> = None;
                for d in 0..n_qpus {
                    if hops[d] == level && load(d) < cluster.qpu(d).comp_capacity {
                        let to_d: f64 = (0..cur.len()).filter(|&r| cur[r] == d).map(|r| w(q, r)).sum();
                        let delta = internal(q) - to_d;
                        if best.is_none_or(|(bd, _)| delta < bd) {
                            best = Some((delta, d));
                        }
                    }
                }
                if let Some((_, d)) = best {
                    dest = Some(d);
                    break;
                }
            }
            cur[q] = dest.expect("slack exists");
        }
    }
    Assignment::new(cur)
}

fn dijkstra_hops(cluster: &ClusterTopology, from: usize) -> Vec<usize> {
    let mut hops = vec![usize::MAX; cluster.n_qpus()];
    hops[from] = 0;
    for level in 0..cluster.n_qpus() {
        for u in 0..cluster.n_qpus() {
            if hops[u] == level {
                for l in cluster.links() {
                    for (x, y) in [(l.a, l.b), (l.b, l.a)] {
                        if x == u && hops[y] == usize::MAX {
                            hops[y] = level + 1;
                        }
                    }
                }
            }
        }
    }
    hops
}

#[test]
fn repair_matches_greedy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cluster = chain(&[3, 3, 3], &[1.0, 1.0]);
    for _ in 0..100 {
        let n = rng.gen_range(5..=9);
        let mut g = InteractionGraph::new(n);
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.4) {
                    g.add_weight(a, b, rng.gen_range(1..=7) as f64 * 0.5);
                }
            }
        }
        // the first QPU over by two, the rest random
        let mut qpus: Vec<usize> = vec![0; 5];
        qpus.extend((5..n).map(|_| rng.gen_range(1..3)));
        let a = Assignment::new(qpus);
        let got = repair_capacity(&a, &g, &cluster).unwrap();
        let want = greedy_repair(&a, &g, &cluster);
        assert!(got.is_feasible(&cluster));
        assert_eq!(got, want);
        let increase = edge_cut(&g, &got).unwrap() - edge_cut(&g, &a).unwrap();
        let want_increase = edge_cut(&g, &want).unwrap() - edge_cut(&g, &a).unwrap();
        assert!(close(increase, want_increase, 1e-12));
    }
}

#[test]
fn full_recompute_matches_independent_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let cluster = random_cluster(&mut rng, &[4, 4]);
        let seg = common::random_segment(&mut rng, 1, 6, 12);
        let a = random_feasible(&mut rng, 6, &cluster);
        let prev = random_feasible(&mut rng, 6, &cluster);
        let cp = CostParams {
            gamma1: rng.gen_range(0.0..2.0),
            gamma2: rng.gen_range(0.0..2.0),
            gamma3: rng.gen_range(0.0..2.0),
            ..CostParams::with_ratio(rng.gen_range(1.0..5.0))
        };
        let got = total(&a, &seg, Some(&prev), &cluster, &cp).unwrap();
        let (inter, local, mv, tot) = oracle_total(&a, &seg, Some(&prev), &cluster, &cp);
        assert!(close(got.e_inter, inter, 1e-9));
        assert!(close(got.e_local, local, 1e-9));
        assert!(close(got.e_move, mv, 1e-9));
        assert!(close(got.e_total, tot, 1e-9));
    }
}

/// Plain enumeration of every per-segment assignment sequence, iterating
/// qubits from the highest index down.
fn enumerate_optimum(n: usize, segs: &[dqcmap::segmentation::Segment], cluster: &ClusterTopology, cp: &CostParams) -> f64 {
    let n_qpus = cluster.n_qpus();
    let feasible: Vec<Assignment> = (0..n_qpus.pow(n as u32))
        .map(|mut code| {
            let mut v = vec![0; n];
            for q in (0..n).rev() {
                v[q] = code % n_qpus;
                code /= n_qpus;
            }
            Assignment::new(v)
        })
        .filter(|a| a.is_feasible(cluster))
        .collect();
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; segs.len()];
    loop {
        let chosen: Vec<Assignment> = idx.iter().map(|&i| feasible[i].clone()).collect();
        let plan = evaluate_plan(&chosen[0], segs, &chosen, cluster, cp).unwrap();
        best = best.min(plan.total_cost());
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < feasible.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn dp_optimum_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cp = CostParams::default();
    // one segment, 4 qubits, 2 QPUs
    for _ in 0..20 {
        let cluster = random_cluster(&mut rng, &[3, 3]);
        let segs = vec![common::random_segment(&mut rng, 1, 4, 6)];
        let dp = brute_force_optimum(4, &segs, &cluster, &cp).unwrap();
        assert!(close(dp.cost, enumerate_optimum(4, &segs, &cluster, &cp), 1e-9));
        let replay = evaluate_plan(&dp.assignments[0], &segs, &dp.assignments, &cluster, &cp).unwrap();
        assert!(close(replay.total_cost(), dp.cost, 1e-9));
    }
    // several segments, where movement matters
    for _ in 0..10 {
        let cluster = random_cluster(&mut rng, &[3, 2]);
        let segs: Vec<_> = (1..=3).map(|s| common::random_segment(&mut rng, s, 4, 5)).collect();
        let dp = brute_force_optimum(4, &segs, &cluster, &cp).unwrap();
        assert!(close(dp.cost, enumerate_optimum(4, &segs, &cluster, &cp), 1e-9));
    }
}

#[test]
fn generated_topologies_are_connected_and_sized() {
    for kind in TopologyKind::ALL {
        let cluster = gen_topology(kind, &[5, 7, 4, 6], 1).unwrap();
        assert_eq!(cluster.capacities(), vec![5, 7, 4, 6]);
        let costs = dijkstra_costs(&cluster);
        assert!(costs.iter().flatten().all(|c| c.is_finite()));
        let names: BTreeSet<_> = cluster.qpus().iter().map(|q| q.name.clone()).collect();
        assert_eq!(names.len(), 4);
    }
}
