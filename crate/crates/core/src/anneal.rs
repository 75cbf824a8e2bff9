//! Per-segment simulated annealing and the end-to-end compile pipeline.
//!
//! Segments are annealed in order. Segment 1 starts from the clustered
//! placement; every later segment starts from its predecessor's result and
//! pays for qubits that move away from it.
//!
//! Randomness comes from `ChaCha8Rng` (rand_chacha), whose output stream for a
//! given seed is fixed across platforms and releases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{layerize, Circuit, LayeredCircuit};
use crate::cost::{total, CostBreakdown, CostParams, IntraLayout, Move, SegmentState};
use crate::error::{Error, Result};
use crate::hardware::{ClusterTopology, QpuId, QuantumSwitch};
use crate::placement::{build_graph, cluster_graph, random_placement, Assignment, PlacementParams};
use crate::segmentation::{random_segment, segment, Segment, SegmentationParams};
use crate::seed::derive_seed;

/// `T_k = T0 / (1 + α·k)`.
pub fn cooling(t0: f64, cooling_rate: f64, k: u64) -> f64 {
    t0 / (1.0 + cooling_rate * k as f64)
}

/// Metropolis rule: 1 for downhill or flat moves, `exp(-ΔE/T)` otherwise.
pub fn accept_probability(delta: f64, temperature: f64) -> Result<f64> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::Param(format!("temperature must be positive, got {temperature}")));
    }
    if delta <= 0.0 {
        Ok(1.0)
    } else {
        Ok((-delta / temperature).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    /// Initial temperature; `None` calibrates it from sampled moves.
    pub t0: Option<f64>,
    pub cooling_rate: f64,
    pub iters_per_segment: u64,
    pub relocate_weight: f64,
    pub swap_weight: f64,
    pub seed: u64,
}

/// Moves sampled for temperature calibration.
pub const CALIBRATION_SAMPLES: usize = 100;

impl AnnealParams {
    /// `500·n` iterations, `α = 10/iters`, an even relocate/swap mix and auto `T0`.
    pub fn defaults_for(n_qubits: usize, seed: u64) -> Self {
        let iters = 500 * n_qubits.max(1) as u64;
        AnnealParams {
            t0: None,
            cooling_rate: 10.0 / iters as f64,
            iters_per_segment: iters,
            relocate_weight: 0.5,
            swap_weight: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t0) = self.t0 {
            if !(t0 > 0.0 && t0.is_finite()) {
                return Err(Error::Param(format!("t0 must be positive, got {t0}")));
            }
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate.is_finite()) {
            return Err(Error::Param("cooling rate must be positive".into()));
        }
        if self.iters_per_segment == 0 {
            return Err(Error::Param("iterations per segment must be at least 1".into()));
        }
        if self.relocate_weight < 0.0 || self.swap_weight < 0.0 || self.relocate_weight + self.swap_weight <= 0.0 {
            return Err(Error::Param("move weights must be nonnegative and not both zero".into()));
        }
        Ok(())
    }
}

/// Draws a capacity-preserving move, or `None` when no move exists.
///
/// With probability `relocate_weight / (relocate_weight + swap_weight)` a
/// qubit is relocated to a uniformly chosen QPU with spare room; otherwise two
/// qubits on different QPUs trade places. Each kind falls back to the other
/// when it has no candidates.
pub fn propose(state: &SegmentState<'_>, rng: &mut impl Rng, ap: &AnnealParams) -> Option<Move> {
    let cluster = state.cluster();
    let n_qpus = cluster.n_qpus();
    let n = state.assignment().n_qubits();
    if n_qpus < 2 || n == 0 {
        return None;
    }
    let slack: Vec<QpuId> = (0..n_qpus)
        .filter(|&p| state.load(p) < cluster.qpu(p).comp_capacity)
        .collect();
    let occupied = (0..n_qpus).filter(|&p| state.load(p) > 0).count();
    let can_swap = occupied >= 2;
    let can_relocate = !slack.is_empty();

    let want_relocate = match (can_relocate, can_swap) {
        (false, false) => return None,
        (true, false) => true,
        (false, true) => false,
        (true, true) => {
            let p_rel = ap.relocate_weight / (ap.relocate_weight + ap.swap_weight);
            rng.gen::<f64>() < p_rel
        }
    };

    if want_relocate {
        let to = slack[rng.gen_range(0..slack.len())];
        let outside = n - state.load(to);
        if outside > 0 {
            let mut pick = rng.gen_range(0..outside);
            for q in 0..n {
                if state.assignment().qpu(q) != to {
                    if pick == 0 {
                        return Some(Move::Relocate { qubit: q, to });
                    }
                    pick -= 1;
                }
            }
        }
        if !can_swap {
            return None;
        }
    }

    let a = rng.gen_range(0..n);
    let pa = state.assignment().qpu(a);
    let others = n - state.load(pa);
    if others == 0 {
        return None;
    }
    let mut pick = rng.gen_range(0..others);
    for b in 0..n {
        if state.assignment().qpu(b) != pa {
            if pick == 0 {
                return Some(Move::Swap { a, b });
            }
            pick -= 1;
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub iter: u64,
    pub temperature: f64,
    pub delta: f64,
    /// Uniform draw compared against `exp(-ΔE/T)`; only taken for uphill moves.
    pub draw: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub assignment: Assignment,
    pub cost: CostBreakdown,
    pub layouts: Vec<IntraLayout>,
    pub initial_cost: f64,
    pub t0: f64,
    pub accepted: u64,
    pub trace: Vec<TraceStep>,
}

/// `T0 = mean |ΔE|` over sampled moves from the initial state; 1 if they are all flat.
fn calibrate_t0(state: &mut SegmentState<'_>, rng: &mut ChaCha8Rng, ap: &AnnealParams) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for _ in 0..CALIBRATION_SAMPLES {
        let Some(mv) = propose(state, rng, ap) else { break };
        sum += state.delta(mv)?.abs();
        count += 1;
    }
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(if mean > 0.0 { mean } else { 1.0 })
}

/// Anneals one segment from `init`, returning the best assignment seen.
pub fn anneal_segment(
    init: &Assignment,
    seg: &Segment,
    prev: Option<&Assignment>,
    cluster: &ClusterTopology,
    cp: &CostParams,
    ap: &AnnealParams,
) -> Result<AnnealOutcome> {
    anneal_segment_inner(init, seg, prev, cluster, cp, ap, false)
}

/// As [`anneal_segment`], also recording every proposal.
pub fn anneal_segment_traced(
    init: &Assignment,
    seg: &Segment,
    prev: Option<&Assignment>,
    cluster: &ClusterTopology,
    cp: &CostParams,
    ap: &AnnealParams,
) -> Result<AnnealOutcome> {
    anneal_segment_inner(init, seg, prev, cluster, cp, ap, true)
}

fn anneal_segment_inner(
    init: &Assignment,
    seg: &Segment,
    prev: Option<&Assignment>,
    cluster: &ClusterTopology,
    cp: &CostParams,
    ap: &AnnealParams,
    record: bool,
) -> Result<AnnealOutcome> {
    ap.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ap.seed);
    let mut state = SegmentState::new(init.clone(), seg, prev, cluster, cp)?;
    let initial_cost = state.energy();
    let t0 = match ap.t0 {
        Some(t0) => t0,
        None => calibrate_t0(&mut state, &mut rng, ap)?,
    };

    let mut best = state.assignment().clone();
    let mut best_energy = initial_cost;
    let mut accepted = 0;
    let mut trace = Vec::new();

    for k in 0..ap.iters_per_segment {
        let temperature = cooling(t0, ap.cooling_rate, k);
        let Some(mv) = propose(&state, &mut rng, ap) else { break };
        let delta = state.delta(mv)?;
        let (take, draw) = if delta <= 0.0 {
            (true, None)
        } else {
            let u: f64 = rng.gen();
            (u < accept_probability(delta, temperature)?, Some(u))
        };
        if record {
            trace.push(TraceStep {
                iter: k,
                temperature,
                delta,
                draw,
                accepted: take,
            });
        }
        if take {
            state.apply(mv)?;
            accepted += 1;
            let e = state.energy();
            if e < best_energy - 1e-12 * best_energy.abs().max(1.0) {
                best_energy = e;
                best = state.assignment().clone();
            }
        }
    }

    let final_state = SegmentState::new(best.clone(), seg, prev, cluster, cp)?;
    Ok(AnnealOutcome {
        cost: final_state.breakdown(),
        layouts: final_state.layouts(),
        assignment: best,
        initial_cost,
        t0,
        accepted,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SegmentationMode {
    /// Pattern-driven boundaries; `None` uses circuit-scaled defaults.
    Pattern(Option<SegmentationParams>),
    /// Uniformly random boundaries.
    Random { n_segments: usize, seed: u64 },
    /// Caller-supplied segments.
    Fixed(Vec<Segment>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialPlacement {
    /// Time-aware clustering; `None` fields take defaults (`λ = 3/S`, all QPUs).
    Clustered {
        decay: Option<f64>,
        partitions: Option<usize>,
    },
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub segmentation: SegmentationMode,
    pub initial: InitialPlacement,
    pub cost: CostParams,
    /// `None` keeps the initial placement for every segment.
    pub anneal: Option<AnnealOverrides>,
}

/// Annealing settings; unset fields take their per-circuit defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnealOverrides {
    pub t0: Option<f64>,
    pub cooling_rate: Option<f64>,
    pub iters_per_segment: Option<u64>,
    pub relocate_weight: Option<f64>,
    pub seed: u64,
}

impl AnnealOverrides {
    pub fn resolve(&self, n_qubits: usize) -> AnnealParams {
        let mut ap = AnnealParams::defaults_for(n_qubits, self.seed);
        if let Some(iters) = self.iters_per_segment {
            ap.iters_per_segment = iters;
            ap.cooling_rate = 10.0 / iters.max(1) as f64;
        }
        if let Some(a) = self.cooling_rate {
            ap.cooling_rate = a;
        }
        ap.t0 = self.t0;
        if let Some(w) = self.relocate_weight {
            ap.relocate_weight = w;
            ap.swap_weight = 1.0 - w;
        }
        ap
    }
}

impl CompileOptions {
    /// Pattern segmentation, clustering, annealing with defaults.
    pub fn full(cost: CostParams, seed: u64) -> Self {
        CompileOptions {
            segmentation: SegmentationMode::Pattern(None),
            initial: InitialPlacement::Clustered {
                decay: None,
                partitions: None,
            },
            cost,
            anneal: Some(AnnealOverrides {
                seed,
                ..AnnealOverrides::default()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentPlan {
    pub segment: Segment,
    pub assignment: Assignment,
    pub layouts: Vec<IntraLayout>,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub initial: Assignment,
    pub segments: Vec<SegmentPlan>,
    pub totals: CostBreakdown,
}

impl Plan {
    pub fn total_cost(&self) -> f64 {
        self.totals.e_total
    }

    pub fn epr_total(&self) -> u64 {
        self.totals.epr_pairs
    }

    pub fn assignments(&self) -> impl Iterator<Item = &Assignment> {
        self.segments.iter().map(|s| &s.assignment)
    }
}

/// Prices a fixed per-segment assignment sequence.
pub fn evaluate_plan(
    initial: &Assignment,
    segments: &[Segment],
    assignments: &[Assignment],
    cluster: &ClusterTopology,
    cp: &CostParams,
) -> Result<Plan> {
    if segments.len() != assignments.len() {
        return Err(Error::Param("one assignment per segment required".into()));
    }
    let mut totals = CostBreakdown::default();
    let mut out = Vec::with_capacity(segments.len());
    let mut prev: Option<&Assignment> = None;
    for (seg, a) in segments.iter().zip(assignments) {
        if !a.is_feasible(cluster) {
            return Err(Error::Infeasible(format!("segment {} assignment over capacity", seg.index)));
        }
        let state = SegmentState::new(a.clone(), seg, prev, cluster, cp)?;
        let cost = total(a, seg, prev, cluster, cp)?;
        totals.add(&cost);
        out.push(SegmentPlan {
            segment: seg.clone(),
            assignment: a.clone(),
            layouts: state.layouts(),
            cost,
        });
        prev = Some(a);
    }
    Ok(Plan {
        initial: initial.clone(),
        segments: out,
        totals,
    })
}

pub fn resolve_segments(lc: &LayeredCircuit, mode: &SegmentationMode) -> Result<Vec<Segment>> {
    match mode {
        SegmentationMode::Pattern(params) => {
            let params = params.unwrap_or_else(|| SegmentationParams::defaults_for(lc));
            segment(lc, &params)
        }
        SegmentationMode::Random { n_segments, seed } => {
            if lc.depth() == 0 {
                return Ok(Vec::new());
            }
            random_segment(lc, (*n_segments).clamp(1, lc.depth()), *seed)
        }
        SegmentationMode::Fixed(segs) => Ok(segs.clone()),
    }
}

pub fn initial_assignment(
    n_qubits: usize,
    segments: &[Segment],
    cluster: &ClusterTopology,
    initial: &InitialPlacement,
) -> Result<Assignment> {
    match *initial {
        InitialPlacement::Clustered { decay, partitions } => {
            let defaults = PlacementParams::defaults_for(segments.len(), cluster);
            let params = PlacementParams {
                decay: decay.unwrap_or(defaults.decay),
                partitions: partitions.unwrap_or(defaults.partitions),
            };
            if !(params.decay >= 0.0) {
                return Err(Error::Param(format!("decay must be nonnegative, got {}", params.decay)));
            }
            let g = build_graph(n_qubits, segments, params.decay);
            cluster_graph(&g, cluster, params.partitions)
        }
        InitialPlacement::Random { seed } => random_placement(n_qubits, cluster, seed),
    }
}

/// Segments the circuit, places segment 1, then anneals each segment in turn
/// starting from the previous segment's result. The returned plan is never
/// worse than holding the initial placement across all segments.
pub fn compile(circuit: &Circuit, cluster: &ClusterTopology, opts: &CompileOptions) -> Result<Plan> {
    compile_layered(&layerize(circuit), cluster, opts)
}

pub fn compile_layered(lc: &LayeredCircuit, cluster: &ClusterTopology, opts: &CompileOptions) -> Result<Plan> {
    opts.cost.validate()?;
    cluster.check_capacity(lc.n_qubits())?;
    let segments = resolve_segments(lc, &opts.segmentation)?;
    let initial = initial_assignment(lc.n_qubits(), &segments, cluster, &opts.initial)?;

    let Some(overrides) = &opts.anneal else {
        let fixed = vec![initial.clone(); segments.len()];
        return evaluate_plan(&initial, &segments, &fixed, cluster, &opts.cost);
    };

    let base = overrides.resolve(lc.n_qubits());
    base.validate()?;
    let mut assignments: Vec<Assignment> = Vec::with_capacity(segments.len());
    for seg in &segments {
        let ap = AnnealParams {
            seed: derive_seed(base.seed, &format!("anneal/segment/{}", seg.index)),
            ..base
        };
        let (start, prev) = match assignments.last() {
            Some(last) => (last, Some(last)),
            None => (&initial, None),
        };
        let out = anneal_segment(start, seg, prev, cluster, &opts.cost, &ap)?;
        assignments.push(out.assignment);
    }
    let annealed = evaluate_plan(&initial, &segments, &assignments, cluster, &opts.cost)?;
    // Each segment is annealed without sight of the ones after it, so the chain
    // can lose to simply holding the clustered placement, which was built from
    // every segment's interactions. Keep whichever plan is cheaper.
    let fixed = vec![initial.clone(); segments.len()];
    let held = evaluate_plan(&initial, &segments, &fixed, cluster, &opts.cost)?;
    Ok(if held.total_cost() < annealed.total_cost() { held } else { annealed })
}

/// Replays a plan's remote gates and teleports through a fresh switch.
pub fn replay_epr(plan: &Plan, cluster: &ClusterTopology) -> Result<QuantumSwitch> {
    let mut switch = QuantumSwitch::new();
    let inter = cluster.inter();
    let mut prev: Option<&Assignment> = None;
    for sp in &plan.segments {
        let a = &sp.assignment;
        for ((i, j), f) in sp.segment.interactions.iter() {
            let (pi, pj) = (a.qpu(i), a.qpu(j));
            if pi != pj {
                switch.record_remote_ops(cluster, &inter.path(pi, pj), f)?;
            }
        }
        if let Some(prev) = prev {
            for q in 0..a.n_qubits() {
                if prev.qpu(q) != a.qpu(q) {
                    switch.record_teleport(cluster, &inter.path(prev.qpu(q), a.qpu(q)))?;
                }
            }
        }
        prev = Some(a);
    }
    Ok(switch)
}

pub const BRUTE_FORCE_MAX_QUBITS: usize = 10;
pub const BRUTE_FORCE_MAX_QPUS: usize = 3;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub assignments: Vec<Assignment>,
    pub cost: f64,
}

fn decode(mut index: usize, n: usize, base: usize) -> Vec<QpuId> {
    let mut qpus = vec![0; n];
    for slot in qpus.iter_mut() {
        *slot = index % base;
        index /= base;
    }
    qpus
}

/// Exact minimum of the chained per-segment objective over all
/// capacity-feasible assignment sequences.
///
/// Dynamic programming over segments. The movement term is a sum of per-qubit
/// costs, so the min over predecessor assignments is taken one qubit
/// coordinate at a time instead of over all pairs.
pub fn brute_force_optimum(
    n_qubits: usize,
    segments: &[Segment],
    cluster: &ClusterTopology,
    cp: &CostParams,
) -> Result<BruteForceResult> {
    let n_qpus = cluster.n_qpus();
    if n_qubits > BRUTE_FORCE_MAX_QUBITS || n_qpus > BRUTE_FORCE_MAX_QPUS {
        return Err(Error::TooLarge(format!(
            "{n_qubits} qubits on {n_qpus} QPUs (limit {BRUTE_FORCE_MAX_QUBITS} qubits, {BRUTE_FORCE_MAX_QPUS} QPUs)"
        )));
    }
    cp.validate()?;
    cluster.check_capacity(n_qubits)?;
    let space = n_qpus.pow(n_qubits as u32);
    let stride: Vec<usize> = (0..n_qubits).map(|q| n_qpus.pow(q as u32)).collect();
    let candidates: Vec<Option<Assignment>> = (0..space)
        .map(|i| {
            let a = Assignment::new(decode(i, n_qubits, n_qpus));
            a.is_feasible(cluster).then_some(a)
        })
        .collect();

    if segments.is_empty() {
        return Ok(BruteForceResult {
            assignments: Vec::new(),
            cost: 0.0,
        });
    }

    let static_cost = |seg: &Segment| -> Result<Vec<f64>> {
        candidates
            .iter()
            .map(|c| match c {
                Some(a) => total(a, seg, None, cluster, cp).map(|b| b.e_total),
                None => Ok(f64::INFINITY),
            })
            .collect()
    };

    let mut value = static_cost(&segments[0])?;
    // parents[s][q][x]: predecessor index along coordinate q when entering segment s
    let mut parents: Vec<Vec<Vec<u32>>> = Vec::with_capacity(segments.len());
    for seg in &segments[1..] {
        let mut relaxed = value.clone();
        let mut seg_parents = Vec::with_capacity(n_qubits);
        for q in 0..n_qubits {
            let mut next = vec![f64::INFINITY; space];
            let mut parent = vec![0u32; space];
            for x in 0..space {
                let xq = (x / stride[q]) % n_qpus;
                let base = x - xq * stride[q];
                for v in 0..n_qpus {
                    let y = base + v * stride[q];
                    let c = relaxed[y] + cp.gamma3 * cp.teleport_cost * cluster.inter_cost(v, xq);
                    if c < next[x] {
                        next[x] = c;
                        parent[x] = y as u32;
                    }
                }
            }
            relaxed = next;
            seg_parents.push(parent);
        }
        let here = static_cost(seg)?;
        value = here.iter().zip(&relaxed).map(|(s, m)| s + m).collect();
        parents.push(seg_parents);
    }

    let (mut x, best) = value
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, &v)| (i, v))
        .expect("nonempty space");
    let mut chain = vec![x];
    for seg_parents in parents.iter().rev() {
        for parent in seg_parents.iter().rev() {
            x = parent[x] as usize;
        }
        chain.push(x);
    }
    chain.reverse();
    let assignments = chain
        .into_iter()
        .map(|i| candidates[i].clone().expect("optimal chain is feasible"))
        .collect();
    Ok(BruteForceResult {
        assignments,
        cost: best,
    })
}
