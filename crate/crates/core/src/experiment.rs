//! Experiment drivers behind the CLI: single mapping runs, the L1/L2/L3
//! ablation against a random-placement baseline, and the inter:intra cost
//! ratio sweep.
//!
//! Every random choice is drawn from a stream derived from the one top-level
//! seed, so arms are comparable and reruns are byte-identical.

use rayon::prelude::*;
use serde::Serialize;

use crate::anneal::{
    compile_layered, evaluate_plan, initial_assignment, replay_epr, resolve_segments, AnnealOverrides,
    CompileOptions, InitialPlacement, Plan, SegmentationMode,
};
use crate::circuit::{layerize, Circuit, LayeredCircuit};
use crate::cost::{CostBreakdown, CostParams, IntraLayout};
use crate::error::Result;
use crate::hardware::ClusterTopology;
use crate::placement::Assignment;
use crate::segmentation::SegmentationParams;
use crate::seed::derive_seed;

pub const SCHEMA_VERSION: u32 = 1;

/// Knobs shared by every experiment. `None` means the per-circuit default.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub window: Option<usize>,
    pub top_k: Option<usize>,
    pub theta: Option<f64>,
    pub decay: Option<f64>,
    pub partitions: Option<usize>,
    pub cost: CostParams,
    pub t0: Option<f64>,
    pub cooling_rate: Option<f64>,
    pub iters_per_segment: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(seed: u64, cost: CostParams) -> Self {
        ExperimentConfig {
            seed,
            cost,
            ..Default::default()
        }
    }

    pub fn segmentation_params(&self, lc: &LayeredCircuit) -> SegmentationParams {
        let mut p = SegmentationParams::defaults_for(lc);
        if let Some(w) = self.window {
            p.window = w;
            p.min_segment_len = w;
        }
        if let Some(k) = self.top_k {
            p.top_k = k;
        }
        if let Some(t) = self.theta {
            p.threshold = t;
        }
        p
    }

    fn anneal(&self, stream: &str) -> AnnealOverrides {
        AnnealOverrides {
            t0: self.t0,
            cooling_rate: self.cooling_rate,
            iters_per_segment: self.iters_per_segment,
            relocate_weight: None,
            seed: derive_seed(self.seed, stream),
        }
    }

    fn clustered(&self) -> InitialPlacement {
        InitialPlacement::Clustered {
            decay: self.decay,
            partitions: self.partitions,
        }
    }

    fn baseline_seed(&self) -> u64 {
        derive_seed(self.seed, "baseline")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CircuitInfo {
    pub name: String,
    pub n_qubits: usize,
    pub depth: usize,
    pub two_qubit_gates: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterInfo {
    pub n_qpus: usize,
    pub capacities: Vec<usize>,
    pub names: Vec<String>,
    pub links: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub circuit: CircuitInfo,
    pub cluster: ClusterInfo,
    pub segmentation: SegmentationParams,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentRow {
    pub index: usize,
    pub from_layer: usize,
    pub to_layer: usize,
    pub n_layers: usize,
    pub two_qubit_gates: u64,
    pub assignment: Assignment,
    pub layouts: Vec<IntraLayout>,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone, Serialize)]
pub struct Baseline {
    pub method: &'static str,
    pub seed: u64,
    pub totals: CostBreakdown,
}

/// Output of `map`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub run: RunMetadata,
    pub initial_assignment: Assignment,
    pub segments: Vec<SegmentRow>,
    pub totals: CostBreakdown,
    pub epr_pairs: u64,
    pub baseline: Baseline,
    /// `(baseline − method) / baseline`, as a fraction.
    pub reduction: f64,
}

pub fn reduction(baseline: f64, method: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        (baseline - method) / baseline
    }
}

fn circuit_info(lc: &LayeredCircuit) -> CircuitInfo {
    CircuitInfo {
        name: lc.circuit().name.clone(),
        n_qubits: lc.n_qubits(),
        depth: lc.depth(),
        two_qubit_gates: lc.circuit().two_qubit_gate_count(),
    }
}

fn cluster_info(cluster: &ClusterTopology) -> ClusterInfo {
    ClusterInfo {
        n_qpus: cluster.n_qpus(),
        capacities: cluster.capacities(),
        names: cluster.qpus().iter().map(|q| q.name.clone()).collect(),
        links: cluster.links().iter().map(|l| (l.a, l.b, l.cost_factor)).collect(),
    }
}

fn segment_rows(plan: &Plan) -> Vec<SegmentRow> {
    plan.segments
        .iter()
        .map(|sp| SegmentRow {
            index: sp.segment.index,
            from_layer: sp.segment.from_layer,
            to_layer: sp.segment.to_layer,
            n_layers: sp.segment.len(),
            two_qubit_gates: sp.segment.interactions.total(),
            assignment: sp.assignment.clone(),
            layouts: sp.layouts.clone(),
            cost: sp.cost,
        })
        .collect()
}

/// The random-placement baseline: one random feasible assignment held for every segment.
pub fn baseline_plan(
    lc: &LayeredCircuit,
    cluster: &ClusterTopology,
    mode: &SegmentationMode,
    cost: &CostParams,
    seed: u64,
) -> Result<Plan> {
    compile_layered(
        lc,
        cluster,
        &CompileOptions {
            segmentation: mode.clone(),
            initial: InitialPlacement::Random { seed },
            cost: *cost,
            anneal: None,
        },
    )
}

/// Full pipeline on one circuit plus the random baseline, as a report.
pub fn run_map(circuit: &Circuit, cluster: &ClusterTopology, cfg: &ExperimentConfig) -> Result<Report> {
    let lc = layerize(circuit);
    cluster.check_capacity(lc.n_qubits())?;
    let seg_params = cfg.segmentation_params(&lc);
    let mode = SegmentationMode::Pattern(Some(seg_params));
    let plan = compile_layered(
        &lc,
        cluster,
        &CompileOptions {
            segmentation: mode.clone(),
            initial: cfg.clustered(),
            cost: cfg.cost,
            anneal: Some(cfg.anneal("l3/anneal")),
        },
    )?;
    let baseline = baseline_plan(&lc, cluster, &mode, &cfg.cost, cfg.baseline_seed())?;
    let epr = replay_epr(&plan, cluster)?.epr_consumed;
    debug_assert_eq!(epr, plan.epr_total());
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        run: RunMetadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            circuit: circuit_info(&lc),
            cluster: cluster_info(cluster),
            segmentation: seg_params,
            config: cfg.clone(),
        },
        initial_assignment: plan.initial.clone(),
        segments: segment_rows(&plan),
        totals: plan.totals,
        epr_pairs: epr,
        reduction: reduction(baseline.total_cost(), plan.total_cost()),
        baseline: Baseline {
            method: "random_placement",
            seed: cfg.baseline_seed(),
            totals: baseline.totals,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Baseline,
    L1,
    L2,
    L3,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Baseline, Arm::L1, Arm::L2, Arm::L3];

    pub fn label(self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::L1 => "L1",
            Arm::L2 => "L2",
            Arm::L3 => "L3",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmResult {
    pub arm: Arm,
    pub description: &'static str,
    pub n_segments: usize,
    pub totals: CostBreakdown,
    pub reduction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub schema_version: u32,
    pub run: RunMetadata,
    pub arms: Vec<ArmResult>,
}

impl AblationReport {
    pub fn arm(&self, arm: Arm) -> &ArmResult {
        self.arms.iter().find(|a| a.arm == arm).expect("all arms present")
    }
}

/// Compiles one ablation arm.
///
/// * baseline: random placement held across the pattern segments
/// * L1: pattern segmentation + clustering, no annealing
/// * L2: random segmentation (same segment count as L1) + clustering + annealing
/// * L3: pattern segmentation + clustering + annealing
pub fn run_arm(lc: &LayeredCircuit, cluster: &ClusterTopology, cfg: &ExperimentConfig, arm: Arm) -> Result<Plan> {
    let seg_params = cfg.segmentation_params(lc);
    let pattern = SegmentationMode::Pattern(Some(seg_params));
    match arm {
        Arm::Baseline => baseline_plan(lc, cluster, &pattern, &cfg.cost, cfg.baseline_seed()),
        Arm::L1 => compile_layered(
            lc,
            cluster,
            &CompileOptions {
                segmentation: pattern,
                initial: cfg.clustered(),
                cost: cfg.cost,
                anneal: None,
            },
        ),
        Arm::L2 => {
            let n_segments = resolve_segments(lc, &pattern)?.len().max(1);
            compile_layered(
                lc,
                cluster,
                &CompileOptions {
                    segmentation: SegmentationMode::Random {
                        n_segments,
                        seed: derive_seed(cfg.seed, "l2/segmentation"),
                    },
                    initial: cfg.clustered(),
                    cost: cfg.cost,
                    anneal: Some(cfg.anneal("l2/anneal")),
                },
            )
        }
        Arm::L3 => compile_layered(
            lc,
            cluster,
            &CompileOptions {
                segmentation: pattern,
                initial: cfg.clustered(),
                cost: cfg.cost,
                anneal: Some(cfg.anneal("l3/anneal")),
            },
        ),
    }
}

pub fn run_ablate(circuit: &Circuit, cluster: &ClusterTopology, cfg: &ExperimentConfig) -> Result<AblationReport> {
    let lc = layerize(circuit);
    cluster.check_capacity(lc.n_qubits())?;
    let plans: Vec<Plan> = Arm::ALL
        .par_iter()
        .map(|&arm| run_arm(&lc, cluster, cfg, arm))
        .collect::<Result<_>>()?;
    let baseline_total = plans[0].total_cost();
    let arms = Arm::ALL
        .iter()
        .zip(&plans)
        .map(|(&arm, plan)| ArmResult {
            arm,
            description: match arm {
                Arm::Baseline => "random placement",
                Arm::L1 => "pattern segmentation + time-aware clustering",
                Arm::L2 => "random segmentation + clustering + annealing",
                Arm::L3 => "pattern segmentation + clustering + annealing",
            },
            n_segments: plan.segments.len(),
            totals: plan.totals,
            reduction: reduction(baseline_total, plan.total_cost()),
        })
        .collect();
    Ok(AblationReport {
        schema_version: SCHEMA_VERSION,
        run: RunMetadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            circuit: circuit_info(&lc),
            cluster: cluster_info(cluster),
            segmentation: cfg.segmentation_params(&lc),
            config: cfg.clone(),
        },
        arms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub e_inter: f64,
    pub e_local: f64,
    pub e_move: f64,
    pub total: f64,
    pub inter_share: f64,
    pub local_share: f64,
    pub move_share: f64,
    pub epr_pairs: u64,
}

pub const SWEEP_CSV_HEADER: &str =
    "ratio,e_inter,e_local,e_move,total,inter_share,local_share,move_share,epr_pairs";

impl SweepRow {
    fn from_totals(ratio: f64, t: &CostBreakdown, cp: &CostParams) -> Self {
        let share = |x: f64| if t.e_total > 0.0 { x / t.e_total } else { 0.0 };
        SweepRow {
            ratio,
            e_inter: cp.gamma1 * t.e_inter,
            e_local: cp.gamma2 * t.e_local,
            e_move: cp.gamma3 * t.e_move,
            total: t.e_total,
            inter_share: share(cp.gamma1 * t.e_inter),
            local_share: share(cp.gamma2 * t.e_local),
            move_share: share(cp.gamma3 * t.e_move),
            epr_pairs: t.epr_pairs,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.ratio,
            self.e_inter,
            self.e_local,
            self.e_move,
            self.total,
            self.inter_share,
            self.local_share,
            self.move_share,
            self.epr_pairs
        )
    }
}

/// Recompiles the full pipeline once per inter:intra ratio. Term columns are γ-weighted.
pub fn run_sweep_ratio(
    circuit: &Circuit,
    cluster: &ClusterTopology,
    cfg: &ExperimentConfig,
    ratios: &[f64],
) -> Result<Vec<SweepRow>> {
    if let Some(r) = ratios.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(crate::error::Error::Param(format!("ratio {r} must be positive")));
    }
    let lc = layerize(circuit);
    cluster.check_capacity(lc.n_qubits())?;
    ratios
        .par_iter()
        .map(|&ratio| {
            let mut cp = cfg.cost;
            cp.set_ratio(ratio);
            let run_cfg = ExperimentConfig { cost: cp, ..cfg.clone() };
            let plan = run_arm(&lc, cluster, &run_cfg, Arm::L3)?;
            Ok(SweepRow::from_totals(ratio, &plan.totals, &cp))
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Prices an explicit assignment held constant over the pattern segments.
pub fn evaluate_fixed(
    lc: &LayeredCircuit,
    cluster: &ClusterTopology,
    cfg: &ExperimentConfig,
    assignment: &Assignment,
) -> Result<Plan> {
    let segments = resolve_segments(lc, &SegmentationMode::Pattern(Some(cfg.segmentation_params(lc))))?;
    let fixed = vec![assignment.clone(); segments.len()];
    evaluate_plan(assignment, &segments, &fixed, cluster, &cfg.cost)
}

/// Clustered placement only, for inspection.
pub fn clustered_assignment(lc: &LayeredCircuit, cluster: &ClusterTopology, cfg: &ExperimentConfig) -> Result<Assignment> {
    let segments = resolve_segments(lc, &SegmentationMode::Pattern(Some(cfg.segmentation_params(lc))))?;
    initial_assignment(lc.n_qubits(), &segments, cluster, &cfg.clustered())
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}
