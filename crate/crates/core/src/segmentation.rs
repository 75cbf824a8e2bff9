//! Splits a layered circuit into contiguous layer intervals wherever the set of
//! most interaction-dense qubits changes.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{InteractionCount, LayeredCircuit, Qubit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    /// Half-width of the density smoothing window, in layers.
    pub window: usize,
    pub top_k: usize,
    /// A new segment opens when the Jaccard similarity of consecutive top-k sets drops below this.
    pub threshold: f64,
    /// Minimum layers in a segment before another boundary may be placed.
    pub min_segment_len: usize,
}

impl SegmentationParams {
    /// Defaults scaled to the circuit: `w = max(1, ⌈depth/20⌉)`, `k = max(2, ⌈n/4⌉)`,
    /// `θ = 0.5`, `min_segment_len = w`.
    pub fn defaults_for(lc: &LayeredCircuit) -> Self {
        let window = lc.depth().div_ceil(20).max(1);
        let top_k = lc.n_qubits().div_ceil(4).max(2).min(lc.n_qubits());
        SegmentationParams {
            window,
            top_k,
            threshold: 0.5,
            min_segment_len: window,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Param("window must be at least 1".into()));
        }
        if self.top_k == 0 || self.top_k > n_qubits {
            return Err(Error::Param(format!(
                "top_k {} outside [1, {n_qubits}]",
                self.top_k
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Param(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.min_segment_len == 0 {
            return Err(Error::Param("min_segment_len must be at least 1".into()));
        }
        Ok(())
    }
}

/// A contiguous, inclusive layer interval with its two-qubit gate counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// 1-based segment number.
    pub index: usize,
    pub from_layer: usize,
    pub to_layer: usize,
    pub interactions: InteractionCount,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.to_layer + 1 - self.from_layer
    }

    pub fn is_empty(&self) -> bool {
        self.to_layer < self.from_layer
    }
}

/// Interaction densities `ρ_q(l) = D_q(l) / l` for every qubit and layer.
#[derive(Debug, Clone)]
pub struct DensityProfile {
    depth: usize,
    /// `rho[l - 1][q]`
    rho: Vec<Vec<f64>>,
}

impl DensityProfile {
    pub fn new(lc: &LayeredCircuit) -> Self {
        let n = lc.n_qubits();
        let mut cumulative = vec![0u64; n];
        let mut rho = Vec::with_capacity(lc.depth());
        for l in 1..=lc.depth() {
            for &(a, b) in lc.layer_pairs(l) {
                cumulative[a] += 1;
                cumulative[b] += 1;
            }
            rho.push(cumulative.iter().map(|&d| d as f64 / l as f64).collect());
        }
        DensityProfile {
            depth: lc.depth(),
            rho,
        }
    }

    fn check_layer(&self, l: usize) -> Result<()> {
        if l == 0 || l > self.depth {
            return Err(Error::Range(format!("layer {l} outside [1, {}]", self.depth)));
        }
        Ok(())
    }

    pub fn density(&self, q: Qubit, l: usize) -> Result<f64> {
        self.check_layer(l)?;
        Ok(self.rho[l - 1][q])
    }

    /// Mean of `ρ_q(i)` over `i ∈ [max(1, l−w), min(depth, l+w)]`.
    pub fn windowed(&self, q: Qubit, l: usize, window: usize) -> Result<f64> {
        self.check_layer(l)?;
        Ok(self.windowed_unchecked(q, l, window))
    }

    fn windowed_unchecked(&self, q: Qubit, l: usize, window: usize) -> f64 {
        let lo = l.saturating_sub(window).max(1);
        let hi = (l + window).min(self.depth);
        let sum: f64 = (lo..=hi).map(|i| self.rho[i - 1][q]).sum();
        sum / (hi + 1 - lo) as f64
    }

    /// The `k` qubits with the highest windowed density at `l`; ties go to the lower index.
    pub fn top_k(&self, l: usize, window: usize, k: usize) -> Result<BTreeSet<Qubit>> {
        self.check_layer(l)?;
        let n = self.rho[0].len();
        if k == 0 || k > n {
            return Err(Error::Param(format!("top_k {k} outside [1, {n}]")));
        }
        let mut ranked: Vec<(f64, Qubit)> = (0..n)
            .map(|q| (self.windowed_unchecked(q, l, window), q))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(ranked.into_iter().take(k).map(|(_, q)| q).collect())
    }
}

pub fn density(lc: &LayeredCircuit, q: Qubit, l: usize) -> Result<f64> {
    DensityProfile::new(lc).density(q, l)
}

pub fn windowed_density(lc: &LayeredCircuit, q: Qubit, l: usize, window: usize) -> Result<f64> {
    DensityProfile::new(lc).windowed(q, l, window)
}

pub fn top_k_set(lc: &LayeredCircuit, l: usize, params: &SegmentationParams) -> Result<BTreeSet<Qubit>> {
    DensityProfile::new(lc).top_k(l, params.window, params.top_k)
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counted as identical.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn build_segments(lc: &LayeredCircuit, starts: &[usize]) -> Vec<Segment> {
    starts
        .iter()
        .enumerate()
        .map(|(i, &from)| {
            let to = starts.get(i + 1).map_or(lc.depth(), |&next| next - 1);
            Segment {
                index: i + 1,
                from_layer: from,
                to_layer: to,
                interactions: lc
                    .count_interactions(from, to)
                    .expect("segment interval within depth"),
            }
        })
        .collect()
}

/// Pattern-driven segmentation. A boundary goes before layer `l` when
/// `J(S_l, S_{l-1}) < θ` and the open segment already spans `min_segment_len` layers.
/// A circuit with no layers yields no segments.
pub fn segment(lc: &LayeredCircuit, params: &SegmentationParams) -> Result<Vec<Segment>> {
    params.validate(lc.n_qubits())?;
    if lc.depth() == 0 {
        return Ok(Vec::new());
    }
    let profile = DensityProfile::new(lc);
    let mut starts = vec![1];
    let mut prev = profile.top_k(1, params.window, params.top_k)?;
    for l in 2..=lc.depth() {
        let cur = profile.top_k(l, params.window, params.top_k)?;
        let open_len = l - starts.last().copied().unwrap_or(1);
        if jaccard(&cur, &prev) < params.threshold && open_len >= params.min_segment_len {
            starts.push(l);
        }
        prev = cur;
    }
    Ok(build_segments(lc, &starts))
}

/// `n_segments` contiguous segments whose boundaries are drawn uniformly without replacement.
pub fn random_segment(lc: &LayeredCircuit, n_segments: usize, seed: u64) -> Result<Vec<Segment>> {
    if n_segments == 0 || n_segments > lc.depth() {
        return Err(Error::Param(format!(
            "{n_segments} segments requested for depth {}",
            lc.depth()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // candidate segment starts are layers 2..=depth
    let mut starts: Vec<usize> = sample(&mut rng, lc.depth() - 1, n_segments - 1)
        .into_iter()
        .map(|i| i + 2)
        .collect();
    starts.push(1);
    starts.sort_unstable();
    Ok(build_segments(lc, &starts))
}
