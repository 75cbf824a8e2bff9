// Sampling statistics checked against their closed-form distributions.

mod common;

use dqcmap::anneal::{propose, AnnealParams};
use dqcmap::cost::{CostParams, Move, SegmentState};
use dqcmap::placement::{random_placement, Assignment};
use dqcmap::seed::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::chain;

const DRAWS: usize = 10_000;

/// Each QPU's load under a uniform slot shuffle is hypergeometric: `n` draws
/// without replacement from `N` slots of which `K` belong to the QPU.
#[test]
fn random_placement_loads_are_hypergeometric() {
    let sizes = [4usize, 6, 10];
    let cluster = chain(&sizes, &[1.0, 1.0]);
    let big_n = sizes.iter().sum::<usize>() as f64;
    for n in [5usize, 12, 20] {
        let mut sum = [0.0f64; 3];
        let mut sum_sq = [0.0f64; 3];
        for s in 0..DRAWS {
            let a = random_placement(n, &cluster, derive_seed(s as u64, "mc/placement")).unwrap();
            assert!(a.is_feasible(&cluster));
            for (p, &l) in a.loads(3).iter().enumerate() {
                sum[p] += l as f64;
                sum_sq[p] += (l * l) as f64;
            }
        }
        let nf = n as f64;
        for (p, &k) in sizes.iter().enumerate() {
            let frac = k as f64 / big_n;
            let mean = nf * frac;
            let var = nf * frac * (1.0 - frac) * (big_n - nf) / (big_n - 1.0);
            let m = DRAWS as f64;
            let sample_mean = sum[p] / m;
            // loads of a full cluster are fixed, so the spread is zero
            if var == 0.0 {
                assert_eq!(sample_mean, mean);
                continue;
            }
            let se = (var / m).sqrt();
            assert!(
                (sample_mean - mean).abs() <= 3.0 * se,
                "n={n} qpu={p}: mean {sample_mean} vs {mean} (se {se})"
            );
            let sample_var = sum_sq[p] / m - sample_mean * sample_mean;
            // loose bound on the variance estimator: its relative standard
            // error is about sqrt(2/m) for a near-normal load
            assert!(
                (sample_var - var).abs() <= 3.0 * var * (3.0 / m).sqrt() + 1e-9,
                "n={n} qpu={p}: var {sample_var} vs {var}"
            );
        }
    }
}

#[test]
fn propose_mixes_moves_at_configured_weights() {
    // every QPU is occupied and has room, so both move kinds are always available
    let cluster = chain(&[5, 5, 5], &[1.0, 1.0]);
    let a = Assignment::new(vec![0, 0, 1, 1, 2, 2]);
    let seg = common::segment(1, &[((0, 2), 1), ((3, 4), 2)]);
    let cp = CostParams::default();
    let state = SegmentState::new(a, &seg, None, &cluster, &cp).unwrap();
    for w in [0.5, 0.2, 0.9] {
        let ap = AnnealParams {
            relocate_weight: w,
            swap_weight: 1.0 - w,
            ..AnnealParams::defaults_for(6, 0)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0, "mc/propose"));
        let mut relocations = 0usize;
        for _ in 0..DRAWS {
            match propose(&state, &mut rng, &ap).unwrap() {
                Move::Relocate { qubit, to } => {
                    assert_ne!(state.assignment().qpu(qubit), to);
                    relocations += 1;
                }
                Move::Swap { a, b } => assert_ne!(state.assignment().qpu(a), state.assignment().qpu(b)),
            }
        }
        let m = DRAWS as f64;
        let sd = (m * w * (1.0 - w)).sqrt();
        assert!(
            (relocations as f64 - m * w).abs() <= 3.0 * sd,
            "weight {w}: {relocations} relocations of {DRAWS}"
        );
    }
}

#[test]
fn propose_relocation_targets_are_uniform_over_slack() {
    let cluster = chain(&[5, 5, 5], &[1.0, 1.0]);
    let a = Assignment::new(vec![0, 0, 1, 1, 2, 2]);
    let seg = common::segment(1, &[((0, 2), 1)]);
    let cp = CostParams::default();
    let state = SegmentState::new(a, &seg, None, &cluster, &cp).unwrap();
    let ap = AnnealParams {
        relocate_weight: 1.0,
        swap_weight: 0.0,
        ..AnnealParams::defaults_for(6, 0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(1, "mc/propose"));
    let mut hits = [0usize; 3];
    for _ in 0..DRAWS {
        if let Some(Move::Relocate { to, .. }) = propose(&state, &mut rng, &ap) {
            hits[to] += 1;
        } else {
            panic!("relocation expected");
        }
    }
    let m = DRAWS as f64;
    let sd = (m * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for h in hits {
        assert!((h as f64 - m / 3.0).abs() <= 3.0 * sd, "{hits:?}");
    }
}
