//! kNN mutual information between a continuous transition feature and the
//! expert/random label.
//!
//! For each sample the feature is the pair (s_dim, s'_dim). The estimator
//! takes the Chebyshev distance d_i to the k-th nearest neighbour among
//! same-label samples, counts the neighbours m_i of any label within d_i
//! (inclusive, so m_i >= k), and returns
//!
//! ```text
//! max(0, psi(N) - <psi(N_y)> + psi(k) - <psi(m)>)
//! ```
//!
//! Exact duplicates are guaranteed by the pseudo-random resampling, so a
//! deterministic jitter of magnitude 1e-10 is applied first. Jitter streams
//! are seeded per feature value (not per sample index) and the final
//! reduction sums contributions in value order, which makes the estimate
//! bit-exactly invariant under sample permutation and label renaming.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::digamma;

use crate::envsuite::mix_seed;
use crate::error::{Error, Result};
use crate::trajstore::{LabeledTransition, TransitionLabel};

pub const DEFAULT_K_NEIGHBORS: usize = 3;

const JITTER_MAGNITUDE: f64 = 1e-10;
const JITTER_STREAM_SALT: u64 = 0x6d69_6a69_7474;

struct Point {
    f: [f64; 2],
    expert: bool,
}

fn chebyshev(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
}

/// Builds the jittered point set. Grouping is by (value bits, label) and
/// each group draws from a stream seeded by the value alone, so the result
/// is a pure function of the sample multiset.
fn jittered_points(samples: &[LabeledTransition], dim: usize) -> Vec<Point> {
    let mut groups: BTreeMap<(u64, u64, bool), Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let f0 = s.transition.from[dim];
        let f1 = s.transition.to[dim];
        let expert = s.label == TransitionLabel::Expert;
        groups
            .entry((f0.to_bits(), f1.to_bits(), expert))
            .or_default()
            .push(i);
    }
    let mut points = Vec::with_capacity(samples.len());
    for ((b0, b1, expert), members) in groups {
        let mut stream =
            ChaCha8Rng::seed_from_u64(mix_seed(mix_seed(JITTER_STREAM_SALT, b0), b1));
        let f0 = f64::from_bits(b0);
        let f1 = f64::from_bits(b1);
        for _ in 0..members.len() {
            let j0: f64 = stream.gen_range(-JITTER_MAGNITUDE..JITTER_MAGNITUDE);
            let j1: f64 = stream.gen_range(-JITTER_MAGNITUDE..JITTER_MAGNITUDE);
            points.push(Point {
                f: [f0 + j0, f1 + j1],
                expert,
            });
        }
    }
    points
}

/// kNN MI estimate (nats, clamped at 0) for one state dimension.
pub fn estimate_dim_mi(
    samples: &[LabeledTransition],
    dim: usize,
    k_neighbors: usize,
) -> Result<f64> {
    if k_neighbors == 0 {
        return Err(Error::config("k_neighbors must be >= 1"));
    }
    for s in samples {
        if dim >= s.transition.from.dim() {
            return Err(Error::dim(s.transition.from.dim(), dim, "MI feature dimension"));
        }
    }
    let n_expert = samples
        .iter()
        .filter(|s| s.label == TransitionLabel::Expert)
        .count();
    let n_random = samples.len() - n_expert;
    let need = 2 * k_neighbors;
    if n_expert < need || n_random < need {
        return Err(Error::validation(format!(
            "need at least {need} samples per label, got {n_expert} expert / {n_random} random"
        )));
    }

    let points = jittered_points(samples, dim);
    let n = points.len();
    let label_count = |expert: bool| if expert { n_expert } else { n_random };

    let mut dists = vec![0.0f64; n];
    let mut same_label = Vec::with_capacity(n);
    let mut psi_m = Vec::with_capacity(n);
    let mut psi_label = Vec::with_capacity(n);

    for i in 0..n {
        same_label.clear();
        for j in 0..n {
            dists[j] = chebyshev(&points[i].f, &points[j].f);
            if j != i && points[j].expert == points[i].expert {
                same_label.push(dists[j]);
            }
        }
        // distance to the k-th nearest same-label neighbour
        let (_, kth, _) =
            same_label.select_nth_unstable_by(k_neighbors - 1, |a, b| a.total_cmp(b));
        let d_i = *kth;
        // Neighbours of any label within d_i, ties at d_i included. Zero
        // distances are excluded: they are the sample itself plus its exact
        // other-label duplicates, which share its jitter offsets by the
        // value-seeded stream construction and would double-count the
        // sample's own position.
        let m_i = dists.iter().filter(|&&d| d > 0.0 && d <= d_i).count();
        psi_m.push(digamma(m_i as f64));
        psi_label.push(digamma(label_count(points[i].expert) as f64));
    }

    // value-ordered reduction: bit-stable under permutation and label swap
    psi_m.sort_by(|a, b| a.total_cmp(b));
    psi_label.sort_by(|a, b| a.total_cmp(b));
    let mean_psi_m: f64 = psi_m.iter().sum::<f64>() / n as f64;
    let mean_psi_label: f64 = psi_label.iter().sum::<f64>() / n as f64;

    let mi = digamma(n as f64) - mean_psi_label + digamma(k_neighbors as f64) - mean_psi_m;
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajstore::{StateVector, Transition};

    fn lt(f0: f64, f1: f64, label: TransitionLabel) -> LabeledTransition {
        LabeledTransition {
            transition: Transition::new(
                StateVector::new(vec![f0]).unwrap(),
                StateVector::new(vec![f1]).unwrap(),
            )
            .unwrap(),
            label,
        }
    }

    fn uniform_samples(n: usize, seed: u64, dependent: bool) -> Vec<LabeledTransition> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = if i % 2 == 0 {
                    TransitionLabel::Expert
                } else {
                    TransitionLabel::PseudoRandom
                };
                let y = if label == TransitionLabel::Expert { 1.0 } else { 0.0 };
                if dependent {
                    // feature = (y + eps, y + eps'), noise scale 0.01
                    lt(
                        y + 0.01 * rng.gen_range(-1.0..1.0),
                        y + 0.01 * rng.gen_range(-1.0..1.0),
                        label,
                    )
                } else {
                    lt(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), label)
                }
            })
            .collect()
    }

    /// Plug-in histogram MI oracle, 32 bins per axis.
    fn histogram_mi(samples: &[LabeledTransition], bins: usize) -> f64 {
        let feats: Vec<(f64, f64, bool)> = samples
            .iter()
            .map(|s| {
                (
                    s.transition.from[0],
                    s.transition.to[0],
                    s.label == TransitionLabel::Expert,
                )
            })
            .collect();
        let (mut min0, mut max0) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min1, mut max1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(f0, f1, _) in &feats {
            min0 = min0.min(f0);
            max0 = max0.max(f0);
            min1 = min1.min(f1);
            max1 = max1.max(f1);
        }
        let idx = |v: f64, min: f64, max: f64| -> usize {
            if max == min {
                0
            } else {
                (((v - min) / (max - min) * bins as f64) as usize).min(bins - 1)
            }
        };
        let mut joint = std::collections::HashMap::new();
        let mut marg_f = std::collections::HashMap::new();
        let mut n_y = [0usize; 2];
        for &(f0, f1, e) in &feats {
            let cell = (idx(f0, min0, max0), idx(f1, min1, max1));
            *joint.entry((cell, e)).or_insert(0usize) += 1;
            *marg_f.entry(cell).or_insert(0usize) += 1;
            n_y[e as usize] += 1;
        }
        let n = feats.len() as f64;
        let mut mi = 0.0;
        for ((cell, e), &c) in joint.iter().map(|(k, v)| (*k, v)) {
            let p_joint = c as f64 / n;
            let p_f = marg_f[&cell.0.eq(&cell.0).then_some(cell).unwrap()] as f64 / n;
            let p_y = n_y[e as usize] as f64 / n;
            mi += p_joint * (p_joint / (p_f * p_y)).ln();
        }
        mi.max(0.0)
    }

    #[test]
    fn independent_feature_estimates_near_zero() {
        let samples = uniform_samples(2000, 0, false);
        let mi = estimate_dim_mi(&samples, 0, 3).unwrap();
        assert!((0.0..=0.05).contains(&mi), "mi = {mi}");
    }

    #[test]
    fn label_coded_feature_estimates_near_ln2() {
        let samples = uniform_samples(2000, 1, true);
        let mi = estimate_dim_mi(&samples, 0, 3).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 0.1, "mi = {mi}");
        // cross-check against the histogram plug-in oracle
        let oracle = histogram_mi(&samples, 32);
        assert!((mi - oracle).abs() < 0.1, "knn {mi} vs histogram {oracle}");
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let mut samples = uniform_samples(400, 2, true);
        let a = estimate_dim_mi(&samples, 0, 3).unwrap();
        // deterministic shuffle
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for i in (1..samples.len()).rev() {
            let j = rng.gen_range(0..=i);
            samples.swap(i, j);
        }
        let b = estimate_dim_mi(&samples, 0, 3).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn label_swap_symmetry_is_exact() {
        let samples = uniform_samples(400, 3, true);
        let swapped: Vec<LabeledTransition> = samples
            .iter()
            .map(|s| LabeledTransition {
                transition: s.transition.clone(),
                label: match s.label {
                    TransitionLabel::Expert => TransitionLabel::PseudoRandom,
                    TransitionLabel::PseudoRandom => TransitionLabel::Expert,
                },
            })
            .collect();
        let a = estimate_dim_mi(&samples, 0, 3).unwrap();
        let b = estimate_dim_mi(&swapped, 0, 3).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sample_count_robustness() {
        let a = estimate_dim_mi(&uniform_samples(2000, 4, true), 0, 3).unwrap();
        let b = estimate_dim_mi(&uniform_samples(4000, 4, true), 0, 3).unwrap();
        assert!((a - b).abs() < 0.05, "{a} vs {b}");
    }

    #[test]
    fn duplicates_from_resampling_are_handled() {
        // every feature value appears many times under both labels
        let mut samples = Vec::new();
        for i in 0..300 {
            let v = (i % 3) as f64;
            samples.push(lt(v, v, TransitionLabel::Expert));
            samples.push(lt(v, (i % 2) as f64, TransitionLabel::PseudoRandom));
        }
        let mi = estimate_dim_mi(&samples, 0, 3).unwrap();
        assert!(mi.is_finite());
        assert!(mi >= 0.0);
    }

    #[test]
    fn too_few_samples_rejected() {
        let samples = uniform_samples(10, 5, false);
        assert!(estimate_dim_mi(&samples, 0, 3).is_err());
        assert!(estimate_dim_mi(&samples, 0, 2).is_ok());
    }

    #[test]
    fn bad_dimension_rejected() {
        let samples = uniform_samples(100, 6, false);
        assert!(estimate_dim_mi(&samples, 1, 3).is_err());
    }

    #[test]
    fn discrete_support_matches_exact_plugin_mi() {
        // features on a known finite support: the kNN estimate must track
        // the exact plug-in MI of the empirical joint distribution
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for case in 0..10 {
            let p_flip = 0.05 + 0.4 * (case as f64 / 10.0);
            let n = 2000;
            let mut samples = Vec::with_capacity(n);
            for i in 0..n {
                let label = if i % 2 == 0 {
                    TransitionLabel::Expert
                } else {
                    TransitionLabel::PseudoRandom
                };
                let y = (label == TransitionLabel::Expert) as usize as f64;
                let flip0 = rng.gen_range(0.0..1.0) < p_flip;
                let flip1 = rng.gen_range(0.0..1.0) < p_flip;
                let f0 = if flip0 { 1.0 - y } else { y };
                let f1 = if flip1 { 1.0 - y } else { y };
                samples.push(lt(f0, f1, label));
            }
            let knn = estimate_dim_mi(&samples, 0, 3).unwrap();
            let exact = exact_discrete_mi(&samples);
            assert!(
                (knn - exact).abs() < 0.1,
                "case {case}: knn {knn} vs exact {exact}"
            );
        }
    }

    /// Exact plug-in MI over the empirical joint distribution of a discrete
    /// feature and the label (brute force over observed support).
    pub(super) fn exact_discrete_mi(samples: &[LabeledTransition]) -> f64 {
        let mut joint: BTreeMap<(u64, u64, bool), usize> = BTreeMap::new();
        let mut marg: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        let mut n_y = [0usize; 2];
        for s in samples {
            let key = (
                s.transition.from[0].to_bits(),
                s.transition.to[0].to_bits(),
                s.label == TransitionLabel::Expert,
            );
            *joint.entry(key).or_default() += 1;
            *marg.entry((key.0, key.1)).or_default() += 1;
            n_y[(s.label == TransitionLabel::Expert) as usize] += 1;
        }
        let n = samples.len() as f64;
        let mut mi = 0.0;
        for (&(b0, b1, e), &c) in &joint {
            let p = c as f64 / n;
            let pf = marg[&(b0, b1)] as f64 / n;
            let py = n_y[e as usize] as f64 / n;
            mi += p * (p / (pf * py)).ln();
        }
        mi.max(0.0)
    }
}
