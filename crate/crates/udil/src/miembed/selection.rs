//! Cumulative MI curve, elbow detection and dimension selection.

use serde::{Deserialize, Serialize};

use super::{EmbeddingSpec, MiReport};
use crate::error::{Error, Result};

/// Dimensions in descending MI order with the running cumulative sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeCurve {
    pub sorted_dims: Vec<usize>,
    pub cumulative: Vec<f64>,
}

/// Elbow location; `degenerate` marks a constant curve where index 0 is
/// returned by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Elbow {
    pub index: usize,
    pub degenerate: bool,
}

/// Sorts dimensions by MI descending (ties break toward the smaller index)
/// and accumulates the scores.
pub fn cumulative_mi_curve(report: &MiReport) -> Result<CumulativeCurve> {
    if report.per_dim_mi.is_empty() {
        return Err(Error::validation("empty MI report"));
    }
    let mut entries = report.per_dim_mi.clone();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let sorted_dims: Vec<usize> = entries.iter().map(|&(d, _)| d).collect();
    let mut cumulative = Vec::with_capacity(entries.len());
    let mut acc = 0.0;
    for &(_, mi) in &entries {
        acc += mi;
        cumulative.push(acc);
    }
    Ok(CumulativeCurve {
        sorted_dims,
        cumulative,
    })
}

/// Normalized-difference elbow: positions and values are min-max normalized
/// to [0, 1] and the index maximizing y - x wins; ties go to the smallest
/// index. A constant curve is degenerate and yields index 0.
pub fn find_elbow(curve: &CumulativeCurve) -> Result<Elbow> {
    let n = curve.cumulative.len();
    if n < 3 {
        return Err(Error::validation(format!(
            "elbow detection needs a curve of length >= 3, got {n}"
        )));
    }
    let y_min = curve.cumulative.first().copied().unwrap();
    let y_max = curve.cumulative.last().copied().unwrap();
    if y_max == y_min {
        return Ok(Elbow {
            index: 0,
            degenerate: true,
        });
    }
    let mut best_idx = 0;
    let mut best = f64::NEG_INFINITY;
    for j in 0..n {
        let x = j as f64 / (n - 1) as f64;
        let y = (curve.cumulative[j] - y_min) / (y_max - y_min);
        let diff = y - x;
        if diff > best {
            best = diff;
            best_idx = j;
        }
    }
    Ok(Elbow {
        index: best_idx,
        degenerate: false,
    })
}

/// Keeps the dimensions up to and including the elbow.
pub fn select_embedding(report: &MiReport) -> Result<EmbeddingSpec> {
    let curve = cumulative_mi_curve(report)?;
    let elbow = find_elbow(&curve)?;
    let selected_dims = curve.sorted_dims[..=elbow.index].to_vec();
    Ok(EmbeddingSpec {
        selected_dims,
        elbow_index: elbow.index,
        degenerate: elbow.degenerate,
        source_report: report.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(scores: &[f64]) -> MiReport {
        MiReport {
            per_dim_mi: scores.iter().copied().enumerate().collect(),
            sample_count: 100,
            k_neighbors: 3,
        }
    }

    #[test]
    fn curve_sorts_and_accumulates() {
        let curve = cumulative_mi_curve(&report(&[0.5, 0.1, 0.9])).unwrap();
        assert_eq!(curve.sorted_dims, vec![2, 0, 1]);
        let expect = [0.9, 1.4, 1.5];
        for (c, e) in curve.cumulative.iter().zip(expect.iter()) {
            assert!((c - e).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_scores_tiebreak_by_index() {
        let curve = cumulative_mi_curve(&report(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(curve.sorted_dims, vec![0, 1, 2]);
        assert!(curve.cumulative.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn curve_is_nondecreasing() {
        let curve = cumulative_mi_curve(&report(&[0.3, 0.0, 0.7, 0.1])).unwrap();
        for w in curve.cumulative.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn elbow_matches_brute_force_oracle() {
        let cumulative = vec![0.9, 0.99, 1.0, 1.005, 1.01];
        let curve = CumulativeCurve {
            sorted_dims: vec![0, 1, 2, 3, 4],
            cumulative: cumulative.clone(),
        };
        // oracle: brute force over all j of normalized y - x
        let n = cumulative.len();
        let (y0, y1) = (cumulative[0], cumulative[n - 1]);
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 0..n {
            let score = (cumulative[j] - y0) / (y1 - y0) - j as f64 / (n - 1) as f64;
            if score > best.1 {
                best = (j, score);
            }
        }
        assert_eq!(best.0, 1);

        let elbow = find_elbow(&curve).unwrap();
        assert_eq!(elbow.index, 1);
        assert!(!elbow.degenerate);
    }

    #[test]
    fn linear_curve_is_degenerate_at_zero_difference() {
        // perfectly linear cumulative curve: y - x is identically 0, the
        // first index wins the tie
        let curve = CumulativeCurve {
            sorted_dims: vec![0, 1, 2, 3],
            cumulative: vec![1.0, 2.0, 3.0, 4.0],
        };
        let elbow = find_elbow(&curve).unwrap();
        assert_eq!(elbow.index, 0);
        assert!(!elbow.degenerate);
    }

    #[test]
    fn constant_curve_is_flagged_degenerate() {
        let curve = CumulativeCurve {
            sorted_dims: vec![0, 1, 2],
            cumulative: vec![0.0, 0.0, 0.0],
        };
        let elbow = find_elbow(&curve).unwrap();
        assert_eq!(elbow.index, 0);
        assert!(elbow.degenerate);
    }

    #[test]
    fn short_curve_rejected() {
        let curve = CumulativeCurve {
            sorted_dims: vec![0, 1],
            cumulative: vec![0.5, 1.0],
        };
        assert!(find_elbow(&curve).is_err());
    }

    #[test]
    fn selection_keeps_prefix_through_elbow() {
        let spec = select_embedding(&report(&[0.9, 0.09, 0.01, 0.005, 0.005])).unwrap();
        assert_eq!(spec.elbow_index, 1);
        assert_eq!(spec.selected_dims, vec![0, 1]);
        assert!(!spec.degenerate);
    }

    #[test]
    fn degenerate_selection_keeps_one_dim() {
        let spec = select_embedding(&report(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(spec.selected_dims, vec![0]);
        assert!(spec.degenerate);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn curve_nondecreasing_for_any_report(
                scores in proptest::collection::vec(0.0f64..2.0, 3..10)
            ) {
                let curve = cumulative_mi_curve(&report(&scores)).unwrap();
                for w in curve.cumulative.windows(2) {
                    prop_assert!(w[1] >= w[0]);
                }
                let elbow = find_elbow(&curve).unwrap();
                prop_assert!(elbow.index < curve.cumulative.len());
            }
        }
    }
}
