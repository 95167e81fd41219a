//! Plug-in Jensen-Shannon divergence between histogrammed pair samples.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::trajstore::StateVector;

/// Maximum embedded dimension the histogram stays tractable for.
const MAX_EMBEDDED_DIM: usize = 3;

/// Plug-in JS divergence (natural log, range [0, ln 2]) between two sets of
/// embedded pairs (z, z'). Both sets are binned on a shared per-dimension
/// bounding box with `bins` cells per axis.
pub fn js_estimate(
    samples_p: &[(StateVector, StateVector)],
    samples_q: &[(StateVector, StateVector)],
    bins: usize,
) -> Result<f64> {
    if samples_p.is_empty() || samples_q.is_empty() {
        return Err(Error::validation("JS estimate needs non-empty samples"));
    }
    if bins < 2 {
        return Err(Error::config("bins must be >= 2"));
    }
    let m = samples_p[0].0.dim();
    if m > MAX_EMBEDDED_DIM {
        return Err(Error::validation(format!(
            "embedded dim {m} > {MAX_EMBEDDED_DIM}: histogram JS is intractable"
        )));
    }
    let joint_dim = 2 * m;
    let flat = |pair: &(StateVector, StateVector)| -> Result<Vec<f64>> {
        if pair.0.dim() != m || pair.1.dim() != m {
            return Err(Error::validation("inconsistent pair dimensions"));
        }
        let mut v = Vec::with_capacity(joint_dim);
        v.extend_from_slice(pair.0.values());
        v.extend_from_slice(pair.1.values());
        Ok(v)
    };

    let mut points_p = Vec::with_capacity(samples_p.len());
    for pair in samples_p {
        points_p.push(flat(pair)?);
    }
    let mut points_q = Vec::with_capacity(samples_q.len());
    for pair in samples_q {
        points_q.push(flat(pair)?);
    }

    // shared bounding box
    let mut lo = vec![f64::INFINITY; joint_dim];
    let mut hi = vec![f64::NEG_INFINITY; joint_dim];
    for p in points_p.iter().chain(points_q.iter()) {
        for d in 0..joint_dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }

    let cell = |p: &[f64]| -> Vec<u16> {
        (0..joint_dim)
            .map(|d| {
                if hi[d] == lo[d] {
                    0
                } else {
                    let idx = ((p[d] - lo[d]) / (hi[d] - lo[d]) * bins as f64) as usize;
                    idx.min(bins - 1) as u16
                }
            })
            .collect()
    };

    let mut hist_p: BTreeMap<Vec<u16>, f64> = BTreeMap::new();
    let mut hist_q: BTreeMap<Vec<u16>, f64> = BTreeMap::new();
    let wp = 1.0 / points_p.len() as f64;
    for p in &points_p {
        *hist_p.entry(cell(p)).or_insert(0.0) += wp;
    }
    let wq = 1.0 / points_q.len() as f64;
    for q in &points_q {
        *hist_q.entry(cell(q)).or_insert(0.0) += wq;
    }

    // JS = 0.5 KL(P || M) + 0.5 KL(Q || M), M = (P + Q) / 2
    let mut js = 0.0;
    for (key, &p) in &hist_p {
        let q = hist_q.get(key).copied().unwrap_or(0.0);
        let mdn = (p + q) / 2.0;
        js += 0.5 * p * (p / mdn).ln();
    }
    for (key, &q) in &hist_q {
        let p = hist_p.get(key).copied().unwrap_or(0.0);
        let mdn = (p + q) / 2.0;
        js += 0.5 * q * (q / mdn).ln();
    }
    Ok(js)
}

/// JS divergence between the ordering-indicator histograms of two pair
/// sets: each pair (z, z') is reduced to sign(z' - z) in {-1, 0, +1} and
/// the two three-bin histograms are compared. This is the coarsest
/// distribution signature the ordering constraint induces.
pub fn ordering_indicator_js(p: &[(f64, f64)], q: &[(f64, f64)]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::validation("JS estimate needs non-empty samples"));
    }
    let hist = |set: &[(f64, f64)]| -> [f64; 3] {
        let mut h = [0.0; 3];
        let w = 1.0 / set.len() as f64;
        for &(z, zp) in set {
            let idx = match zp.partial_cmp(&z) {
                Some(std::cmp::Ordering::Less) => 0,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 2,
            };
            h[idx] += w;
        }
        h
    };
    let hp = hist(p);
    let hq = hist(q);
    let mut js = 0.0;
    for i in 0..3 {
        let m = (hp[i] + hq[i]) / 2.0;
        if hp[i] > 0.0 {
            js += 0.5 * hp[i] * (hp[i] / m).ln();
        }
        if hq[i] > 0.0 {
            js += 0.5 * hq[i] * (hq[i] / m).ln();
        }
    }
    Ok(js)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(a: f64, b: f64) -> (StateVector, StateVector) {
        (
            StateVector::new(vec![a]).unwrap(),
            StateVector::new(vec![b]).unwrap(),
        )
    }

    fn uniform_pairs(n: usize, offset: f64, seed: u64) -> Vec<(StateVector, StateVector)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                pair(
                    rng.gen_range(0.0..1.0) + offset,
                    rng.gen_range(0.0..1.0) + offset,
                )
            })
            .collect()
    }

    #[test]
    fn identical_samples_give_exactly_zero() {
        let p = uniform_pairs(500, 0.0, 1);
        let js = js_estimate(&p, &p, 8).unwrap();
        assert_eq!(js, 0.0);
    }

    #[test]
    fn disjoint_supports_reach_ln_two() {
        let p = uniform_pairs(500, 0.0, 2);
        let q = uniform_pairs(500, 10.0, 3);
        let js = js_estimate(&p, &q, 8).unwrap();
        assert!((js - std::f64::consts::LN_2).abs() < 1e-12, "js = {js}");
    }

    #[test]
    fn half_offset_uniform_matches_brute_force_oracle() {
        let p = uniform_pairs(2000, 0.0, 4);
        let q = uniform_pairs(2000, 0.5, 5);
        let bins = 6;
        let js = js_estimate(&p, &q, bins).unwrap();
        assert!(js > 0.0 && js < std::f64::consts::LN_2);

        // oracle: direct dense-histogram summation over the shared box
        let all: Vec<(f64, f64)> = p
            .iter()
            .chain(q.iter())
            .map(|(a, b)| (a[0], b[0]))
            .collect();
        let (mut lo0, mut hi0) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo1, mut hi1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(a, b) in &all {
            lo0 = lo0.min(a);
            hi0 = hi0.max(a);
            lo1 = lo1.min(b);
            hi1 = hi1.max(b);
        }
        let idx = |v: f64, lo: f64, hi: f64| {
            (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
        };
        let mut dense_p = vec![0.0f64; bins * bins];
        let mut dense_q = vec![0.0f64; bins * bins];
        for (a, b) in p.iter().map(|(a, b)| (a[0], b[0])) {
            dense_p[idx(a, lo0, hi0) * bins + idx(b, lo1, hi1)] += 1.0 / 2000.0;
        }
        for (a, b) in q.iter().map(|(a, b)| (a[0], b[0])) {
            dense_q[idx(a, lo0, hi0) * bins + idx(b, lo1, hi1)] += 1.0 / 2000.0;
        }
        let mut oracle = 0.0;
        for i in 0..bins * bins {
            let m = (dense_p[i] + dense_q[i]) / 2.0;
            if dense_p[i] > 0.0 {
                oracle += 0.5 * dense_p[i] * (dense_p[i] / m).ln();
            }
            if dense_q[i] > 0.0 {
                oracle += 0.5 * dense_q[i] * (dense_q[i] / m).ln();
            }
        }
        assert!((js - oracle).abs() < 1e-12, "js {js} vs oracle {oracle}");
    }

    #[test]
    fn preconditions_enforced() {
        let p = uniform_pairs(10, 0.0, 6);
        assert!(js_estimate(&p, &[], 8).is_err());
        assert!(js_estimate(&p, &p, 1).is_err());
        let wide: Vec<(StateVector, StateVector)> = (0..5)
            .map(|i| {
                (
                    StateVector::new(vec![i as f64; 4]).unwrap(),
                    StateVector::new(vec![i as f64; 4]).unwrap(),
                )
            })
            .collect();
        assert!(js_estimate(&wide, &wide, 4).is_err());
    }

    #[test]
    fn ordering_indicator_extremes() {
        let down: Vec<(f64, f64)> = (0..100).map(|i| (1.0 + i as f64, 0.5)).collect();
        let up: Vec<(f64, f64)> = (0..100).map(|i| (0.5, 1.0 + i as f64)).collect();
        let flat: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, i as f64)).collect();
        assert_eq!(ordering_indicator_js(&down, &down).unwrap(), 0.0);
        let js = ordering_indicator_js(&down, &up).unwrap();
        assert!((js - std::f64::consts::LN_2).abs() < 1e-12);
        let js = ordering_indicator_js(&down, &flat).unwrap();
        assert!((js - std::f64::consts::LN_2).abs() < 1e-12);
    }
}
