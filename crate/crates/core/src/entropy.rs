//! Shannon entropy, diagonal cross-entropy (DCH), confidence weights and
//! the reference entropy used by the entropy thresholding scheme.
//!
//! All quantities are in nats.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp applied to likelihoods before taking logs.
pub const DCH_EPS: f64 = 1e-9;
/// Lower clamp on DCH values when turning them into weights.
pub const WEIGHT_EPS: f64 = 1e-3;
/// Number of random vectors averaged by the uniform-noise reference.
pub const REFERENCE_SAMPLES: usize = 1000;
pub const DEFAULT_REFERENCE_SEED: u64 = 42;

const NORMALIZED_TOL: f64 = 1e-6;

fn check_normalized(v: &[f64]) -> Result<()> {
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > NORMALIZED_TOL {
        return Err(Error::NotNormalized(s));
    }
    Ok(())
}

fn entropy_unchecked(v: &[f64]) -> f64 {
    -v.iter()
        .filter(|x| **x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
}

pub fn shannon_entropy(v: &[f64]) -> Result<f64> {
    check_normalized(v)?;
    Ok(entropy_unchecked(v).max(0.0))
}

/// Per-element cross-entropy against each one-hot vector: `h(j) = -ln v(j)`,
/// with `v(j)` clamped to `[DCH_EPS, 1]`.
pub fn dch(v: &[f64]) -> Result<Vec<f64>> {
    check_normalized(v)?;
    Ok(v.iter().map(|x| -x.clamp(DCH_EPS, 1.0).ln()).collect())
}

/// Confidence weights `1 / max(h(j), WEIGHT_EPS)`. The input is normalized
/// first, so raw detector outputs are accepted.
pub fn entropy_weights(values: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = values.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::AllZeroVector);
    }
    let v: Vec<f64> = values.iter().map(|x| x / total).collect();
    Ok(dch(&v)?
        .into_iter()
        .map(|h| 1.0 / h.max(WEIGHT_EPS))
        .collect())
}

/// `entropy_weights(v) ⊙ v`, renormalized.
pub fn penalize(values: &[f64]) -> Result<Vec<f64>> {
    let w = entropy_weights(values)?;
    let raw: Vec<f64> = w.iter().zip(values).map(|(a, b)| a * b).collect();
    crate::model::normalize_values(&raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    SelfEntropy,
    UniformNoise,
}

type Cache = Mutex<HashMap<(usize, u64), Arc<OnceLock<f64>>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Mean Shannon entropy of `REFERENCE_SAMPLES` vectors of length `len`
/// whose entries are i.i.d. U(0,1) before normalization. Entries are drawn
/// row by row from a ChaCha8 stream seeded with `seed`.
pub fn uniform_noise_entropy(len: usize, seed: u64) -> f64 {
    if len <= 1 {
        return 0.0;
    }
    let cell = {
        let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
        map.entry((len, seed)).or_default().clone()
    };
    *cell.get_or_init(|| monte_carlo(len, seed))
}

fn monte_carlo(len: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row = vec![0.0; len];
    let mut total = 0.0;
    for _ in 0..REFERENCE_SAMPLES {
        for x in row.iter_mut() {
            *x = rng.random::<f64>();
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            for x in row.iter_mut() {
                *x /= s;
            }
            total += entropy_unchecked(&row);
        }
    }
    total / REFERENCE_SAMPLES as f64
}

pub fn reference_entropy(kind: ReferenceKind, v: &[f64], seed: u64) -> Result<f64> {
    match kind {
        ReferenceKind::SelfEntropy => shannon_entropy(v),
        ReferenceKind::UniformNoise => {
            check_normalized(v)?;
            Ok(uniform_noise_entropy(v.len(), seed))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(
            shannon_entropy(&[0.5, 0.5]).unwrap(),
            2f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(shannon_entropy(&[1.0, 0.0]).unwrap(), 0.0);
        let oracle = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        let h = shannon_entropy(&[0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(h, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(h, 0.5623, epsilon = 1e-4);
    }

    #[test]
    fn entropy_rejects_unnormalized() {
        assert!(matches!(
            shannon_entropy(&[0.5, 0.6]),
            Err(Error::NotNormalized(_))
        ));
        assert!(dch(&[0.2, 0.2]).is_err());
    }

    #[test]
    fn dch_examples() {
        let h = dch(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(h[0], std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(h[1], std::f64::consts::LN_2, epsilon = 1e-12);
        let h = dch(&[1.0, 0.0]).unwrap();
        assert_eq!(h[0], 0.0);
        assert_abs_diff_eq!(h[1], -(1e-9f64).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(h[1], 20.723, epsilon = 1e-3);
        let h = dch(&[0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(h[0], 0.1054, epsilon = 1e-4);
        assert_abs_diff_eq!(h[1], std::f64::consts::LN_10, epsilon = 1e-12);
    }

    #[test]
    fn weights_example() {
        let w = entropy_weights(&[0.8, 0.2]).unwrap();
        assert_abs_diff_eq!(w[0], 1.0 / -(0.8f64).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(w[0], 4.4814, epsilon = 1e-4);
        assert_abs_diff_eq!(w[1], 0.6213, epsilon = 1e-4);
        let p = penalize(&[0.8, 0.2]).unwrap();
        assert_abs_diff_eq!(p[0], 0.9665, epsilon = 1e-4);
        assert_abs_diff_eq!(p[1], 0.0335, epsilon = 1e-4);
    }

    #[test]
    fn weights_edge_cases() {
        let p = penalize(&[1.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        let p = penalize(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert!(entropy_weights(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn reference_examples() {
        assert_eq!(
            reference_entropy(ReferenceKind::UniformNoise, &[1.0], 42).unwrap(),
            0.0
        );
        let h = reference_entropy(ReferenceKind::SelfEntropy, &[0.5, 0.5], 42).unwrap();
        assert_abs_diff_eq!(h, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn reference_is_cached_and_stable() {
        let a = uniform_noise_entropy(6, 42);
        let b = uniform_noise_entropy(6, 42);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), monte_carlo(6, 42).to_bits());
    }

    #[test]
    fn reference_concurrent_readers_agree() {
        let values: Vec<f64> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..8)
                .map(|_| s.spawn(|| uniform_noise_entropy(13, 5)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(values.windows(2).all(|w| w[0] == w[1]));
    }
}
