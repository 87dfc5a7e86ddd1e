//! Confusion tables that shape simulated detector outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::phonetic::{levenshtein, phonetic_encode};
use crate::error::Result;

/// Symmetric table with unit diagonal, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTable {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Phonetic similarity `1 - lev(enc a, enc b) / max(|enc a|, |enc b|)`.
pub fn phonetic_similarity(a: &str, b: &str) -> Result<f64> {
    let ea = phonetic_encode(a)?;
    let eb = phonetic_encode(b)?;
    let longest = ea.chars().count().max(eb.chars().count());
    if longest == 0 {
        return Ok(1.0);
    }
    Ok((1.0 - levenshtein(&ea, &eb) as f64 / longest as f64).clamp(0.0, 1.0))
}

pub fn language_similarity(vocab: &[String]) -> Result<SimilarityTable> {
    let n = vocab.len();
    let mut values = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s = phonetic_similarity(&vocab[i], &vocab[j])?;
            values[i][j] = s;
            values[j][i] = s;
        }
    }
    Ok(SimilarityTable {
        labels: vocab.to_vec(),
        values,
    })
}

/// Synthetic gesture confusions: off-diagonal entries i.i.d. U(0.05, 0.4).
pub fn gesture_similarity(n: usize, seed: u64) -> SimilarityTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![vec![1.0; n]; n];
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    for (i, j) in pairs {
        let s = rng.random_range(0.05..0.4);
        values[i][j] = s;
        values[j][i] = s;
    }
    SimilarityTable {
        labels: (0..n).map(|i| format!("g{i}")).collect(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_table(t: &SimilarityTable) {
        for i in 0..t.len() {
            assert_eq!(t.values[i][i], 1.0);
            for j in 0..t.len() {
                assert_eq!(t.values[i][j], t.values[j][i]);
                assert!((0.0..=1.0).contains(&t.values[i][j]));
            }
        }
    }

    #[test]
    fn gesture_tables() {
        assert_eq!(gesture_similarity(1, 3).values, vec![vec![1.0]]);
        let t = gesture_similarity(9, 7);
        check_table(&t);
        assert_eq!(t, gesture_similarity(9, 7));
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    assert!((0.05..0.4).contains(&t.values[i][j]));
                }
            }
        }
        assert_ne!(t, gesture_similarity(9, 8));
    }

    #[test]
    fn language_table_formula() {
        let vocab: Vec<String> = ["pour", "put", "pick", "stack"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let t = language_similarity(&vocab).unwrap();
        check_table(&t);
        // Recompute "pour" vs "put" by hand: codes PR and PT differ in one place.
        let ea = phonetic_encode("pour").unwrap();
        let eb = phonetic_encode("put").unwrap();
        assert_eq!((ea.as_str(), eb.as_str()), ("PR", "PT"));
        assert_eq!(t.values[0][1], 1.0 - 1.0 / 2.0);
    }

    #[test]
    fn disjoint_codes_score_zero() {
        // Codes "MN" and "TK": equal length, no shared letters.
        assert_eq!(phonetic_similarity("moon", "take").unwrap(), 0.0);
        assert_eq!(phonetic_similarity("pick", "pik").unwrap(), 1.0);
    }
}
