//! Positionwise fusion of per-modality sentences into one multimodal sentence.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{Error, Result};
use crate::model::{normalize_values, LikelihoodWord, ModalitySentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeOp {
    Max,
    Mul,
    Add,
}

impl MergeOp {
    pub const ALL: [MergeOp; 3] = [MergeOp::Max, MergeOp::Mul, MergeOp::Add];

    /// Identity element of the operator.
    pub fn neutral(self) -> f64 {
        match self {
            MergeOp::Mul => 1.0,
            MergeOp::Add | MergeOp::Max => 0.0,
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            MergeOp::Max => a.max(b),
            MergeOp::Mul => a * b,
            MergeOp::Add => a + b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MergeOp::Max => "max",
            MergeOp::Mul => "mul",
            MergeOp::Add => "add",
        }
    }
}

impl fmt::Display for MergeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MergeOp {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "max" => Ok(MergeOp::Max),
            "mul" => Ok(MergeOp::Mul),
            "add" => Ok(MergeOp::Add),
            other => Err(format!("unknown merge operator `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeConfig {
    pub operator: MergeOp,
    /// Overrides the weight carried by a sentence when present.
    pub modality_weights: BTreeMap<String, f64>,
    pub entropy_penalization: bool,
    pub renormalize: bool,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self {
            operator: MergeOp::Add,
            modality_weights: BTreeMap::new(),
            entropy_penalization: false,
            renormalize: true,
        }
    }
}

impl MergeConfig {
    pub fn new(operator: MergeOp) -> Self {
        Self {
            operator,
            ..Self::default()
        }
    }

    pub fn with_penalization(mut self, on: bool) -> Self {
        self.entropy_penalization = on;
        self
    }

    pub fn weight_of(&self, sentence: &ModalitySentence) -> f64 {
        self.modality_weights
            .get(&sentence.modality_id)
            .copied()
            .unwrap_or(sentence.weight)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedSentence {
    pub words: Vec<LikelihoodWord>,
    /// Modalities that contributed to each word, in input order.
    pub sources: Vec<Vec<String>>,
}

impl MergedSentence {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// First non-empty word of the given category.
    pub fn word(&self, category: &str) -> Option<&LikelihoodWord> {
        self.words
            .iter()
            .find(|w| !w.empty && w.category.as_deref() == Some(category))
    }
}

/// Elementwise combination of weighted vectors.
pub fn mix(op: MergeOp, vectors: &[(f64, &[f64])]) -> Result<Vec<f64>> {
    let Some((w0, first)) = vectors.first() else {
        return Err(Error::EmptyInput);
    };
    let n = first.len();
    let mut out: Vec<f64> = first.iter().map(|x| w0 * x).collect();
    for (w, v) in &vectors[1..] {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: v.len(),
            });
        }
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o = op.apply(*o, w * x);
        }
    }
    Ok(out)
}

/// Reorder `word` to follow the option order of `reference`.
fn align_to(reference: &[String], word: &LikelihoodWord, position: usize) -> Result<Vec<f64>> {
    if word.options == reference {
        return Ok(word.values.clone());
    }
    if word.options.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            found: word.options.len(),
        });
    }
    reference
        .iter()
        .map(|opt| {
            word.index_of(opt)
                .map(|i| word.values[i])
                .ok_or_else(|| Error::OptionMismatch {
                    position,
                    option: opt.clone(),
                })
        })
        .collect()
}

pub fn merge_sentences(
    sentences: &[ModalitySentence],
    cfg: &MergeConfig,
) -> Result<MergedSentence> {
    let Some(first) = sentences.first() else {
        return Ok(MergedSentence {
            words: Vec::new(),
            sources: Vec::new(),
        });
    };
    let n = first.words.len();
    for s in sentences {
        if s.words.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: s.words.len(),
            });
        }
        let w = cfg.weight_of(s);
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidWeight(w));
        }
    }

    let mut words = Vec::with_capacity(n);
    let mut sources = Vec::with_capacity(n);
    for i in 0..n {
        let mut category: Option<&str> = None;
        for s in sentences.iter().filter(|s| !s.words[i].empty) {
            if let Some(c) = s.words[i].category.as_deref() {
                match category {
                    None => category = Some(c),
                    Some(prev) if prev != c => {
                        return Err(Error::CategoryConflict {
                            position: i,
                            first: prev.to_string(),
                            second: c.to_string(),
                        })
                    }
                    _ => {}
                }
            }
        }
        if category.is_none() {
            category = sentences
                .iter()
                .find_map(|s| s.words[i].category.as_deref());
        }

        let live: Vec<&ModalitySentence> = sentences
            .iter()
            .filter(|s| !s.words[i].empty && s.words[i].sum() > 0.0)
            .collect();
        let Some(lead) = live.first() else {
            words.push(LikelihoodWord::empty(category));
            sources.push(Vec::new());
            continue;
        };
        let options = lead.words[i].options.clone();

        let mut inputs = Vec::with_capacity(live.len());
        for s in &live {
            let mut v = align_to(&options, &s.words[i], i)?;
            if cfg.entropy_penalization {
                v = entropy::penalize(&v)?;
            }
            inputs.push((cfg.weight_of(s), v));
        }
        let refs: Vec<(f64, &[f64])> = inputs.iter().map(|(w, v)| (*w, v.as_slice())).collect();
        let mut values = mix(cfg.operator, &refs)?;
        if cfg.renormalize {
            if let Ok(v) = normalize_values(&values) {
                values = v;
            }
        }
        words.push(LikelihoodWord {
            category: category.map(str::to_string),
            options,
            values,
            empty: false,
        });
        sources.push(live.iter().map(|s| s.modality_id.clone()).collect());
    }
    Ok(MergedSentence { words, sources })
}
