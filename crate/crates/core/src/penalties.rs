//! Context penalties: α for signature mismatch and β for object features
//! that do not fit the action's requirements.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fusion::MergedSentence;
use crate::model::{
    normalize_values, ActionSpec, LikelihoodWord, Literal, ObjectInstance, ObjectKind, Scene,
    ACTION,
};

/// Presence likelihood per category. Categories that never appear read as 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CategoryPresence(pub BTreeMap<String, f64>);

impl CategoryPresence {
    pub fn get(&self, category: &str) -> f64 {
        self.0.get(category).copied().unwrap_or(0.0)
    }

    fn raise(&mut self, category: &str, p: f64) {
        let e = self.0.entry(category.to_string()).or_insert(0.0);
        *e = e.max(p);
    }
}

/// A word whose category is itself uncertain.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralWord {
    pub category_likelihoods: BTreeMap<String, f64>,
    pub word: LikelihoodWord,
}

fn passes_noise_gate(word: &LikelihoodWord, t_n: f64) -> bool {
    if word.empty {
        return false;
    }
    match normalize_values(&word.values) {
        Ok(v) => v.iter().cloned().fold(0.0, f64::max) > t_n,
        Err(_) => false,
    }
}

/// Known-category presence: 1 for every category carried by a non-empty
/// word whose normalized maximum exceeds `t_n`, else 0.
pub fn category_presence(merged: &MergedSentence, t_n: f64) -> CategoryPresence {
    let mut p = CategoryPresence::default();
    for w in &merged.words {
        let Some(c) = w.category.as_deref() else {
            continue;
        };
        p.raise(c, if passes_noise_gate(w, t_n) { 1.0 } else { 0.0 });
    }
    p
}

/// Presence when categories are uncertain: the largest category likelihood
/// among words that pass the noise gate.
pub fn category_presence_general(words: &[GeneralWord], t_n: f64) -> CategoryPresence {
    let mut p = CategoryPresence::default();
    for w in words {
        let gate = passes_noise_gate(&w.word, t_n);
        for (c, l) in &w.category_likelihoods {
            p.raise(c, if gate { l.clamp(0.0, 1.0) } else { 0.0 });
        }
    }
    p
}

/// Number of signature violations, possibly fractional in general mode.
pub fn signature_loss(spec: &ActionSpec, presence: &CategoryPresence) -> f64 {
    let missing: f64 = spec.compulsory.iter().map(|c| 1.0 - presence.get(c)).sum();
    let extraneous: f64 = presence
        .0
        .iter()
        .filter(|(c, _)| c.as_str() != ACTION && !spec.accepts(c))
        .map(|(_, p)| *p)
        .sum();
    missing + extraneous
}

pub fn alpha_penalty(spec: &ActionSpec, presence: &CategoryPresence, a: f64) -> Result<f64> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidA(a));
    }
    Ok(a.powf(signature_loss(spec, presence)))
}

/// `1 - max |f_k - desired_k|` over the required literals.
pub fn feature_alignment(
    requirements: &[Literal],
    obj: &ObjectInstance,
    features: &[String],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for lit in requirements {
        let k = features
            .iter()
            .position(|f| *f == lit.feature)
            .ok_or_else(|| Error::UnknownFeature(lit.feature.clone()))?;
        let have = obj.features.get(k).copied().unwrap_or(0.0);
        worst = worst.max((have - lit.desired()).abs());
    }
    Ok(1.0 - worst)
}

/// Scene objects of `kind` named by options of `word` whose normalized
/// likelihood exceeds `t_clear`, paired with their option index.
pub fn candidates<'a>(
    word: &LikelihoodWord,
    scene: &'a Scene,
    kind: ObjectKind,
    t_clear: f64,
) -> Vec<(usize, &'a ObjectInstance)> {
    let Ok(values) = normalize_values(&word.values) else {
        return Vec::new();
    };
    word.options
        .iter()
        .zip(values)
        .enumerate()
        .filter(|(_, (_, v))| *v > t_clear)
        .filter_map(|(i, (id, _))| {
            scene
                .objects
                .iter()
                .find(|o| o.kind == kind && o.id == *id)
                .map(|o| (i, o))
        })
        .collect()
}

/// β with a per-word threshold, for schemes whose clear threshold depends
/// on the word being tested.
pub fn beta_penalty_with<F>(
    spec: &ActionSpec,
    merged: &MergedSentence,
    scene: &Scene,
    features: &[String],
    t_clear: F,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut beta = 1.0;
    for kind in [ObjectKind::Object, ObjectKind::Storage] {
        if !spec.requires(kind.category()) {
            continue;
        }
        let Some(word) = merged.word(kind.category()) else {
            return Ok(0.0);
        };
        let Ok(values) = normalize_values(&word.values) else {
            return Ok(0.0);
        };
        let t = t_clear(&values);
        let mut best: f64 = 0.0;
        for (_, obj) in candidates(word, scene, kind, t) {
            best = best.max(feature_alignment(
                spec.requirements_for(kind),
                obj,
                features,
            )?);
        }
        beta *= best;
    }
    Ok(beta)
}

pub fn beta_penalty(
    spec: &ActionSpec,
    merged: &MergedSentence,
    scene: &Scene,
    features: &[String],
    t_clear: f64,
) -> Result<f64> {
    beta_penalty_with(spec, merged, scene, features, |_| t_clear)
}
