//! Action likelihoods, action and parameter selection, interaction-mode
//! classification, and the general likelihood tensor.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::entropy::{self, ReferenceKind, DEFAULT_REFERENCE_SEED};
use crate::error::{Error, Result};
use crate::fusion::{merge_sentences, MergeConfig, MergedSentence};
use crate::model::{
    argmax, normalize_values, ActionSpec, Domain, Intent, LikelihoodWord, ModalitySentence,
    ObjectKind, Scene, ACTION,
};
use crate::penalties::{self, category_presence, category_presence_general, GeneralWord};

pub const DEFAULT_T_CLEAR: f64 = 0.25;
pub const DEFAULT_T_UNCLEAR: f64 = 0.11;
pub const DEFAULT_T_NOISE: f64 = 0.05;
pub const DEFAULT_A: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Clear,
    Unclear,
    Noise,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Clear => "clear",
            Mode::Unclear => "unclear",
            Mode::Noise => "noise",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdScheme {
    Fixed {
        t_c: f64,
        t_u: f64,
        t_n: f64,
    },
    Entropy {
        t_n: f64,
        reference: ReferenceKind,
        seed: u64,
    },
    /// Plain argmax: the best action is always clear and any positive
    /// option is a candidate.
    Argmax,
}

impl ThresholdScheme {
    pub fn fixed() -> Self {
        ThresholdScheme::Fixed {
            t_c: DEFAULT_T_CLEAR,
            t_u: DEFAULT_T_UNCLEAR,
            t_n: DEFAULT_T_NOISE,
        }
    }

    pub fn entropy() -> Self {
        ThresholdScheme::Entropy {
            t_n: DEFAULT_T_NOISE,
            reference: ReferenceKind::UniformNoise,
            seed: DEFAULT_REFERENCE_SEED,
        }
    }

    pub fn noise_gate(&self) -> f64 {
        match *self {
            ThresholdScheme::Fixed { t_n, .. } | ThresholdScheme::Entropy { t_n, .. } => t_n,
            ThresholdScheme::Argmax => 0.0,
        }
    }

    /// Probability an option of the normalized vector `v` must exceed to be clear.
    pub fn t_clear(&self, v: &[f64]) -> f64 {
        match *self {
            ThresholdScheme::Fixed { t_c, .. } => t_c,
            ThresholdScheme::Entropy {
                reference, seed, ..
            } => {
                let h = match reference {
                    ReferenceKind::SelfEntropy => v
                        .iter()
                        .filter(|x| **x > 0.0)
                        .map(|x| -x * x.ln())
                        .sum::<f64>(),
                    ReferenceKind::UniformNoise => entropy::uniform_noise_entropy(v.len(), seed),
                };
                (-h).exp()
            }
            ThresholdScheme::Argmax => 0.0,
        }
    }
}

/// How the context penalties and parameter binding are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig {
    pub scheme: ThresholdScheme,
    pub a: f64,
    pub use_alpha: bool,
    pub use_beta: bool,
    /// Bind object parameters among the candidates that best fit the
    /// chosen action's feature requirements.
    pub aligned_binding: bool,
}

impl DecisionConfig {
    pub fn full(scheme: ThresholdScheme) -> Self {
        Self {
            scheme,
            a: DEFAULT_A,
            use_alpha: true,
            use_beta: true,
            aligned_binding: true,
        }
    }

    pub fn plain(scheme: ThresholdScheme) -> Self {
        Self {
            scheme,
            a: DEFAULT_A,
            use_alpha: false,
            use_beta: false,
            aligned_binding: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDiagnostics {
    pub raw: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionLikelihoods {
    pub actions: Vec<String>,
    pub values: Vec<f64>,
    pub diagnostics: Vec<ActionDiagnostics>,
}

fn action_word_values(word: Option<&LikelihoodWord>, actions: &[ActionSpec]) -> Vec<f64> {
    let mut raw = vec![0.0; actions.len()];
    let Some(w) = word else { return raw };
    let Ok(v) = normalize_values(&w.values) else {
        return raw;
    };
    for (j, a) in actions.iter().enumerate() {
        if let Some(i) = w.index_of(&a.id) {
            raw[j] = v[i];
        }
    }
    raw
}

/// Unnormalized word values in domain action order, as the merge sees them.
fn action_word_raw(word: &LikelihoodWord, actions: &[ActionSpec]) -> Vec<f64> {
    actions
        .iter()
        .map(|a| word.index_of(&a.id).map_or(0.0, |i| word.values[i]))
        .collect()
}

fn penalties_for(
    merged: &MergedSentence,
    scene: &Scene,
    domain: &Domain,
    cfg: &DecisionConfig,
    presence: &penalties::CategoryPresence,
    spec: &ActionSpec,
) -> Result<(f64, f64)> {
    let alpha = if cfg.use_alpha {
        penalties::alpha_penalty(spec, presence, cfg.a)?
    } else {
        1.0
    };
    let beta = if cfg.use_beta {
        penalties::beta_penalty_with(spec, merged, scene, &domain.features, |v| {
            cfg.scheme.t_clear(v)
        })?
    } else {
        1.0
    };
    Ok((alpha, beta))
}

pub fn action_likelihoods(
    merged: &MergedSentence,
    scene: &Scene,
    domain: &Domain,
    cfg: &DecisionConfig,
) -> Result<ActionLikelihoods> {
    let raw = action_word_values(merged.word(ACTION), &domain.actions);
    let presence = category_presence(merged, cfg.scheme.noise_gate());
    let mut values = Vec::with_capacity(raw.len());
    let mut diagnostics = Vec::with_capacity(raw.len());
    for (spec, r) in domain.actions.iter().zip(raw) {
        let (alpha, beta) = penalties_for(merged, scene, domain, cfg, &presence, spec)?;
        values.push(r * alpha * beta);
        diagnostics.push(ActionDiagnostics {
            raw: r,
            alpha,
            beta,
        });
    }
    Ok(ActionLikelihoods {
        actions: domain.action_ids(),
        values,
        diagnostics,
    })
}

/// Lowest-index argmax of the action likelihoods.
pub fn select_action(l: &[f64]) -> Result<usize> {
    if !l.iter().any(|v| *v > 0.0) {
        return Err(Error::AllZero);
    }
    argmax(l).ok_or(Error::AllZero)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bindings {
    pub bound: BTreeMap<String, String>,
    pub unbound: Vec<String>,
}

/// Bind every compulsory category of `spec` to its best option above the
/// clear threshold. With `context`, object categories are restricted to
/// the candidates that best satisfy the action's requirements.
pub fn select_parameters(
    spec: &ActionSpec,
    merged: &MergedSentence,
    scheme: &ThresholdScheme,
    context: Option<(&Scene, &[String])>,
) -> Result<Bindings> {
    let mut out = Bindings::default();
    for c in &spec.compulsory {
        let Some(word) = merged.word(c) else {
            out.unbound.push(c.clone());
            continue;
        };
        let Ok(v) = normalize_values(&word.values) else {
            out.unbound.push(c.clone());
            continue;
        };
        let t = scheme.t_clear(&v);
        let mut eligible: Vec<usize> = (0..v.len()).filter(|&i| v[i] > t).collect();

        let kind = [ObjectKind::Object, ObjectKind::Storage]
            .into_iter()
            .find(|k| k.category() == c);
        if let (Some((scene, features)), Some(kind)) = (context, kind) {
            let mut scored = Vec::with_capacity(eligible.len());
            for (i, obj) in penalties::candidates(word, scene, kind, t) {
                scored.push((
                    i,
                    penalties::feature_alignment(spec.requirements_for(kind), obj, features)?,
                ));
            }
            let best = scored.iter().map(|(_, s)| *s).fold(0.0, f64::max);
            if best > 0.0 {
                eligible = scored
                    .iter()
                    .filter(|(_, s)| *s == best)
                    .map(|(i, _)| *i)
                    .collect();
            }
        }

        let mut pick: Option<usize> = None;
        for i in eligible {
            if pick.is_none_or(|p| v[i] > v[p]) {
                pick = Some(i);
            }
        }
        match pick {
            Some(i) => {
                out.bound.insert(c.clone(), word.options[i].clone());
            }
            None => out.unbound.push(c.clone()),
        }
    }
    Ok(out)
}

pub fn classify_actions(l: &[f64], scheme: &ThresholdScheme) -> Vec<Mode> {
    let Ok(v) = normalize_values(l) else {
        return vec![Mode::Noise; l.len()];
    };
    match *scheme {
        ThresholdScheme::Fixed { t_c, t_u, .. } => v
            .iter()
            .map(|x| {
                if *x > t_c {
                    Mode::Clear
                } else if *x > t_u {
                    Mode::Unclear
                } else {
                    Mode::Noise
                }
            })
            .collect(),
        ThresholdScheme::Entropy { t_n, .. } => {
            let t = scheme.t_clear(&v);
            v.iter()
                .map(|x| {
                    if *x <= t_n {
                        Mode::Noise
                    } else if *x > t {
                        Mode::Clear
                    } else {
                        Mode::Unclear
                    }
                })
                .collect()
        }
        ThresholdScheme::Argmax => {
            let best = argmax(&v);
            (0..v.len())
                .map(|i| {
                    if Some(i) == best {
                        Mode::Clear
                    } else {
                        Mode::Noise
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub mode: Mode,
    pub intent: Option<Intent>,
    pub per_action_modes: Vec<(String, Mode)>,
    pub prompt: Option<String>,
    pub likelihoods: ActionLikelihoods,
}

pub fn decide(
    merged: &MergedSentence,
    scene: &Scene,
    domain: &Domain,
    cfg: &DecisionConfig,
) -> Result<Decision> {
    let likelihoods = action_likelihoods(merged, scene, domain, cfg)?;
    let modes = classify_actions(&likelihoods.values, &cfg.scheme);
    let per_action_modes: Vec<(String, Mode)> = domain
        .action_ids()
        .into_iter()
        .zip(modes.iter().copied())
        .collect();
    let clear: Vec<usize> = (0..modes.len())
        .filter(|&i| modes[i] == Mode::Clear)
        .collect();

    let (mode, intent, prompt) = match clear.as_slice() {
        [j] => {
            let spec = &domain.actions[*j];
            let context = cfg
                .aligned_binding
                .then_some((scene, domain.features.as_slice()));
            let b = select_parameters(spec, merged, &cfg.scheme, context)?;
            if b.unbound.is_empty() {
                let intent = Intent {
                    action: spec.id.clone(),
                    bindings: b.bound,
                };
                (Mode::Clear, Some(intent), None)
            } else {
                let prompt = format!(
                    "Which {} should I use to {}?",
                    b.unbound.join(" and "),
                    spec.id
                );
                (Mode::Unclear, None, Some(prompt))
            }
        }
        [] if modes.contains(&Mode::Unclear) => (
            Mode::Unclear,
            None,
            Some("Could you clarify the command?".to_string()),
        ),
        [] => (
            Mode::Noise,
            None,
            Some("Please repeat the command.".to_string()),
        ),
        many => {
            let names: Vec<&str> = many
                .iter()
                .map(|&i| domain.actions[i].id.as_str())
                .collect();
            (
                Mode::Unclear,
                None,
                Some(format!("Did you mean {}?", names.join(" or "))),
            )
        }
    };
    Ok(Decision {
        mode,
        intent,
        per_action_modes,
        prompt,
        likelihoods,
    })
}

/// Merge and decide in one step.
pub fn decide_sentences(
    sentences: &[ModalitySentence],
    merge: &MergeConfig,
    scene: &Scene,
    domain: &Domain,
    cfg: &DecisionConfig,
) -> Result<Decision> {
    let merged = merge_sentences(sentences, merge)?;
    decide(&merged, scene, domain, cfg)
}

/// A sentence whose words carry category likelihoods.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSentence {
    pub modality_id: String,
    pub weight: f64,
    pub words: Vec<GeneralWord>,
}

impl GeneralSentence {
    /// Lift a known-category sentence: each word's own category gets likelihood 1.
    pub fn from_known(s: &ModalitySentence) -> Self {
        let words = s
            .words
            .iter()
            .map(|w| {
                let mut cl = BTreeMap::new();
                if let Some(c) = &w.category {
                    cl.insert(c.clone(), 1.0);
                }
                GeneralWord {
                    category_likelihoods: cl,
                    word: w.clone(),
                }
            })
            .collect();
        Self {
            modality_id: s.modality_id.clone(),
            weight: s.weight,
            words,
        }
    }

    /// Known-category view using each word's most likely category.
    fn to_known(&self) -> ModalitySentence {
        let words = self
            .words
            .iter()
            .map(|g| {
                let mut w = g.word.clone();
                w.category = g
                    .category_likelihoods
                    .iter()
                    .fold(None::<(&String, f64)>, |best, (c, p)| match best {
                        Some((_, bp)) if bp >= *p => best,
                        _ => Some((c, *p)),
                    })
                    .map(|(c, _)| c.clone());
                w
            })
            .collect();
        ModalitySentence {
            modality_id: self.modality_id.clone(),
            weight: self.weight,
            words,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorResult {
    /// Best entry per action, with its index tuple (0 = modality skipped).
    pub per_action: Vec<(f64, Vec<usize>)>,
    pub best: Option<(usize, Vec<usize>)>,
}

fn action_likelihood(word: &GeneralWord) -> f64 {
    if word.word.empty {
        0.0
    } else {
        word.category_likelihoods
            .get(ACTION)
            .copied()
            .unwrap_or(0.0)
    }
}

/// Likelihood tensor over (action, word index per modality). Index 0 means
/// the modality does not express the action; it contributes the operator's
/// neutral element and is weighted by the probability that no word of that
/// modality carries the action.
pub fn general_tensor_likelihood(
    sentences: &[GeneralSentence],
    scene: &Scene,
    domain: &Domain,
    merge: &MergeConfig,
    cfg: &DecisionConfig,
) -> Result<TensorResult> {
    let op = merge.operator;
    let known: Vec<ModalitySentence> = sentences.iter().map(GeneralSentence::to_known).collect();
    let merged = merge_sentences(&known, merge)?;
    let all_words: Vec<GeneralWord> = sentences
        .iter()
        .flat_map(|s| s.words.iter().cloned())
        .collect();
    let presence = category_presence_general(&all_words, cfg.scheme.noise_gate());

    // Per modality: weight, absence likelihood and per-word (category likelihood, action values).
    struct Slot {
        weight: f64,
        absent: f64,
        words: Vec<(f64, Vec<f64>)>,
    }
    let mut slots = Vec::with_capacity(sentences.len());
    for s in sentences {
        let weight = merge
            .modality_weights
            .get(&s.modality_id)
            .copied()
            .unwrap_or(s.weight);
        let mut absent = 1.0;
        let mut words = Vec::with_capacity(s.words.len());
        for g in &s.words {
            let p = action_likelihood(g);
            absent *= 1.0 - p;
            let mut values = if p > 0.0 {
                action_word_raw(&g.word, &domain.actions)
            } else {
                vec![0.0; domain.actions.len()]
            };
            if merge.entropy_penalization && values.iter().any(|x| *x > 0.0) {
                values = entropy::penalize(&values).unwrap_or(values);
            }
            words.push((p, values));
        }
        slots.push(Slot {
            weight,
            absent,
            words,
        });
    }

    let mut per_action = Vec::with_capacity(domain.actions.len());
    for (j, spec) in domain.actions.iter().enumerate() {
        let (alpha, beta) = penalties_for(&merged, scene, domain, cfg, &presence, spec)?;
        let mut best = (0.0, vec![0; slots.len()]);
        let mut idx = vec![0usize; slots.len()];
        loop {
            let mut acc: Option<f64> = None;
            let mut gate = 1.0;
            for (m, slot) in slots.iter().enumerate() {
                if idx[m] == 0 {
                    gate *= slot.absent;
                    continue;
                }
                let (p, values) = &slot.words[idx[m] - 1];
                let term = slot.weight * p * values[j];
                acc = Some(match acc {
                    None => op.apply(op.neutral(), term),
                    Some(a) => op.apply(a, term),
                });
            }
            let value = acc.map_or(0.0, |a| a * gate * alpha * beta);
            if value > best.0 {
                best = (value, idx.clone());
            }
            if !advance(
                &mut idx,
                &slots.iter().map(|s| s.words.len()).collect::<Vec<_>>(),
            ) {
                break;
            }
        }
        per_action.push(best);
    }

    let values: Vec<f64> = per_action.iter().map(|(v, _)| *v).collect();
    let best = select_action(&values)
        .ok()
        .map(|j| (j, per_action[j].1.clone()));
    Ok(TensorResult { per_action, best })
}

fn advance(idx: &mut [usize], lens: &[usize]) -> bool {
    for m in (0..idx.len()).rev() {
        if idx[m] < lens[m] {
            idx[m] += 1;
            return true;
        }
        idx[m] = 0;
    }
    false
}
