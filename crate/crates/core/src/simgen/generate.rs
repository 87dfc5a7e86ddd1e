//! Simulated scenes, bimodal command samples and datasets.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::similarity::{gesture_similarity, language_similarity, SimilarityTable};
use crate::error::{Error, Result};
use crate::model::{
    normalize_values, ActionSpec, Domain, Intent, LikelihoodWord, Literal, ModalitySentence,
    ObjectInstance, ObjectKind, Scene, ACTION,
};
use crate::penalties::feature_alignment;

pub const LANGUAGE: &str = "language";
pub const GESTURE: &str = "gesture";
pub const MAX_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseLevel {
    N0,
    N1,
    N2,
    N3,
    N4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    None,
    /// Stand-in for noise measured on real detections.
    RealModel,
    Gaussian,
}

impl NoiseLevel {
    pub const ALL: [NoiseLevel; 5] = [
        NoiseLevel::N0,
        NoiseLevel::N1,
        NoiseLevel::N2,
        NoiseLevel::N3,
        NoiseLevel::N4,
    ];

    pub fn sigma(self) -> f64 {
        match self {
            NoiseLevel::N0 => 0.0,
            NoiseLevel::N1 | NoiseLevel::N2 => 0.2,
            NoiseLevel::N3 => 0.4,
            NoiseLevel::N4 => 0.6,
        }
    }

    pub fn source(self) -> NoiseSource {
        match self {
            NoiseLevel::N0 => NoiseSource::None,
            NoiseLevel::N1 => NoiseSource::RealModel,
            _ => NoiseSource::Gaussian,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            NoiseLevel::N0 => "n0",
            NoiseLevel::N1 => "n1",
            NoiseLevel::N2 => "n2",
            NoiseLevel::N3 => "n3",
            NoiseLevel::N4 => "n4",
        }
    }

    /// Tag mixed into the per-sample seed of the noise stream.
    fn stream(self) -> u64 {
        match self.source() {
            NoiseSource::RealModel => 0x6e31,
            _ => 0x6e6f,
        }
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for NoiseLevel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        NoiseLevel::ALL
            .into_iter()
            .find(|n| n.id() == s)
            .ok_or_else(|| format!("unknown noise level `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DatasetKind {
    Aligned,
    Arity,
    Prop,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 3] = [DatasetKind::Aligned, DatasetKind::Arity, DatasetKind::Prop];

    pub fn id(self) -> &'static str {
        match self {
            DatasetKind::Aligned => "aligned",
            DatasetKind::Arity => "arity",
            DatasetKind::Prop => "prop",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DatasetKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        DatasetKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| format!("unknown dataset kind `{s}`"))
    }
}

/// Knobs of the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// Share of the similarity row blended into the one-hot truth.
    pub lambda: f64,
    /// Value given to entries that end up exactly zero.
    pub floor: f64,
    pub n_objects: usize,
    pub n_storages: usize,
    /// Probability that a free binary feature is set.
    pub feature_density: f64,
    /// Noise multiplier applied to the language modality.
    pub language_noise: f64,
    /// Noise multiplier applied to the gesture modality.
    pub gesture_noise: f64,
    pub gesture_table_seed: u64,
    /// Residuals drawn with replacement instead of Gaussian noise at `n1`.
    pub empirical_n1: Option<Arc<Vec<f64>>>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            floor: 0.01,
            n_objects: 5,
            n_storages: 3,
            feature_density: 0.2,
            language_noise: 0.0,
            gesture_noise: 1.0,
            gesture_table_seed: 7,
            empirical_n1: None,
        }
    }
}

/// One modality deviates from the truth in this option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoy {
    pub modality: String,
    pub category: String,
    pub option: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub scene: Scene,
    pub truth: Intent,
    pub sentences: Vec<ModalitySentence>,
    pub kind: DatasetKind,
    pub noise: NoiseLevel,
    pub seed: u64,
    pub decoy: Option<Decoy>,
}

impl Sample {
    pub fn sentence(&self, modality: &str) -> Option<&ModalitySentence> {
        self.sentences.iter().find(|s| s.modality_id == modality)
    }

    pub fn language_sentence(&self) -> Option<&ModalitySentence> {
        self.sentence(LANGUAGE)
    }

    pub fn gesture_sentence(&self) -> Option<&ModalitySentence> {
        self.sentence(GESTURE)
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the sample at `index` in a dataset seeded with `seed`.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index)
}

/// Blend the truth with its similarity row, perturb, floor and normalize.
pub fn emit_values<R: Rng + ?Sized>(
    true_index: usize,
    sim: &SimilarityTable,
    lambda: f64,
    noise: &mut dyn FnMut(&mut R) -> f64,
    floor: f64,
    rng: &mut R,
) -> Vec<f64> {
    let row = sim.row(true_index);
    let mut v: Vec<f64> = row
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let one_hot = if i == true_index { 1.0 } else { 0.0 };
            (1.0 - lambda) * one_hot + lambda * s
        })
        .collect();
    for x in v.iter_mut() {
        *x = (*x + noise(rng)).max(0.0);
        if *x == 0.0 {
            *x += floor;
        }
    }
    normalize_values(&v).unwrap_or_else(|_| vec![1.0 / v.len() as f64; v.len()])
}

fn gaussian(sigma: f64) -> impl FnMut(&mut ChaCha8Rng) -> f64 {
    let normal = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    move |rng| normal.as_ref().map_or(0.0, |n| n.sample(rng))
}

/// Emit a simulated detection of `true_option` with the floor of the default configuration.
pub fn emit_word(
    true_option: &str,
    category: Option<&str>,
    vocab: &[String],
    sim: &SimilarityTable,
    lambda: f64,
    noise: NoiseLevel,
    rng: &mut ChaCha8Rng,
) -> Result<LikelihoodWord> {
    let i = vocab
        .iter()
        .position(|o| o == true_option)
        .ok_or_else(|| Error::Record(format!("option `{true_option}` not in vocabulary")))?;
    let mut g = gaussian(noise.sigma());
    let values = emit_values(i, sim, lambda, &mut g, GenConfig::default().floor, rng);
    LikelihoodWord::new(category, vocab.to_vec(), values)
}

fn feasible(reqs: &[Literal], obj: &ObjectInstance, features: &[String]) -> bool {
    feature_alignment(reqs, obj, features).is_ok_and(|a| a >= 1.0)
}

fn set_literal(obj: &mut ObjectInstance, lit: &Literal, value: bool, domain: &Domain) {
    if let Some(k) = domain.feature_index(&lit.feature) {
        obj.features[k] = if value { 1.0 } else { 0.0 };
    }
}

fn force(reqs: &[Literal], obj: &mut ObjectInstance, domain: &Domain) {
    for lit in reqs {
        set_literal(obj, lit, lit.positive, domain);
    }
}

/// Is `spec` satisfiable by some objects of the scene?
pub fn action_feasible(spec: &ActionSpec, scene: &Scene, domain: &Domain) -> bool {
    [ObjectKind::Object, ObjectKind::Storage]
        .into_iter()
        .all(|kind| {
            !spec.requires(kind.category())
                || scene
                    .of_kind(kind)
                    .any(|o| feasible(spec.requirements_for(kind), o, &domain.features))
        })
}

fn names(domain: &Domain, kind: ObjectKind, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut pool: Vec<String> = domain
        .vocab_for(kind.category())
        .map(<[String]>::to_vec)
        .unwrap_or_default();
    let prefix = match kind {
        ObjectKind::Object => "object",
        ObjectKind::Storage => "storage",
    };
    let mut k = 0;
    while pool.len() < n {
        let id = format!("{prefix}{k}");
        if !pool.contains(&id) {
            pool.push(id);
        }
        k += 1;
    }
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

fn random_scene(
    domain: &Domain,
    cfg: &GenConfig,
    n_obj: usize,
    n_store: usize,
    rng: &mut ChaCha8Rng,
) -> Scene {
    let mut objects = Vec::with_capacity(n_obj + n_store);
    for (kind, n) in [(ObjectKind::Object, n_obj), (ObjectKind::Storage, n_store)] {
        for id in names(domain, kind, n, rng) {
            let features = (0..domain.features.len())
                .map(|_| {
                    if rng.random_bool(cfg.feature_density) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            objects.push(ObjectInstance { id, kind, features });
        }
    }
    Scene { objects }
}

/// Random scene with binary features in which at least one action is feasible.
pub fn generate_scene(
    rng: &mut ChaCha8Rng,
    n_obj: usize,
    n_store: usize,
    domain: &Domain,
    cfg: &GenConfig,
) -> Result<Scene> {
    for _ in 0..MAX_RETRIES {
        let scene = random_scene(domain, cfg, n_obj, n_store, rng);
        if domain
            .actions
            .iter()
            .any(|a| action_feasible(a, &scene, domain))
        {
            return Ok(scene);
        }
    }
    Err(Error::InfeasibleDomain(MAX_RETRIES))
}

fn signature(spec: &ActionSpec) -> Vec<&str> {
    let mut s: Vec<&str> = spec.compulsory.iter().map(String::as_str).collect();
    s.sort_unstable();
    s
}

/// Gesture confusion table for one category. Tables do not depend on the
/// sample, only on the configured seed and the category position.
fn gesture_table(cfg: &GenConfig, category_index: usize, n: usize) -> SimilarityTable {
    gesture_similarity(
        n,
        mix64(cfg.gesture_table_seed ^ ((category_index as u64) << 32)),
    )
}

struct Draft {
    scene: Scene,
    truth: Intent,
    /// Option per (modality, category) when it differs from the truth.
    decoy: Option<Decoy>,
}

fn object_index(scene: &Scene, id: &str) -> usize {
    scene
        .objects
        .iter()
        .position(|o| o.id == id)
        .expect("bound object exists")
}

/// Make every other object of `kind` violate `reqs`, so the bound one is
/// the only fit.
fn make_unique(
    scene: &mut Scene,
    kind: ObjectKind,
    keep: &str,
    reqs: &[Literal],
    domain: &Domain,
    rng: &mut ChaCha8Rng,
) {
    if reqs.is_empty() {
        return;
    }
    for o in scene
        .objects
        .iter_mut()
        .filter(|o| o.kind == kind && o.id != keep)
    {
        if feasible(reqs, o, &domain.features) {
            let lit = reqs.choose(rng).expect("nonempty");
            set_literal(o, lit, !lit.positive, domain);
        }
    }
}

fn draft(
    kind: DatasetKind,
    domain: &Domain,
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Draft>> {
    let mut scene = random_scene(domain, cfg, cfg.n_objects, cfg.n_storages, rng);

    let eligible: Vec<usize> = match kind {
        DatasetKind::Prop => (0..domain.actions.len())
            .filter(|&j| {
                let s = &domain.actions[j];
                (s.requires(ObjectKind::Object.category())
                    || s.requires(ObjectKind::Storage.category()))
                    && domain
                        .actions
                        .iter()
                        .enumerate()
                        .any(|(i, o)| i != j && signature(o) == signature(s))
            })
            .collect(),
        _ => (0..domain.actions.len()).collect(),
    };
    let Some(&a) = eligible.choose(rng) else {
        return Err(Error::GenerationFailed(0));
    };
    let spec = &domain.actions[a];

    let mut truth = Intent {
        action: spec.id.clone(),
        ..Intent::default()
    };
    for c in &spec.compulsory {
        let kind = [ObjectKind::Object, ObjectKind::Storage]
            .into_iter()
            .find(|k| k.category() == c);
        let option = match kind {
            Some(k) => {
                let pool: Vec<usize> = (0..scene.objects.len())
                    .filter(|&i| scene.objects[i].kind == k)
                    .collect();
                let Some(&i) = pool.choose(rng) else {
                    return Ok(None);
                };
                force(spec.requirements_for(k), &mut scene.objects[i], domain);
                let id = scene.objects[i].id.clone();
                make_unique(&mut scene, k, &id, spec.requirements_for(k), domain, rng);
                id
            }
            None => match domain.vocab_for(c).and_then(|v| v.choose(rng)) {
                Some(o) => o.clone(),
                None => return Ok(None),
            },
        };
        truth.bindings.insert(c.clone(), option);
    }

    let modality = [LANGUAGE, GESTURE]
        .choose(rng)
        .expect("two modalities")
        .to_string();
    let decoy = match kind {
        DatasetKind::Aligned => None,
        DatasetKind::Arity => {
            let sig = signature(spec);
            let options: Vec<&ActionSpec> = domain
                .actions
                .iter()
                .filter(|o| signature(o) != sig)
                .collect();
            let Some(d) = options.choose(rng) else {
                return Ok(None);
            };
            Some(Decoy {
                modality,
                category: ACTION.to_string(),
                option: d.id.clone(),
            })
        }
        DatasetKind::Prop => {
            if rng.random_bool(0.5) {
                action_decoy(spec, &truth, &mut scene, domain, modality, rng)
            } else {
                object_decoy(spec, &truth, &mut scene, domain, modality, rng)
            }
        }
    };
    if kind != DatasetKind::Aligned && decoy.is_none() {
        return Ok(None);
    }

    // The truth must still be satisfiable after all adjustments.
    for k in [ObjectKind::Object, ObjectKind::Storage] {
        if let Some(id) = truth.bindings.get(k.category()) {
            let o = &scene.objects[object_index(&scene, id)];
            if !feasible(spec.requirements_for(k), o, &domain.features) {
                return Ok(None);
            }
        }
    }
    Ok(Some(Draft {
        scene,
        truth,
        decoy,
    }))
}

/// Replace the action in one modality by an action with the same signature
/// and break one of its requirements on the bound objects.
fn action_decoy(
    spec: &ActionSpec,
    truth: &Intent,
    scene: &mut Scene,
    domain: &Domain,
    modality: String,
    rng: &mut ChaCha8Rng,
) -> Option<Decoy> {
    let sig = signature(spec);
    let others: Vec<&ActionSpec> = domain
        .actions
        .iter()
        .filter(|o| o.id != spec.id && signature(o) == sig)
        .collect();
    let d = *others.choose(rng)?;

    // Ways to make the decoy infeasible on the bound objects without touching the truth.
    let mut moves: Vec<(ObjectKind, Option<Literal>)> = Vec::new();
    for k in [ObjectKind::Object, ObjectKind::Storage] {
        if !d.requires(k.category()) {
            continue;
        }
        let own = spec.requirements_for(k);
        for lit in d.requirements_for(k) {
            match own.iter().find(|l| l.feature == lit.feature) {
                None => moves.push((k, Some(lit.clone()))),
                Some(l) if l.positive != lit.positive => moves.push((k, None)),
                Some(_) => {}
            }
        }
    }
    let (k, lit) = moves.choose(rng)?.clone();
    if let Some(lit) = lit {
        let i = object_index(scene, &truth.bindings[k.category()]);
        set_literal(&mut scene.objects[i], &lit, !lit.positive, domain);
    }
    Some(Decoy {
        modality,
        category: ACTION.to_string(),
        option: d.id.clone(),
    })
}

/// Point one modality at another object of a bound kind that violates the
/// truth's requirements.
fn object_decoy(
    spec: &ActionSpec,
    truth: &Intent,
    scene: &mut Scene,
    domain: &Domain,
    modality: String,
    rng: &mut ChaCha8Rng,
) -> Option<Decoy> {
    let kinds: Vec<ObjectKind> = [ObjectKind::Object, ObjectKind::Storage]
        .into_iter()
        .filter(|k| spec.requires(k.category()) && !spec.requirements_for(*k).is_empty())
        .collect();
    let k = *kinds.choose(rng)?;
    let bound = &truth.bindings[k.category()];
    let pool: Vec<usize> = (0..scene.objects.len())
        .filter(|&i| scene.objects[i].kind == k && scene.objects[i].id != *bound)
        .collect();
    let i = *pool.choose(rng)?;
    let lit = spec.requirements_for(k).choose(rng)?.clone();
    set_literal(&mut scene.objects[i], &lit, !lit.positive, domain);
    Some(Decoy {
        modality,
        category: k.category().to_string(),
        option: scene.objects[i].id.clone(),
    })
}

/// Options of a category in the given scene, in vocabulary order.
pub fn options_for(category: &str, scene: &Scene, domain: &Domain) -> Vec<String> {
    if category == ACTION {
        return domain.action_ids();
    }
    for k in [ObjectKind::Object, ObjectKind::Storage] {
        if k.category() == category {
            return scene.of_kind(k).map(|o| o.id.clone()).collect();
        }
    }
    domain
        .vocab_for(category)
        .map(<[String]>::to_vec)
        .unwrap_or_default()
}

pub fn generate_sample(
    kind: DatasetKind,
    noise: NoiseLevel,
    domain: &Domain,
    cfg: &GenConfig,
    seed: u64,
) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ noise.stream()));
    if domain.actions.is_empty() {
        return Err(Error::GenerationFailed(0));
    }
    for _ in 0..MAX_RETRIES {
        let Some(d) = draft(kind, domain, cfg, &mut rng)? else {
            continue;
        };
        let sentences = emit_sentences(&d, noise, domain, cfg, &mut noise_rng)?;
        return Ok(Sample {
            scene: d.scene,
            truth: d.truth,
            sentences,
            kind,
            noise,
            seed,
            decoy: d.decoy,
        });
    }
    Err(Error::GenerationFailed(MAX_RETRIES))
}

fn emit_sentences(
    d: &Draft,
    noise: NoiseLevel,
    domain: &Domain,
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ModalitySentence>> {
    let spec = domain
        .action(&d.truth.action)
        .expect("truth action in domain");
    let layout: Vec<&str> = std::iter::once(ACTION)
        .chain(spec.compulsory.iter().map(String::as_str))
        .collect();

    let mut out = Vec::with_capacity(2);
    for (modality, scale) in [(LANGUAGE, cfg.language_noise), (GESTURE, cfg.gesture_noise)] {
        let sigma = noise.sigma() * scale;
        let mut draw: Box<dyn FnMut(&mut ChaCha8Rng) -> f64> =
            match (&cfg.empirical_n1, noise.source()) {
                (Some(res), NoiseSource::RealModel) if !res.is_empty() && scale > 0.0 => {
                    let res = Arc::clone(res);
                    Box::new(move |r: &mut ChaCha8Rng| scale * res[r.random_range(0..res.len())])
                }
                _ => Box::new(gaussian(sigma)),
            };
        let mut words = Vec::with_capacity(layout.len());
        for c in &layout {
            let options = options_for(c, &d.scene, domain);
            let truth_option = if *c == ACTION {
                d.truth.action.as_str()
            } else {
                d.truth.bindings[*c].as_str()
            };
            let option = match &d.decoy {
                Some(x) if x.modality == modality && x.category == *c => x.option.as_str(),
                _ => truth_option,
            };
            let table = match modality {
                LANGUAGE => language_similarity(&options)?,
                _ => {
                    let ci = domain.categories.iter().position(|x| x == c).unwrap_or(0);
                    gesture_table(cfg, ci, options.len())
                }
            };
            let i = options
                .iter()
                .position(|o| o == option)
                .expect("option in vocabulary");
            let values = emit_values(i, &table, cfg.lambda, &mut *draw, cfg.floor, rng);
            words.push(LikelihoodWord::new(Some(c), options, values)?);
        }
        out.push(ModalitySentence {
            modality_id: modality.to_string(),
            weight: 1.0,
            words,
        });
    }
    Ok(out)
}

pub fn generate_dataset(
    kind: DatasetKind,
    noise: NoiseLevel,
    n: usize,
    seed: u64,
    domain: &Domain,
    cfg: &GenConfig,
) -> Result<Vec<Sample>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| generate_sample(kind, noise, domain, cfg, sample_seed(seed, i)))
        .collect()
}

/// Arity samples followed by prop samples.
pub fn generate_unaligned(
    noise: NoiseLevel,
    n: usize,
    seed: u64,
    domain: &Domain,
    cfg: &GenConfig,
) -> Result<Vec<Sample>> {
    let mut out = generate_dataset(DatasetKind::Arity, noise, n, seed, domain, cfg)?;
    out.extend(generate_dataset(
        DatasetKind::Prop,
        noise,
        n,
        seed,
        domain,
        cfg,
    )?);
    Ok(out)
}
