//! Model configurations, accuracy evaluation and the ablation matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{MergeConfig, MergeOp};
use crate::model::{Domain, Intent};
use crate::selector::{
    decide_sentences, DecisionConfig, Mode, ThresholdScheme, DEFAULT_A, DEFAULT_T_CLEAR,
    DEFAULT_T_NOISE, DEFAULT_T_UNCLEAR,
};
use crate::simgen::{generate_dataset, DatasetKind, GenConfig, NoiseLevel, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Baseline,
    M1,
    M2,
    M3,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Baseline, Model::M1, Model::M2, Model::M3];

    pub fn id(self) -> &'static str {
        match self {
            Model::Baseline => "baseline",
            Model::M1 => "m1",
            Model::M2 => "m2",
            Model::M3 => "m3",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.id() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown model `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Thresholding {
    Fixed,
    Entropy,
}

impl Thresholding {
    pub const ALL: [Thresholding; 2] = [Thresholding::Fixed, Thresholding::Entropy];

    pub fn id(self) -> &'static str {
        match self {
            Thresholding::Fixed => "fixed",
            Thresholding::Entropy => "entropy",
        }
    }
}

impl fmt::Display for Thresholding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Thresholding {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Thresholding::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| format!("unknown thresholding `{s}`"))
    }
}

/// One cell of the model matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub model: Model,
    pub merge: MergeOp,
    pub thresholding: Thresholding,
    pub t_c: f64,
    pub t_u: f64,
    pub t_n: f64,
    pub a: f64,
    pub weights: BTreeMap<String, f64>,
}

impl ModelConfig {
    pub fn new(model: Model, merge: MergeOp, thresholding: Thresholding) -> Self {
        Self {
            model,
            merge,
            thresholding,
            t_c: DEFAULT_T_CLEAR,
            t_u: DEFAULT_T_UNCLEAR,
            t_n: DEFAULT_T_NOISE,
            a: DEFAULT_A,
            weights: BTreeMap::new(),
        }
    }

    pub fn baseline() -> Self {
        Self::new(Model::Baseline, MergeOp::Max, Thresholding::Fixed)
    }

    /// Merge operator actually used; the baseline always takes the maximum.
    pub fn effective_merge(&self) -> MergeOp {
        match self.model {
            Model::Baseline => MergeOp::Max,
            _ => self.merge,
        }
    }

    /// Thresholding label for reports; the baseline has none.
    pub fn thresholding_label(&self) -> &'static str {
        match self.model {
            Model::Baseline => "none",
            _ => self.thresholding.id(),
        }
    }

    pub fn merge_config(&self) -> MergeConfig {
        MergeConfig {
            operator: self.effective_merge(),
            modality_weights: self.weights.clone(),
            entropy_penalization: self.model == Model::M3,
            renormalize: true,
        }
    }

    pub fn scheme(&self) -> ThresholdScheme {
        match (self.model, self.thresholding) {
            (Model::Baseline, _) => ThresholdScheme::Argmax,
            (_, Thresholding::Fixed) => ThresholdScheme::Fixed {
                t_c: self.t_c,
                t_u: self.t_u,
                t_n: self.t_n,
            },
            (_, Thresholding::Entropy) => match ThresholdScheme::entropy() {
                ThresholdScheme::Entropy {
                    reference, seed, ..
                } => ThresholdScheme::Entropy {
                    t_n: self.t_n,
                    reference,
                    seed,
                },
                other => other,
            },
        }
    }

    pub fn decision_config(&self) -> DecisionConfig {
        let scheme = self.scheme();
        let mut cfg = match self.model {
            Model::M3 => DecisionConfig::full(scheme),
            _ => DecisionConfig::plain(scheme),
        };
        cfg.use_alpha = matches!(self.model, Model::M2 | Model::M3);
        cfg.a = self.a;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(Error::InvalidA(self.a));
        }
        for t in [self.t_c, self.t_u, self.t_n] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Record(format!("threshold {t} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Every configuration of the ablation matrix: the baseline plus
/// M1 to M3 under each merge operator and thresholding.
pub fn model_matrix() -> Vec<ModelConfig> {
    let mut out = vec![ModelConfig::baseline()];
    for model in [Model::M1, Model::M2, Model::M3] {
        for op in MergeOp::ALL {
            for th in Thresholding::ALL {
                out.push(ModelConfig::new(model, op, th));
            }
        }
    }
    out
}

/// Per-sample entry of the decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub index: usize,
    pub seed: u64,
    pub mode: Mode,
    pub intent: Option<Intent>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub merge_op: String,
    pub thresholding: String,
    pub dataset: String,
    pub noise: String,
    pub n: usize,
    pub accuracy: f64,
    pub n_clear: usize,
    pub n_unclear: usize,
    pub n_noise: usize,
}

pub const CSV_HEADER: &str =
    "model,merge_op,thresholding,dataset,noise,n,accuracy,n_clear,n_unclear,n_noise";

impl EvalRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:?},{},{},{}",
            self.model,
            self.merge_op,
            self.thresholding,
            self.dataset,
            self.noise,
            self.n,
            self.accuracy,
            self.n_clear,
            self.n_unclear,
            self.n_noise
        )
    }

    pub fn correct(&self) -> usize {
        (self.accuracy * self.n as f64).round() as usize
    }
}

pub fn to_csv(rows: &[EvalRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Clear, with the true action and every compulsory binding of the truth.
pub fn is_correct(mode: Mode, intent: Option<&Intent>, truth: &Intent, domain: &Domain) -> bool {
    let Some(intent) = intent else { return false };
    if mode != Mode::Clear || intent.action != truth.action {
        return false;
    }
    let Some(spec) = domain.action(&truth.action) else {
        return false;
    };
    spec.compulsory
        .iter()
        .all(|c| truth.bindings.contains_key(c) && intent.bindings.get(c) == truth.bindings.get(c))
}

pub fn decide_sample(
    sample: &Sample,
    index: usize,
    cfg: &ModelConfig,
    domain: &Domain,
) -> Result<Outcome> {
    let d = decide_sentences(
        &sample.sentences,
        &cfg.merge_config(),
        &sample.scene,
        domain,
        &cfg.decision_config(),
    )?;
    let correct = is_correct(d.mode, d.intent.as_ref(), &sample.truth, domain);
    Ok(Outcome {
        index,
        seed: sample.seed,
        mode: d.mode,
        intent: d.intent,
        correct,
    })
}

/// Decide every sample in parallel; outcomes come back in index order.
pub fn run(samples: &[Sample], cfg: &ModelConfig, domain: &Domain) -> Result<Vec<Outcome>> {
    cfg.validate()?;
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| decide_sample(s, i, cfg, domain))
        .collect()
}

pub fn summarize(outcomes: &[Outcome], cfg: &ModelConfig, dataset: &str, noise: &str) -> EvalRow {
    let count = |m: Mode| outcomes.iter().filter(|o| o.mode == m).count();
    let n = outcomes.len();
    let correct = outcomes.iter().filter(|o| o.correct).count();
    EvalRow {
        model: cfg.model.id().to_string(),
        merge_op: cfg.effective_merge().name().to_string(),
        thresholding: cfg.thresholding_label().to_string(),
        dataset: dataset.to_string(),
        noise: noise.to_string(),
        n,
        accuracy: if n == 0 {
            0.0
        } else {
            correct as f64 / n as f64
        },
        n_clear: count(Mode::Clear),
        n_unclear: count(Mode::Unclear),
        n_noise: count(Mode::Noise),
    }
}

/// Label of a sample set: its kind and noise if shared, `mixed` otherwise.
pub fn dataset_labels(samples: &[Sample]) -> (String, String) {
    let label = |ids: Vec<&'static str>| match ids.split_first() {
        Some((first, rest)) if rest.iter().all(|x| x == first) => first.to_string(),
        Some(_) => "mixed".to_string(),
        None => "none".to_string(),
    };
    (
        label(samples.iter().map(|s| s.kind.id()).collect()),
        label(samples.iter().map(|s| s.noise.id()).collect()),
    )
}

pub fn evaluate(
    samples: &[Sample],
    cfg: &ModelConfig,
    domain: &Domain,
) -> Result<(EvalRow, Vec<Outcome>)> {
    let outcomes = run(samples, cfg, domain)?;
    let (dataset, noise) = dataset_labels(samples);
    Ok((summarize(&outcomes, cfg, &dataset, &noise), outcomes))
}

/// Run `configs` over every dataset kind and noise level.
pub fn ablate(
    domain: &Domain,
    gen: &GenConfig,
    n: usize,
    seed: u64,
    configs: &[ModelConfig],
) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::new();
    for kind in DatasetKind::ALL {
        for noise in NoiseLevel::ALL {
            let samples = generate_dataset(kind, noise, n, seed, domain, gen)?;
            for cfg in configs {
                let outcomes = run(&samples, cfg, domain)?;
                rows.push(summarize(&outcomes, cfg, kind.id(), noise.id()));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::default_domain;
    use crate::simgen::generate_dataset;

    #[test]
    fn names_parse() {
        for m in Model::ALL {
            assert_eq!(m.id().parse::<Model>().unwrap(), m);
        }
        assert_eq!("M3".parse::<Model>().unwrap(), Model::M3);
        assert!("m4".parse::<Model>().is_err());
        assert_eq!(
            "entropy".parse::<Thresholding>().unwrap(),
            Thresholding::Entropy
        );
    }

    #[test]
    fn baseline_is_plain_max_argmax() {
        let b = ModelConfig::new(Model::Baseline, MergeOp::Add, Thresholding::Entropy);
        assert_eq!(b.effective_merge(), MergeOp::Max);
        assert!(!b.merge_config().entropy_penalization);
        let d = b.decision_config();
        assert_eq!(d.scheme, ThresholdScheme::Argmax);
        assert!(!d.use_alpha && !d.use_beta && !d.aligned_binding);
        assert_eq!(b.thresholding_label(), "none");
    }

    #[test]
    fn models_enable_penalties_cumulatively() {
        let flags = |m| {
            let c = ModelConfig::new(m, MergeOp::Add, Thresholding::Fixed);
            let d = c.decision_config();
            (
                d.use_alpha,
                d.use_beta,
                c.merge_config().entropy_penalization,
            )
        };
        assert_eq!(flags(Model::M1), (false, false, false));
        assert_eq!(flags(Model::M2), (true, false, false));
        assert_eq!(flags(Model::M3), (true, true, true));
    }

    #[test]
    fn matrix_has_each_cell_once() {
        let m = model_matrix();
        assert_eq!(m.len(), 19);
        let mut keys: Vec<(Model, MergeOp, Thresholding)> = m
            .iter()
            .map(|c| (c.model, c.merge, c.thresholding))
            .collect();
        keys.sort_by_key(|k| (k.0, k.1.name(), k.2));
        keys.dedup();
        assert_eq!(keys.len(), 19);
    }

    #[test]
    fn accuracy_matches_the_decision_log() {
        let d = default_domain();
        let samples = generate_dataset(
            DatasetKind::Aligned,
            NoiseLevel::N3,
            60,
            2,
            &d,
            &GenConfig::default(),
        )
        .unwrap();
        let cfg = ModelConfig::new(Model::M3, MergeOp::Add, Thresholding::Fixed);
        let (row, log) = evaluate(&samples, &cfg, &d).unwrap();
        assert_eq!(row.n, 60);
        assert_eq!(row.n_clear + row.n_unclear + row.n_noise, 60);
        assert_eq!(row.correct(), log.iter().filter(|o| o.correct).count());
        assert_eq!(
            row.accuracy,
            log.iter().filter(|o| o.correct).count() as f64 / 60.0
        );
        assert!(log.iter().enumerate().all(|(i, o)| o.index == i));
        assert_eq!(
            (row.dataset.as_str(), row.noise.as_str()),
            ("aligned", "n3")
        );
        let (again, _) = evaluate(&samples, &cfg, &d).unwrap();
        assert_eq!(row, again);
    }

    #[test]
    fn clean_aligned_data_is_recovered() {
        let d = default_domain();
        let samples = generate_dataset(
            DatasetKind::Aligned,
            NoiseLevel::N0,
            100,
            5,
            &d,
            &GenConfig::default(),
        )
        .unwrap();
        for m in [Model::M1, Model::M2, Model::M3] {
            let (row, _) = evaluate(
                &samples,
                &ModelConfig::new(m, MergeOp::Add, Thresholding::Fixed),
                &d,
            )
            .unwrap();
            assert!(row.accuracy >= 0.99, "{m}: {}", row.accuracy);
        }
    }

    #[test]
    fn correctness_needs_clear_mode_and_all_bindings() {
        let d = default_domain();
        let truth = Intent {
            action: "put".into(),
            bindings: [
                ("target_object".to_string(), "cup".to_string()),
                ("storage_object".to_string(), "bowl".to_string()),
            ]
            .into_iter()
            .collect(),
        };
        assert!(is_correct(Mode::Clear, Some(&truth), &truth, &d));
        assert!(!is_correct(Mode::Unclear, Some(&truth), &truth, &d));
        assert!(!is_correct(Mode::Clear, None, &truth, &d));
        let mut partial = truth.clone();
        partial.bindings.remove("storage_object");
        assert!(!is_correct(Mode::Clear, Some(&partial), &truth, &d));
        let mut wrong = truth.clone();
        wrong.action = "stack".into();
        assert!(!is_correct(Mode::Clear, Some(&wrong), &truth, &d));
    }

    #[test]
    fn csv_has_fixed_columns() {
        let row = EvalRow {
            model: "m3".into(),
            merge_op: "add".into(),
            thresholding: "entropy".into(),
            dataset: "aligned".into(),
            noise: "n0".into(),
            n: 4,
            accuracy: 0.75,
            n_clear: 3,
            n_unclear: 1,
            n_noise: 0,
        };
        assert_eq!(
            to_csv(&[row]),
            format!("{CSV_HEADER}\nm3,add,entropy,aligned,n0,4,0.75,3,1,0\n")
        );
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut c = ModelConfig::new(Model::M2, MergeOp::Add, Thresholding::Fixed);
        c.a = 0.0;
        assert_eq!(c.validate(), Err(Error::InvalidA(0.0)));
        c.a = 0.2;
        c.t_c = 1.5;
        assert!(c.validate().is_err());
    }
}
