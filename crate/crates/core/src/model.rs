//! Shared domain types: likelihood words, sentences, objects, action
//! signatures and the domain definition, plus vector hygiene.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Category id that every domain must contain.
pub const ACTION: &str = "action";
/// Category holding the manipulated object.
pub const TARGET: &str = "target_object";
/// Category holding the storage object.
pub const STORAGE: &str = "storage_object";

/// Likelihoods over an ordered option vocabulary. Values are stored as
/// given and normalized only on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodWord {
    pub category: Option<String>,
    pub options: Vec<String>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub empty: bool,
}

impl LikelihoodWord {
    pub fn new(category: Option<&str>, options: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if options.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: options.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Record(
                "likelihood values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            category: category.map(str::to_string),
            options,
            values,
            empty: false,
        })
    }

    /// Word with options `o0..o{n-1}`, handy for tests and examples.
    pub fn anonymous(category: Option<&str>, values: Vec<f64>) -> Self {
        let options = (0..values.len()).map(|i| format!("o{i}")).collect();
        Self {
            category: category.map(str::to_string),
            options,
            values,
            empty: false,
        }
    }

    /// An unexpressed word. It keeps its category so aligned positions
    /// can still be checked, but carries no values.
    pub fn empty(category: Option<&str>) -> Self {
        Self {
            category: category.map(str::to_string),
            options: Vec::new(),
            values: Vec::new(),
            empty: true,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn normalize(&self) -> Result<Self> {
        if self.empty {
            return Err(Error::EmptyWord);
        }
        let values = normalize_values(&self.values)?;
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    pub fn index_of(&self, option: &str) -> Option<usize> {
        self.options.iter().position(|o| o == option)
    }
}

/// Scale a nonnegative vector to unit sum.
pub fn normalize_values(values: &[f64]) -> Result<Vec<f64>> {
    let s: f64 = values.iter().sum();
    if s.is_nan() || s <= 0.0 {
        return Err(Error::AllZeroVector);
    }
    Ok(values.iter().map(|v| v / s).collect())
}

/// Index of the largest value, ties resolved to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= *v => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalitySentence {
    pub modality_id: String,
    pub weight: f64,
    pub words: Vec<LikelihoodWord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Object,
    Storage,
}

impl ObjectKind {
    pub fn category(self) -> &'static str {
        match self {
            ObjectKind::Object => TARGET,
            ObjectKind::Storage => STORAGE,
        }
    }
}

/// A scene object. `features[k]` is the likelihood of the domain's k-th feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub id: String,
    pub kind: ObjectKind,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub objects: Vec<ObjectInstance>,
}

impl Scene {
    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn of_kind(&self, kind: ObjectKind) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(move |o| o.kind == kind)
    }
}

/// `feature` must be present (`positive`) or absent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub feature: String,
    pub positive: bool,
}

impl Literal {
    pub fn pos(feature: &str) -> Self {
        Self {
            feature: feature.to_string(),
            positive: true,
        }
    }

    pub fn neg(feature: &str) -> Self {
        Self {
            feature: feature.to_string(),
            positive: false,
        }
    }

    pub fn desired(&self) -> f64 {
        if self.positive {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "!")?;
        }
        write!(f, "{}", self.feature)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionSpec {
    pub id: String,
    pub compulsory: Vec<String>,
    pub voluntary: Vec<String>,
    pub target_requirements: Vec<Literal>,
    pub storage_requirements: Vec<Literal>,
}

impl ActionSpec {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            ..Self::default()
        }
    }

    pub fn requires(&self, category: &str) -> bool {
        self.compulsory.iter().any(|c| c == category)
    }

    pub fn accepts(&self, category: &str) -> bool {
        self.requires(category) || self.voluntary.iter().any(|c| c == category)
    }

    pub fn requirements_for(&self, kind: ObjectKind) -> &[Literal] {
        match kind {
            ObjectKind::Object => &self.target_requirements,
            ObjectKind::Storage => &self.storage_requirements,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Intent {
    pub action: String,
    pub bindings: BTreeMap<String, String>,
}

/// A complete domain definition as read from a `.domain` file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Domain {
    pub categories: Vec<String>,
    pub features: Vec<String>,
    pub vocab: Vec<(String, Vec<String>)>,
    pub actions: Vec<ActionSpec>,
}

impl Domain {
    pub fn action(&self, id: &str) -> Option<&ActionSpec> {
        self.actions.iter().find(|a| a.id == id)
    }

    pub fn action_index(&self, id: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.id == id)
    }

    pub fn feature_index(&self, id: &str) -> Option<usize> {
        self.features.iter().position(|f| f == id)
    }

    pub fn vocab_for(&self, category: &str) -> Option<&[String]> {
        self.vocab
            .iter()
            .find(|(c, _)| c == category)
            .map(|(_, v)| v.as_slice())
    }

    pub fn action_ids(&self) -> Vec<String> {
        self.actions.iter().map(|a| a.id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateCategory(String),
    DuplicateFeature(String),
    MissingActionCategory,
    DuplicateAction(String),
    ActionAsParameter(String),
    DuplicateParameter { action: String, category: String },
    CompulsoryAndVoluntary { action: String, category: String },
    UnknownCategory { context: String, category: String },
    UnknownFeature { action: String, feature: String },
    DuplicateLiteral { action: String, feature: String },
    RequirementWithoutParameter { action: String, category: String },
    DuplicateVocab(String),
    DuplicateOption { category: String, option: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateCategory(c) => write!(f, "category `{c}` declared twice"),
            DuplicateFeature(x) => write!(f, "feature `{x}` declared twice"),
            MissingActionCategory => write!(f, "category `{ACTION}` is missing"),
            DuplicateAction(a) => write!(f, "action `{a}` declared twice"),
            ActionAsParameter(a) => write!(f, "action `{a}` lists `{ACTION}` as a parameter"),
            DuplicateParameter { action, category } => {
                write!(f, "action `{action}` lists category `{category}` twice")
            }
            CompulsoryAndVoluntary { action, category } => {
                write!(
                    f,
                    "action `{action}` has `{category}` both compulsory and voluntary"
                )
            }
            UnknownCategory { context, category } => {
                write!(f, "{context} refers to unknown category `{category}`")
            }
            UnknownFeature { action, feature } => {
                write!(f, "action `{action}` requires unknown feature `{feature}`")
            }
            DuplicateLiteral { action, feature } => {
                write!(
                    f,
                    "action `{action}` constrains feature `{feature}` twice on one object"
                )
            }
            RequirementWithoutParameter { action, category } => {
                write!(
                    f,
                    "action `{action}` constrains `{category}` but does not take it"
                )
            }
            DuplicateVocab(c) => write!(f, "vocabulary for `{c}` declared twice"),
            DuplicateOption { category, option } => {
                write!(f, "vocabulary `{category}` lists `{option}` twice")
            }
        }
    }
}

/// Collect every invariant violation of a domain. An empty list means valid.
pub fn validate_domain(domain: &Domain) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    for c in &domain.categories {
        if !seen.insert(c.as_str()) {
            out.push(Violation::DuplicateCategory(c.clone()));
        }
    }
    let categories = seen;
    // An empty domain file is allowed; anything with content needs `action`.
    let has_content = !domain.actions.is_empty() || !domain.categories.is_empty();
    if has_content && !categories.contains(ACTION) {
        out.push(Violation::MissingActionCategory);
    }

    let mut features = BTreeSet::new();
    for x in &domain.features {
        if !features.insert(x.as_str()) {
            out.push(Violation::DuplicateFeature(x.clone()));
        }
    }

    let mut vocab_seen = BTreeSet::new();
    for (c, options) in &domain.vocab {
        if !vocab_seen.insert(c.as_str()) {
            out.push(Violation::DuplicateVocab(c.clone()));
        }
        if !categories.contains(c.as_str()) {
            out.push(Violation::UnknownCategory {
                context: "vocabulary".into(),
                category: c.clone(),
            });
        }
        let mut opts = BTreeSet::new();
        for o in options {
            if !opts.insert(o.as_str()) {
                out.push(Violation::DuplicateOption {
                    category: c.clone(),
                    option: o.clone(),
                });
            }
        }
    }

    let mut action_ids = BTreeSet::new();
    for a in &domain.actions {
        if !action_ids.insert(a.id.as_str()) {
            out.push(Violation::DuplicateAction(a.id.clone()));
        }
        let mut params = BTreeSet::new();
        for c in a.compulsory.iter().chain(&a.voluntary) {
            if c == ACTION {
                out.push(Violation::ActionAsParameter(a.id.clone()));
            } else if !categories.contains(c.as_str()) {
                out.push(Violation::UnknownCategory {
                    context: format!("action `{}`", a.id),
                    category: c.clone(),
                });
            }
            if !params.insert(c.as_str()) {
                if a.compulsory.contains(c) && a.voluntary.contains(c) {
                    out.push(Violation::CompulsoryAndVoluntary {
                        action: a.id.clone(),
                        category: c.clone(),
                    });
                } else {
                    out.push(Violation::DuplicateParameter {
                        action: a.id.clone(),
                        category: c.clone(),
                    });
                }
            }
        }
        for (kind, reqs) in [
            (ObjectKind::Object, &a.target_requirements),
            (ObjectKind::Storage, &a.storage_requirements),
        ] {
            if !reqs.is_empty() && !a.accepts(kind.category()) {
                out.push(Violation::RequirementWithoutParameter {
                    action: a.id.clone(),
                    category: kind.category().to_string(),
                });
            }
            let mut lits = BTreeSet::new();
            for lit in reqs {
                if !features.contains(lit.feature.as_str()) {
                    out.push(Violation::UnknownFeature {
                        action: a.id.clone(),
                        feature: lit.feature.clone(),
                    });
                }
                if !lits.insert(lit.feature.as_str()) {
                    out.push(Violation::DuplicateLiteral {
                        action: a.id.clone(),
                        feature: lit.feature.clone(),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normalize_examples() {
        let w = LikelihoodWord::anonymous(None, vec![0.2, 0.2])
            .normalize()
            .unwrap();
        assert_eq!(w.values, vec![0.5, 0.5]);
        let w = LikelihoodWord::anonymous(None, vec![1.0, 0.0, 0.0])
            .normalize()
            .unwrap();
        assert_eq!(w.values, vec![1.0, 0.0, 0.0]);
        let w = LikelihoodWord::anonymous(None, vec![0.9, 0.3, 0.3])
            .normalize()
            .unwrap();
        for (a, b) in w.values.iter().zip([0.6, 0.2, 0.2]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_zero_and_empty() {
        let w = LikelihoodWord::anonymous(None, vec![0.0, 0.0]);
        assert_eq!(w.normalize(), Err(Error::AllZeroVector));
        assert_eq!(
            LikelihoodWord::empty(None).normalize(),
            Err(Error::EmptyWord)
        );
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5, 0.5, 0.0]), Some(0));
        assert_eq!(argmax(&[0.1, 0.7, 0.2]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn word_constructor_checks_lengths() {
        let r = LikelihoodWord::new(None, vec!["a".into()], vec![0.1, 0.2]);
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
        let r = LikelihoodWord::new(None, vec!["a".into()], vec![-0.1]);
        assert!(r.is_err());
    }

    fn small_domain() -> Domain {
        let mut pick = ActionSpec::new("pick");
        pick.compulsory = vec![TARGET.into()];
        pick.target_requirements = vec![Literal::pos("reachable"), Literal::neg("glued")];
        Domain {
            categories: vec![ACTION.into(), TARGET.into()],
            features: vec!["reachable".into(), "glued".into()],
            vocab: vec![],
            actions: vec![pick, ActionSpec::new("stop")],
        }
    }

    #[test]
    fn validate_accepts_small_domain() {
        assert!(validate_domain(&small_domain()).is_empty());
    }

    #[test]
    fn validate_reports_action_parameter() {
        let mut d = small_domain();
        d.actions[1].compulsory.push(ACTION.into());
        assert!(validate_domain(&d).contains(&Violation::ActionAsParameter("stop".into())));
    }

    #[test]
    fn validate_reports_unknown_feature() {
        let mut d = small_domain();
        d.actions[0].target_requirements.push(Literal::pos("wet"));
        let v = validate_domain(&d);
        assert!(v.contains(&Violation::UnknownFeature {
            action: "pick".into(),
            feature: "wet".into()
        }));
    }

    #[test]
    fn validate_reports_every_violation() {
        let mut d = small_domain();
        d.categories.push(TARGET.into());
        d.features.push("glued".into());
        d.actions.push(ActionSpec::new("stop"));
        d.actions[0].voluntary.push(TARGET.into());
        let v = validate_domain(&d);
        assert_eq!(v.len(), 4, "{v:?}");
    }
}
