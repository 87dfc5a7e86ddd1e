//! Line-delimited JSON sample records.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{
    Domain, Intent, LikelihoodWord, ModalitySentence, ObjectInstance, ObjectKind, Scene,
};
use crate::simgen::{DatasetKind, NoiseLevel, Sample};

/// Round to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn ser9<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round9(*x))
}

fn ser9_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| round9(*x)))
}

fn ser9_map<S: Serializer>(
    m: &BTreeMap<String, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k, round9(*v))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRecord {
    pub id: String,
    pub kind: ObjectKind,
    #[serde(serialize_with = "ser9_map")]
    pub features: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRecord {
    pub objects: Vec<ObjectRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordRecord {
    pub category: Option<String>,
    pub options: Vec<String>,
    #[serde(serialize_with = "ser9_vec")]
    pub values: Vec<f64>,
    #[serde(default)]
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceRecord {
    pub modality: String,
    #[serde(serialize_with = "ser9")]
    pub weight: f64,
    pub words: Vec<WordRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaRecord {
    pub kind: String,
    pub noise: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub scene: SceneRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Intent>,
    pub sentences: Vec<SentenceRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<MetaRecord>,
}

/// A record checked against a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub scene: Scene,
    pub truth: Option<Intent>,
    pub sentences: Vec<ModalitySentence>,
    pub meta: Option<(DatasetKind, NoiseLevel, u64)>,
}

impl SampleRecord {
    pub fn from_sample(sample: &Sample, domain: &Domain) -> Self {
        let objects = sample
            .scene
            .objects
            .iter()
            .map(|o| ObjectRecord {
                id: o.id.clone(),
                kind: o.kind,
                features: domain
                    .features
                    .iter()
                    .cloned()
                    .zip(o.features.iter().copied())
                    .collect(),
            })
            .collect();
        let sentences = sample
            .sentences
            .iter()
            .map(|s| SentenceRecord {
                modality: s.modality_id.clone(),
                weight: s.weight,
                words: s
                    .words
                    .iter()
                    .map(|w| WordRecord {
                        category: w.category.clone(),
                        options: w.options.clone(),
                        values: w.values.clone(),
                        empty: w.empty,
                    })
                    .collect(),
            })
            .collect();
        Self {
            scene: SceneRecord { objects },
            truth: Some(sample.truth.clone()),
            sentences,
            meta: Some(MetaRecord {
                kind: sample.kind.id().to_string(),
                noise: sample.noise.id().to_string(),
                seed: sample.seed,
            }),
        }
    }

    pub fn decode(&self, domain: &Domain) -> Result<Decoded> {
        let mut objects = Vec::with_capacity(self.scene.objects.len());
        for o in &self.scene.objects {
            if let Some(f) = o
                .features
                .keys()
                .find(|f| domain.feature_index(f).is_none())
            {
                return Err(Error::UnknownFeature(f.clone()));
            }
            let mut features = Vec::with_capacity(domain.features.len());
            for f in &domain.features {
                let v = o.features.get(f).copied().unwrap_or(0.0);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Record(format!(
                        "feature `{f}` of `{}` outside [0, 1]",
                        o.id
                    )));
                }
                features.push(v);
            }
            objects.push(ObjectInstance {
                id: o.id.clone(),
                kind: o.kind,
                features,
            });
        }
        let mut sentences = Vec::with_capacity(self.sentences.len());
        for s in &self.sentences {
            if !(s.weight.is_finite() && s.weight >= 0.0) {
                return Err(Error::InvalidWeight(s.weight));
            }
            let mut words = Vec::with_capacity(s.words.len());
            for w in &s.words {
                if let Some(c) = &w.category {
                    if !domain.categories.contains(c) {
                        return Err(Error::Record(format!("unknown category `{c}`")));
                    }
                }
                let word = if w.empty {
                    LikelihoodWord::empty(w.category.as_deref())
                } else {
                    LikelihoodWord::new(w.category.as_deref(), w.options.clone(), w.values.clone())?
                };
                words.push(word);
            }
            sentences.push(ModalitySentence {
                modality_id: s.modality.clone(),
                weight: s.weight,
                words,
            });
        }
        if let Some(t) = &self.truth {
            if domain.action(&t.action).is_none() {
                return Err(Error::Record(format!("unknown action `{}`", t.action)));
            }
        }
        let meta = match &self.meta {
            Some(m) => Some((
                m.kind.parse().map_err(Error::Record)?,
                m.noise.parse().map_err(Error::Record)?,
                m.seed,
            )),
            None => None,
        };
        Ok(Decoded {
            scene: Scene { objects },
            truth: self.truth.clone(),
            sentences,
            meta,
        })
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Record(e.to_string()))
    }
}

impl Decoded {
    /// A labeled sample; needs both truth and metadata.
    pub fn into_sample(self) -> Result<Sample> {
        let truth = self
            .truth
            .ok_or_else(|| Error::Record("missing `truth`".into()))?;
        let (kind, noise, seed) = self
            .meta
            .ok_or_else(|| Error::Record("missing `meta`".into()))?;
        Ok(Sample {
            scene: self.scene,
            truth,
            sentences: self.sentences,
            kind,
            noise,
            seed,
            decoy: None,
        })
    }
}

pub fn write_samples<W: Write>(
    out: &mut W,
    samples: &[Sample],
    domain: &Domain,
) -> std::io::Result<()> {
    for s in samples {
        writeln!(out, "{}", SampleRecord::from_sample(s, domain).to_line())?;
    }
    Ok(())
}

/// Read labeled samples, one per nonblank line. Errors carry the line number.
pub fn read_samples<R: BufRead>(input: R, domain: &Domain) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Record(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = SampleRecord::from_line(&line)
            .and_then(|r| r.decode(domain))
            .and_then(Decoded::into_sample)
            .map_err(|e| Error::Record(format!("line {}: {e}", i + 1)))?;
        out.push(sample);
    }
    Ok(out)
}
