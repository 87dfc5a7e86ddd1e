//! Property suites checked against independent test-side oracles.

use crate::dsl::{default_domain, parse_domain, print_domain};
use crate::entropy::{dch, entropy_weights, uniform_noise_entropy, REFERENCE_SAMPLES};
use crate::fusion::MergedSentence;
use crate::fusion::{merge_sentences, MergeConfig, MergeOp};
use crate::model::{
    argmax, normalize_values, ActionSpec, LikelihoodWord, Literal, ModalitySentence,
    ObjectInstance, ObjectKind, Scene, ACTION, STORAGE, TARGET,
};
use crate::penalties::{alpha_penalty, beta_penalty, feature_alignment, CategoryPresence};
use crate::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent recomputation of the uniform-noise reference entropy.
fn reference_oracle(len: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..REFERENCE_SAMPLES {
        let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        sum += raw
            .iter()
            .map(|x| x / s)
            .filter(|p| *p > 0.0)
            .map(|p| -p * p.ln())
            .sum::<f64>();
    }
    sum / REFERENCE_SAMPLES as f64
}

#[test]
fn uniform_noise_reference_matches_monte_carlo() {
    for len in [2, 3, 5, 9, 17] {
        let h = uniform_noise_entropy(len, 42);
        assert!((h - reference_oracle(len, 42)).abs() < 1e-9, "len {len}");
        assert!((h - reference_oracle(len, 4242)).abs() < 0.02, "len {len}");
        assert!(h > 0.0 && h < (len as f64).ln());
    }
    assert_eq!(uniform_noise_entropy(1, 42), 0.0);
}

#[test]
fn reference_cache_is_consistent_across_threads() {
    let handles: Vec<_> = (0..8)
        .map(|_| std::thread::spawn(|| uniform_noise_entropy(11, 5)))
        .collect();
    let values: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(values.iter().all(|v| *v == values[0]));
    assert_eq!(values[0], reference_oracle(11, 5));
}

fn prob_vec(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, min..=max)
        .prop_filter("nonzero", |v| v.iter().sum::<f64>() > 1e-6)
}

/// Elementwise fold with the operator's neutral element, then normalized.
fn merge_oracle(op: MergeOp, inputs: &[(f64, Vec<f64>)]) -> Vec<f64> {
    let n = inputs[0].1.len();
    let mut out = vec![f64::NAN; n];
    for (i, o) in out.iter_mut().enumerate() {
        let terms = inputs.iter().map(|(w, v)| w * v[i]);
        *o = match op {
            MergeOp::Add => terms.sum(),
            MergeOp::Mul => terms.product(),
            MergeOp::Max => terms.fold(f64::NEG_INFINITY, f64::max),
        };
    }
    normalize_values(&out).unwrap_or(out)
}

fn sentence(id: &str, weight: f64, words: Vec<LikelihoodWord>) -> ModalitySentence {
    ModalitySentence {
        modality_id: id.to_string(),
        weight,
        words,
    }
}

fn op_strategy() -> impl Strategy<Value = MergeOp> {
    prop_oneof![Just(MergeOp::Max), Just(MergeOp::Mul), Just(MergeOp::Add)]
}

proptest! {
    #[test]
    fn dch_is_monotone_and_inverts(v in prob_vec(1, 12)) {
        let v = normalize_values(&v).unwrap();
        let h = dch(&v).unwrap();
        for i in 0..v.len() {
            prop_assert!(((-h[i]).exp() - v[i].clamp(1e-9, 1.0)).abs() <= 1e-12);
            for j in 0..v.len() {
                if v[i] > v[j] {
                    prop_assert!(h[i] <= h[j]);
                }
            }
        }
    }

    #[test]
    fn entropy_weights_keep_the_argmax(v in prob_vec(1, 12)) {
        let w = entropy_weights(&v).unwrap();
        prop_assert_eq!(argmax(&w), argmax(&v));
        prop_assert!(w.iter().all(|x| *x > 0.0 && x.is_finite()));
    }

    #[test]
    fn normalization_is_idempotent(v in prob_vec(1, 12)) {
        let once = normalize_values(&v).unwrap();
        let twice = normalize_values(&once).unwrap();
        prop_assert!((once.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn merge_matches_oracle_and_ignores_order(
        op in op_strategy(),
        vs in prop::collection::vec((0.2f64..2.0, prob_vec(4, 4)), 1..=4),
    ) {
        let opts: Vec<String> = (0..4).map(|i| format!("o{i}")).collect();
        let sentences: Vec<ModalitySentence> = vs
            .iter()
            .enumerate()
            .map(|(k, (w, v))| sentence(&format!("m{k}"), *w, vec![LikelihoodWord::new(Some(ACTION), opts.clone(), v.clone()).unwrap()]))
            .collect();
        let cfg = MergeConfig::new(op);
        let merged = merge_sentences(&sentences, &cfg).unwrap();
        let expected = merge_oracle(op, &vs);
        let mut reversed = sentences.clone();
        reversed.reverse();
        let back = merge_sentences(&reversed, &cfg).unwrap();
        for (i, e) in expected.iter().enumerate() {
            prop_assert!((merged.words[0].values[i] - e).abs() < 1e-12);
            prop_assert!((merged.words[0].values[i] - back.words[0].values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_words_are_neutral(op in op_strategy(), a in prob_vec(3, 3), b in prob_vec(3, 3), pen in any::<bool>()) {
        let opts: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let full = |id: &str, v: &[f64]| sentence(id, 1.0, vec![LikelihoodWord::new(Some(ACTION), opts.clone(), v.to_vec()).unwrap()]);
        let cfg = MergeConfig::new(op).with_penalization(pen);
        let base = merge_sentences(&[full("a", &a), full("b", &b)], &cfg).unwrap();
        let silent = sentence("c", 1.0, vec![LikelihoodWord::empty(Some(ACTION))]);
        let with_empty = merge_sentences(&[full("a", &a), silent.clone(), full("b", &b)], &cfg).unwrap();
        prop_assert_eq!(&base.words, &with_empty.words);
        let alone = merge_sentences(&[silent], &cfg).unwrap();
        prop_assert!(alone.words[0].empty);
    }

    #[test]
    fn alpha_counts_signature_violations(
        a in 0.01f64..=1.0,
        has_target in any::<bool>(),
        has_storage in any::<bool>(),
        has_direction in any::<bool>(),
        needs in 0usize..3,
    ) {
        let mut spec = ActionSpec::new("act");
        spec.compulsory = [TARGET, STORAGE][..needs.min(2)].iter().map(|s| s.to_string()).collect();
        let mut p = CategoryPresence::default();
        for (c, on) in [(TARGET, has_target), (STORAGE, has_storage), ("direction", has_direction)] {
            if on {
                p.0.insert(c.to_string(), 1.0);
            }
        }
        let missing = spec.compulsory.iter().filter(|c| p.get(c) == 0.0).count();
        let extra = p.0.keys().filter(|c| !spec.compulsory.contains(c)).count();
        let alpha = alpha_penalty(&spec, &p, a).unwrap();
        prop_assert!((alpha - a.powi((missing + extra) as i32)).abs() < 1e-12);
    }

    #[test]
    fn beta_matches_brute_force(
        tf in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 1..4),
        sf in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 1..4),
        tl in prob_vec(3, 3),
        sl in prob_vec(3, 3),
        t_clear in 0.0f64..0.6,
    ) {
        let features: Vec<String> = ["f0", "f1", "f2"].iter().map(|s| s.to_string()).collect();
        let mut spec = ActionSpec::new("put");
        spec.compulsory = vec![TARGET.into(), STORAGE.into()];
        spec.target_requirements = vec![Literal::pos("f0"), Literal::neg("f1")];
        spec.storage_requirements = vec![Literal::pos("f2")];
        let mut objects = Vec::new();
        for (k, f) in tf.iter().enumerate() {
            objects.push(ObjectInstance { id: format!("t{k}"), kind: ObjectKind::Object, features: f.clone() });
        }
        for (k, f) in sf.iter().enumerate() {
            objects.push(ObjectInstance { id: format!("s{k}"), kind: ObjectKind::Storage, features: f.clone() });
        }
        let scene = Scene { objects };
        let word = |cat: &str, prefix: &str, v: &[f64]| {
            LikelihoodWord::new(Some(cat), (0..3).map(|i| format!("{prefix}{i}")).collect(), v.to_vec()).unwrap()
        };
        let merged = MergedSentence {
            words: vec![word(TARGET, "t", &tl), word(STORAGE, "s", &sl)],
            sources: vec![Vec::new(), Vec::new()],
        };
        let beta = beta_penalty(&spec, &merged, &scene, &features, t_clear).unwrap();

        // Best product over every pair of candidate objects.
        let tn = normalize_values(&tl).unwrap();
        let sn = normalize_values(&sl).unwrap();
        let fit = |reqs: &[Literal], f: &[f64]| {
            1.0 - reqs
                .iter()
                .map(|l| {
                    let k = features.iter().position(|x| *x == l.feature).unwrap();
                    (f[k] - if l.positive { 1.0 } else { 0.0 }).abs()
                })
                .fold(0.0, f64::max)
        };
        let mut best: f64 = 0.0;
        for (i, f) in tf.iter().enumerate() {
            for (j, g) in sf.iter().enumerate() {
                if tn[i] > t_clear && sn[j] > t_clear {
                    best = best.max(fit(&spec.target_requirements, f) * fit(&spec.storage_requirements, g));
                }
            }
        }
        prop_assert!((beta - best).abs() < 1e-12, "beta {} oracle {}", beta, best);
    }

    #[test]
    fn alignment_never_drops_when_a_feature_moves_toward_its_goal(
        f in prop::collection::vec(0.0f64..=1.0, 4),
        k in 0usize..4,
        step in 0.0f64..=1.0,
    ) {
        let features: Vec<String> = (0..4).map(|i| format!("f{i}")).collect();
        let reqs = vec![Literal::pos("f0"), Literal::neg("f1"), Literal::pos("f2"), Literal::neg("f3")];
        let before = ObjectInstance { id: "o".into(), kind: ObjectKind::Object, features: f.clone() };
        let mut after = before.clone();
        let goal = reqs[k].desired();
        after.features[k] += (goal - f[k]) * step;
        let a0 = feature_alignment(&reqs, &before, &features).unwrap();
        let a1 = feature_alignment(&reqs, &after, &features).unwrap();
        prop_assert!(a1 >= a0 - 1e-12);
        prop_assert!((0.0..=1.0).contains(&a0));
    }

    #[test]
    fn dsl_reports_the_inserted_token_position(line_pick in any::<prop::sample::Index>(), col_pick in any::<prop::sample::Index>()) {
        let text = print_domain(&default_domain());
        let lines: Vec<&str> = text.lines().collect();
        // Line 1 is the header comment.
        let l = 1 + line_pick.index(lines.len() - 1);
        let line = lines[l];
        let c = col_pick.index(line.chars().count() + 1);
        let mut edited: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
        edited[l] = format!("{}@{}", &line[..c], &line[c..]);
        let err = parse_domain(&edited.join("\n")).unwrap_err();
        match err {
            Error::Syntax { line, col, .. } => prop_assert_eq!((line, col), (l + 1, c + 1)),
            other => prop_assert!(false, "unexpected {:?}", other),
        }

        let mut edited: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
        edited[l] = format!("&{line}");
        match parse_domain(&edited.join("\n")).unwrap_err() {
            Error::Syntax { line, col, .. } => prop_assert_eq!((line, col), (l + 1, 1)),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }
}

#[test]
fn printing_is_canonical_and_stable() {
    let d = default_domain();
    let a = print_domain(&d);
    assert_eq!(a, print_domain(&d));
    let reparsed = parse_domain(&a).unwrap();
    assert_eq!(reparsed, d);
    assert_eq!(print_domain(&reparsed), a);
}
