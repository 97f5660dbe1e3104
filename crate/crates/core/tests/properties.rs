use std::collections::BTreeSet;

use memeaffect::classifier::{self, loss, FeatureMatrix, LinearParams, TrainConfig};
use memeaffect::corpus::{self, Category, Dataset, Sample};
use memeaffect::evaluation::{randolph_kappa, RatingsMatrix};
use memeaffect::rebalance::{augment, smote, AugmentConfig, ParaphraseLexicon, SmoteConfig, TrainingRecord};
use memeaffect::text::{
    ambiguity_features, pos_tag, preprocess, stylistic_features, PosLexicon, SynonymLexicon, TfidfModel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(labels: &[[usize; 5]]) -> Dataset {
    let samples = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| Sample {
            id: format!("s{i}"),
            text: format!("text {i}"),
            image_name: String::new(),
            image: None,
            labels: l,
        })
        .collect();
    Dataset::new(samples).unwrap()
}

fn label_rows() -> impl Strategy<Value = Vec<[usize; 5]>> {
    proptest::collection::vec((0usize..3, 0usize..4, 0usize..4, 0usize..4, 0usize..2), 2..80)
        .prop_map(|v| v.into_iter().map(|(a, b, c, d, e)| [a, b, c, d, e]).collect())
}

fn assert_partition(n: usize, parts: &[&[usize]]) {
    let mut seen = BTreeSet::new();
    for p in parts {
        for &i in *p {
            assert!(seen.insert(i), "index {i} appears twice");
        }
    }
    assert_eq!(seen, (0..n).collect());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kfold_partitions_and_is_deterministic(rows in label_rows(), k in 2usize..6, seed in any::<u64>()) {
        let d = dataset(&rows);
        prop_assume!(k <= d.len());
        let folds = corpus::kfold(&d, k, Category::Humour, seed).unwrap();
        let tests: Vec<&[usize]> = folds.iter().map(|f| f.test.as_slice()).collect();
        assert_partition(d.len(), &tests);
        for f in &folds {
            assert_partition(d.len(), &[&f.train, &f.test]);
        }
        prop_assert_eq!(folds, corpus::kfold(&d, k, Category::Humour, seed).unwrap());
    }

    #[test]
    fn split_partitions_and_is_deterministic(rows in label_rows(), a in 1u32..8, b in 0u32..4, seed in any::<u64>()) {
        let d = dataset(&rows);
        let total = (a + b + 2) as f64;
        let ratios = [a as f64 / total, b as f64 / total, 2.0 / total];
        let ratios = [ratios[0], ratios[1], 1.0 - ratios[0] - ratios[1]];
        let s = corpus::stratified_split_indices(&d, ratios, Category::Sentiment, seed).unwrap();
        assert_partition(d.len(), &[&s.train, &s.val, &s.test]);
        prop_assert_eq!(s, corpus::stratified_split_indices(&d, ratios, Category::Sentiment, seed).unwrap());
    }

    #[test]
    fn distribution_is_order_invariant(rows in label_rows(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = corpus::distribution_report(&dataset(&rows)).unwrap();
        let b = corpus::distribution_report(&dataset(&shuffled)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn binary_collapse_keeps_ids(rows in label_rows()) {
        let d = dataset(&rows);
        let b = corpus::collapse_to_binary(&d).unwrap();
        prop_assert_eq!(b.len(), d.len());
        for (x, y) in d.samples.iter().zip(&b.samples) {
            prop_assert_eq!(&x.id, &y.id);
            prop_assert_eq!(x.label(Category::Sentiment), y.label(Category::Sentiment));
        }
    }

    #[test]
    fn pos_counts_cover_every_word(s in "[a-zA-Z ,.!']{0,60}") {
        let t = preprocess(&s);
        let tags = pos_tag(&t, &PosLexicon::bundled());
        let f = stylistic_features(&t, &tags).unwrap();
        let other = tags.iter().filter(|t| **t == memeaffect::text::PosTag::Other).count();
        prop_assert_eq!(f.n_noun + f.n_verb + f.n_adj + other, f.n_words);
    }

    #[test]
    fn ambiguity_gap_non_negative(s in "[a-z ]{1,60}") {
        let t = preprocess(&s);
        prop_assume!(!t.is_empty());
        let a = ambiguity_features(&t, &SynonymLexicon::bundled());
        prop_assert!(a.synset_gap >= 0.0);
    }

    #[test]
    fn tfidf_support_and_self_cosine(docs in proptest::collection::vec("[a-f ]{1,24}", 1..8)) {
        let texts: Vec<_> = docs.iter().map(|d| preprocess(d)).collect();
        prop_assume!(texts.iter().any(|t| !t.is_empty()));
        let m = TfidfModel::fit(&texts, 1).unwrap();
        for t in &texts {
            let v = m.transform(t);
            prop_assert!(v.indices.iter().all(|&c| c < m.dim()));
            if !v.is_zero() {
                prop_assert!((v.dot(&v) / (v.norm() * v.norm()) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smote_keeps_originals_in_place(
        pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0, 0usize..3), 6..40),
        seed in any::<u64>(),
    ) {
        let x: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0, p.1]).collect();
        let y: Vec<usize> = pts.iter().map(|p| p.2).collect();
        let mut counts = [0usize; 3];
        y.iter().for_each(|&c| counts[c] += 1);
        prop_assume!(counts.iter().all(|&c| c == 0 || c >= 2));
        let out = smote(&x, &y, &SmoteConfig { k_neighbors: 3, seed, distance_columns: None }).unwrap();
        prop_assert_eq!(&out.x[..x.len()], &x[..]);
        prop_assert_eq!(&out.y[..y.len()], &y[..]);
    }

    #[test]
    fn augment_keeps_labels_and_dense(seed in any::<u64>(), p in 0.0f64..=1.0, copies in 1usize..3) {
        let lex = ParaphraseLexicon::bundled();
        let texts = ["this is very funny", "a lot of people hate mondays", "so good", "nothing to swap"];
        let records: Vec<TrainingRecord> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| TrainingRecord {
                id: format!("r{i}"),
                source: i,
                tokens: preprocess(t).tokens,
                label: i % 3,
                dense: vec![i as f64, -(i as f64) / 3.0],
            })
            .collect();
        let out = augment(&records, &lex, &AugmentConfig { p_replace: p, copies, seed }).unwrap();
        prop_assert_eq!(&out[..records.len()], &records[..]);
        for r in &out[records.len()..] {
            let src = &records[r.source];
            prop_assert_eq!(r.label, src.label);
            prop_assert_eq!(&r.dense, &src.dense);
            prop_assert_ne!(&r.tokens, &src.tokens);
        }
    }

    #[test]
    fn loss_is_midpoint_convex(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d, k) = (rng.gen_range(5..30), rng.gen_range(2..8), rng.gen_range(2..5));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let x = FeatureMatrix::from_dense(&rows).unwrap();
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
        let mut point = || {
            let mut p = LinearParams::zeros(k, d);
            p.w.iter_mut().chain(p.b.iter_mut()).for_each(|v| *v = rng.gen_range(-3.0..3.0));
            p
        };
        let (a, b) = (point(), point());
        let mut mid = LinearParams::zeros(k, d);
        for (m, (u, v)) in mid.w.iter_mut().zip(a.w.iter().zip(&b.w)) {
            *m = 0.5 * (u + v);
        }
        for (m, (u, v)) in mid.b.iter_mut().zip(a.b.iter().zip(&b.b)) {
            *m = 0.5 * (u + v);
        }
        let lambda = rng.gen_range(0.0..2.0);
        let l = |p: &LinearParams| loss(p, &x, &y, &w, lambda).unwrap();
        prop_assert!(l(&mid) <= 0.5 * (l(&a) + l(&b)) + 1e-9);
    }

    #[test]
    fn training_trace_never_increases(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(10..60);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let x = FeatureMatrix::from_dense(&rows).unwrap();
        let cfg = TrainConfig { lambda: rng.gen_range(1e-3..1.0), max_iters: 50, ..TrainConfig::default() };
        let m = classifier::fit(&x, &y, 3, &cfg).unwrap();
        prop_assert!(m.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn kappa_ignores_relabelling(seed in any::<u64>(), perm_idx in 0usize..6) {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<usize>> = (0..30).map(|_| (0..4).map(|_| rng.gen_range(0..3)).collect()).collect();
        let perm = PERMS[perm_idx];
        let relabelled: Vec<Vec<usize>> = rows.iter().map(|r| r.iter().map(|&c| perm[c]).collect()).collect();
        let a = randolph_kappa(&RatingsMatrix::new(rows, 3).unwrap()).unwrap();
        let b = randolph_kappa(&RatingsMatrix::new(relabelled, 3).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}

/// Raising one class's weight should not lower its training recall. Reported
/// over 20 datasets; a convex fit can trade recall at the margin, so only a
/// clear majority is required.
#[test]
fn upweighting_a_class_does_not_lower_its_recall() {
    let mut holds = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let y: Vec<usize> = rows
            .iter()
            .map(|r| usize::from(r[0] + 0.5 * r[1] + rng.gen_range(-0.6..0.6) > 0.6))
            .collect();
        if y.iter().all(|&c| c == y[0]) {
            holds += 1;
            continue;
        }
        let x = FeatureMatrix::from_dense(&rows).unwrap();
        let recall = |w1: f64| {
            let cfg = TrainConfig { lambda: 1e-2, class_weights: Some(vec![1.0, w1]), ..TrainConfig::default() };
            let pred = classifier::fit(&x, &y, 2, &cfg).unwrap().predict_all(&x).unwrap();
            let pos = y.iter().filter(|&&c| c == 1).count() as f64;
            y.iter().zip(&pred).filter(|(&g, &p)| g == 1 && p == 1).count() as f64 / pos
        };
        if recall(4.0) >= recall(1.0) {
            holds += 1;
        }
    }
    println!("class-weight recall property held on {holds}/20 datasets");
    assert!(holds >= 18);
}
