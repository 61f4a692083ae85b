//! Randomized invariant checks over the statistics kernel, corpus
//! round-trips, clustering determinism, and classical test statistics.

use itemetrics::cluster;
use itemetrics::corpus::{self, score, ItemRecord, Label, RespondentRecord, Selector};
use itemetrics::ctt;
use itemetrics::irt::gauss_hermite_normal;
use itemetrics::stats::{self, Method, PValueSpec};
use proptest::prelude::*;

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, len..=len)
}

/// Pairs of equal-length vectors, length 3..24.
fn vector_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..24).prop_flat_map(|n| (finite_vec(n), finite_vec(n)))
}

/// Vectors with heavy ties: small integer values.
fn tied_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..24).prop_flat_map(|n| {
        (
            prop::collection::vec((0i8..5).prop_map(f64::from), n..=n),
            prop::collection::vec((0i8..5).prop_map(f64::from), n..=n),
        )
    })
}

fn binary_pair() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (3usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<bool>(), n..=n),
            prop::collection::vec(any::<bool>(), n..=n),
        )
    })
}

proptest! {
    #[test]
    fn pearson_is_symmetric((x, y) in vector_pair()) {
        let xy = stats::pearson(&x, &y).unwrap();
        let yx = stats::pearson(&y, &x).unwrap();
        match (xy.r, yx.r) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn pearson_respects_affine_maps((x, y) in vector_pair(), a in 0.1..5.0f64, b in -10.0..10.0f64, flip in any::<bool>()) {
        let scale = if flip { -a } else { a };
        let mapped: Vec<f64> = x.iter().map(|&v| scale * v + b).collect();
        let base = stats::pearson(&x, &y).unwrap();
        let moved = stats::pearson(&mapped, &y).unwrap();
        match (base.r, moved.r) {
            (Some(r0), Some(r1)) => {
                let expected = if flip { -r0 } else { r0 };
                prop_assert!((r1 - expected).abs() <= 1e-9, "{r1} vs {expected}");
            }
            (None, None) => {}
            (r0, r1) => prop_assert!(false, "definedness changed: {r0:?} vs {r1:?}"),
        }
    }

    #[test]
    fn pearson_lies_in_unit_interval((x, y) in tied_pair()) {
        let result = stats::pearson(&x, &y).unwrap();
        if let Some(r) = result.r {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
        if let Some(p) = result.p_value {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn spearman_ignores_monotone_deformation((x, y) in vector_pair()) {
        // Cubing preserves order (and exact ties), so rank statistics agree.
        let deformed: Vec<f64> = x.iter().map(|&v| v.powi(3)).collect();
        let base = stats::spearman(&x, &y).unwrap();
        let moved = stats::spearman(&deformed, &y).unwrap();
        match (base.r, moved.r) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn matthews_equals_pearson_on_binary((a, b) in binary_pair()) {
        let m = stats::matthews::<f64>(&a, &b).unwrap();
        let x: Vec<f64> = a.iter().map(|&v| v as u8 as f64).collect();
        let y: Vec<f64> = b.iter().map(|&v| v as u8 as f64).collect();
        let p = stats::correlate(&x, &y, Method::Pearson, PValueSpec::TApprox).unwrap();
        if !m.degenerate
            && a.len() >= 3 {
                let r = p.r.expect("non-degenerate binary vectors have defined r");
                prop_assert!((m.value - r).abs() <= 1e-12);
            }
    }

    #[test]
    fn exact_and_monte_carlo_permutations_agree(n in 4usize..7, seed in 0u64..500) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let exact = stats::correlate(&x, &y, Method::Pearson, PValueSpec::ExactPerm).unwrap();
        let mc = stats::correlate(&x, &y, Method::Pearson, PValueSpec::MonteCarloPerm { samples: 4000, seed }).unwrap();
        if let (Some(pe), Some(pm)) = (exact.p_value, mc.p_value) {
            let se = (pe * (1.0 - pe) / 4000.0f64).sqrt();
            prop_assert!((pm - pe).abs() <= 4.0 * se + 2.0 / 4001.0, "{pm} vs {pe}");
        }
    }
}

fn arbitrary_corpus() -> impl Strategy<Value = (Vec<ItemRecord>, Vec<RespondentRecord>)> {
    let labels = prop::sample::select(vec![
        Label::Entailment,
        Label::Contradiction,
        Label::Neutral,
    ]);
    let items = (2usize..6).prop_flat_map(move |n_items| {
        prop::collection::vec(labels.clone(), n_items..=n_items).prop_map(|golds| {
            golds
                .into_iter()
                .enumerate()
                .map(|(i, gold)| ItemRecord {
                    item_id: format!("it{i:02}"),
                    category: if i % 2 == 0 { "CAv" } else { "PS" }.to_string(),
                    premise: format!("premise text number {i}"),
                    hypothesis: format!("hypothesis text number {i}"),
                    gold_label: gold,
                    is_attention_check: i == 0,
                })
                .collect::<Vec<_>>()
        })
    });
    items.prop_flat_map(|items| {
        let n_items = items.len();
        let answers = prop::collection::vec(
            prop::collection::vec(
                prop::option::of(prop::sample::select(vec![
                    Label::Entailment,
                    Label::Contradiction,
                    Label::Neutral,
                ])),
                n_items..=n_items,
            ),
            1..8,
        );
        (Just(items), answers).prop_map(|(items, answer_rows)| {
            let respondents: Vec<RespondentRecord> = answer_rows
                .into_iter()
                .enumerate()
                .map(|(j, row)| {
                    let mut r = RespondentRecord::new(format!("w{j:02}"), "crowd");
                    if j % 2 == 0 {
                        r.architecture = Some("arch-a".to_string());
                    }
                    if j % 3 == 0 {
                        r.identity_key = Some(format!("key{j}"));
                    }
                    for (item, answer) in items.iter().zip(row) {
                        if let Some(label) = answer {
                            r.responses.insert(item.item_id.clone(), label);
                            r.justifications.insert(
                                item.item_id.clone(),
                                format!("reasoning {j} about {}", item.item_id),
                            );
                        }
                    }
                    r
                })
                .collect();
            (items, respondents)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_round_trips_through_csv((items, respondents) in arbitrary_corpus()) {
        use corpus::FileFormat;
        let dir = tempfile::tempdir().unwrap();
        let items_path = dir.path().join("items.csv");
        let responses_path = dir.path().join("responses.csv");
        corpus::write_items_csv(&items_path, &items).unwrap();
        corpus::write_responses_csv(&responses_path, &respondents).unwrap();
        let items_back = corpus::load_items(&items_path, FileFormat::Csv).unwrap();
        let respondents_back =
            corpus::load_responses(&responses_path, FileFormat::Csv, &items_back).unwrap();
        prop_assert_eq!(items, items_back);
        // Respondents with no responses at all vanish from row-based files.
        let kept: Vec<RespondentRecord> = respondents
            .into_iter()
            .filter(|r| !r.responses.is_empty())
            .collect();
        prop_assert_eq!(kept, respondents_back);
    }

    #[test]
    fn corpus_round_trips_through_json((items, respondents) in arbitrary_corpus()) {
        use corpus::FileFormat;
        let dir = tempfile::tempdir().unwrap();
        let items_path = dir.path().join("items.json");
        let responses_path = dir.path().join("responses.json");
        corpus::write_items_json(&items_path, &items).unwrap();
        corpus::write_responses_json(&responses_path, &respondents).unwrap();
        let items_back = corpus::load_items(&items_path, FileFormat::Json).unwrap();
        let respondents_back =
            corpus::load_responses(&responses_path, FileFormat::Json, &items_back).unwrap();
        prop_assert_eq!(items, items_back);
        let kept: Vec<RespondentRecord> = respondents
            .into_iter()
            .filter(|r| !r.responses.is_empty())
            .collect();
        prop_assert_eq!(kept, respondents_back);
    }

    #[test]
    fn difficulty_is_respondent_order_invariant(perm_seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let items: Vec<ItemRecord> = (0..5)
            .map(|i| ItemRecord {
                item_id: format!("q{i}"),
                category: "PS".to_string(),
                premise: String::new(),
                hypothesis: String::new(),
                gold_label: Label::Entailment,
                is_attention_check: false,
            })
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
        let mut respondents: Vec<RespondentRecord> = (0..12)
            .map(|j| {
                let mut r = RespondentRecord::new(format!("w{j:02}"), "crowd");
                for (i, item) in items.iter().enumerate() {
                    use rand::Rng;
                    let label = if rng.random::<bool>() || i == 0 {
                        Label::Entailment
                    } else {
                        Label::Neutral
                    };
                    r.responses.insert(item.item_id.clone(), label);
                }
                r
            })
            .collect();
        let matrix = score(&items, &respondents).unwrap();
        let slice = matrix.slice(&Selector::default()).unwrap();
        let base = ctt::difficulty::<f64>(&matrix, &slice, "PS").unwrap();

        respondents.shuffle(&mut rng);
        let shuffled = score(&items, &respondents).unwrap();
        let slice = shuffled.slice(&Selector::default()).unwrap();
        let moved = ctt::difficulty::<f64>(&shuffled, &slice, "PS").unwrap();
        prop_assert_eq!(base.values, moved.values);
        prop_assert_eq!(base.item_ids, moved.item_ids);
    }

    #[test]
    fn clustering_is_seed_deterministic(seed in 0u64..1000, sizes in prop::collection::vec(2usize..5, 2..4)) {
        let dist = itemetrics::simul::planted_distance::<f64>(&sizes, 0.2, 1.4).unwrap();
        let a = cluster::cluster_items(&dist, 2, 6, seed).unwrap();
        let b = cluster::cluster_items(&dist, 2, 6, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn quadrature_matches_normal_moments(n in 3usize..40) {
        let quad = gauss_hermite_normal::<f64>(n).unwrap();
        let total: f64 = quad.weights.iter().sum();
        let mean: f64 = quad.nodes.iter().zip(&quad.weights).map(|(x, w)| x * w).sum();
        let var: f64 = quad.nodes.iter().zip(&quad.weights).map(|(x, w)| x * x * w).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(mean.abs() < 1e-9);
        prop_assert!((var - 1.0).abs() < 1e-9);
    }
}
