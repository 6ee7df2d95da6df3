//! Cross-module integration: file round trips at generator scale,
//! selector support nesting, sparse/exact regularizer agreement, and
//! end-to-end determinism of trained artifacts.

use std::collections::BTreeSet;

use feedrec_core::data::{generate_synthetic, load_dataset, write_dataset, SyntheticScale};
use feedrec_core::eval::{split, SplitSpec};
use feedrec_core::factor::{loss_terms, save_model, train, FactorModel, Hyperparams};
use feedrec_core::profile::{
    build_rating_matrix, NormalizationSpec, ProfileSelector, RatingMatrix, WeightTable,
};
use feedrec_core::similarity::build_similarity;
use feedrec_core::text::build_tfidf;

fn temp_dir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("feedrec_pipeline_tests").join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_dataset(seed: u64) -> feedrec_core::data::Dataset {
    generate_synthetic(seed, &SyntheticScale::small()).unwrap()
}

#[test]
fn generated_dataset_round_trips_through_files() {
    let dir = temp_dir("round_trip");
    let dataset = small_dataset(11);
    let events = dir.join("events.csv");
    let posts = dir.join("posts.csv");
    write_dataset(&dataset, &events, &posts).unwrap();
    let loaded = load_dataset(&events, &posts).unwrap();
    // The generator covers every user at this scale, so nothing is lost.
    assert_eq!(loaded, dataset);

    // Writing what was loaded reproduces the files byte for byte.
    let events2 = dir.join("events2.csv");
    let posts2 = dir.join("posts2.csv");
    write_dataset(&loaded, &events2, &posts2).unwrap();
    assert_eq!(
        std::fs::read(&events).unwrap(),
        std::fs::read(&events2).unwrap()
    );
    assert_eq!(
        std::fs::read(&posts).unwrap(),
        std::fs::read(&posts2).unwrap()
    );
}

#[test]
fn single_category_supports_nest_inside_all_interaction() {
    let dataset = small_dataset(3);
    let weights = WeightTable::default_table();
    let norm = NormalizationSpec::<f64>::default();
    let support = |matrix: &RatingMatrix<f64>| -> BTreeSet<(String, String)> {
        matrix
            .entries()
            .iter()
            .map(|&(u, i, _)| (matrix.users()[u].clone(), matrix.items()[i].clone()))
            .collect()
    };
    let all = support(
        &build_rating_matrix(&dataset, &weights, ProfileSelector::AllInteraction, &norm).unwrap(),
    );
    for selector in [
        ProfileSelector::DirectOnly,
        ProfileSelector::SocialOnly,
        ProfileSelector::ReadingOnly,
    ] {
        let single = support(&build_rating_matrix(&dataset, &weights, selector, &norm).unwrap());
        assert!(
            single.is_subset(&all),
            "{selector} support leaks outside all-interaction"
        );
    }
}

#[test]
fn sparse_and_exact_regularizers_agree_when_every_pair_is_stored() {
    // Leave-one-out vocabulary: post i contains every word but w_i, so
    // each pair shares terms that miss at least one document (idf > 0)
    // and every pairwise cosine is positive. The sparse path then sees
    // the full grid and must equal exact mode.
    let n_posts = 6;
    let posts: Vec<feedrec_core::data::Post> = (0..n_posts)
        .map(|i| {
            let words: Vec<String> = (0..n_posts)
                .filter(|&w| w != i)
                .map(|w| format!("word{w}"))
                .collect();
            feedrec_core::data::Post {
                post_id: format!("p{i}"),
                text: words.join(" "),
            }
        })
        .collect();
    let (_, profiles) = build_tfidf::<f64>(&posts, None);
    let sim = build_similarity(&profiles, posts.len(), 0.0, true).unwrap();
    let n_pairs = posts.len() * (posts.len() - 1) / 2 + posts.len();
    assert_eq!(sim.entries().len(), n_pairs, "expected a fully stored matrix");

    let items: Vec<String> = posts.iter().map(|p| p.post_id.clone()).collect();
    let users = vec!["u0".to_string()];
    let ratings =
        RatingMatrix::from_parts(users.clone(), items.clone(), vec![(0, 0, 3.0)]).unwrap();
    let base = Hyperparams {
        d: 2,
        lambda: 0.0,
        alpha: 0.4,
        zero_sample_per_item: 0,
        ..Hyperparams::default()
    };
    let q: Vec<f64> = (0..posts.len() * 2).map(|i| (i as f64 * 0.37).sin()).collect();
    let sparse_model = FactorModel::from_parts(
        users.clone(),
        items.clone(),
        vec![0.1, -0.2],
        q.clone(),
        base.clone(),
        vec![Vec::new()],
    )
    .unwrap();
    let exact_model = FactorModel::from_parts(
        users,
        items,
        vec![0.1, -0.2],
        q,
        Hyperparams {
            exact_sim_pairs: true,
            ..base
        },
        vec![Vec::new()],
    )
    .unwrap();
    let sparse = loss_terms(&sparse_model, &ratings, Some(&sim)).unwrap();
    let exact = loss_terms(&exact_model, &ratings, Some(&sim)).unwrap();
    assert_eq!(sparse.similarity, exact.similarity);
}

#[test]
fn split_partitions_the_synthetic_matrix_per_user() {
    let dataset = small_dataset(19);
    let matrix = build_rating_matrix(
        &dataset,
        &WeightTable::default_table(),
        ProfileSelector::AllInteraction,
        &NormalizationSpec::<f64>::default(),
    )
    .unwrap();
    let spec = SplitSpec {
        test_fraction: 0.25,
        seed: 9,
    };
    let (train_mx, test_mx) = split(&matrix, &spec).unwrap();
    assert_eq!(train_mx.len() + test_mx.len(), matrix.len());
    let train_keys: BTreeSet<(usize, usize)> =
        train_mx.entries().iter().map(|&(u, i, _)| (u, i)).collect();
    let test_keys: BTreeSet<(usize, usize)> =
        test_mx.entries().iter().map(|&(u, i, _)| (u, i)).collect();
    assert!(train_keys.is_disjoint(&test_keys));
    for u in 0..matrix.num_users() {
        let total = matrix.user_row(u).len();
        let held_out = test_mx.user_row(u).len();
        if total < 2 {
            assert_eq!(held_out, 0, "user {u} with {total} ratings must stay in train");
        } else {
            assert_eq!(
                held_out,
                (0.25 * total as f64).round() as usize,
                "user {u} with {total} ratings"
            );
        }
    }
}

#[test]
fn direct_only_matrix_touches_exactly_the_users_with_direct_events() {
    let dataset = generate_synthetic(42, &SyntheticScale::reference()).unwrap();
    // Independent recount straight off the raw event list.
    let recount: BTreeSet<&str> = dataset
        .events()
        .iter()
        .filter(|e| e.interaction_type.as_str().starts_with("direct"))
        .map(|e| e.user_id.as_str())
        .collect();
    let matrix = build_rating_matrix(
        &dataset,
        &WeightTable::default_table(),
        ProfileSelector::DirectOnly,
        &NormalizationSpec::<f64>::default(),
    )
    .unwrap();
    let matrix_users: BTreeSet<&str> = matrix.users().iter().map(String::as_str).collect();
    assert_eq!(matrix_users, recount);
    assert_eq!(matrix.num_users(), 150);
}

#[test]
fn normalized_ratings_stay_inside_the_configured_bounds() {
    let dataset = small_dataset(37);
    let weights = WeightTable::default_table();
    let norm = NormalizationSpec::<f64> {
        method: feedrec_core::profile::NormMethod::Log1pThenMinMax,
        rating_min: 1.0,
        rating_max: 4.0,
    };
    for selector in ProfileSelector::ALL {
        let matrix = build_rating_matrix(&dataset, &weights, selector, &norm).unwrap();
        for &(_, _, r) in matrix.entries() {
            assert!((1.0..=4.0).contains(&r), "{selector}: rating {r} out of bounds");
        }
    }
}

#[test]
fn loss_csv_labels_follow_the_objective() {
    let dataset = small_dataset(29);
    let weights = WeightTable::default_table();
    let norm = NormalizationSpec::<f64>::default();
    let matrix =
        build_rating_matrix(&dataset, &weights, ProfileSelector::AllInteraction, &norm).unwrap();
    let (_, profiles) = build_tfidf::<f64>(dataset.posts(), None);
    let sim = build_similarity(&profiles, 10, 0.0, true)
        .unwrap()
        .restrict(matrix.items());

    let hp_basic = Hyperparams {
        d: 4,
        epochs: 5,
        alpha: 0.0,
        ..Hyperparams::default()
    };
    let (_, report) = train(&matrix, None, &hp_basic).unwrap();
    assert!(report.to_loss_csv().starts_with("epoch,L\n"));

    let hp_hybrid = Hyperparams {
        alpha: 0.2,
        ..hp_basic
    };
    let (_, report) = train(&matrix, Some(&sim), &hp_hybrid).unwrap();
    assert!(report.to_loss_csv().starts_with("epoch,L^\n"));
    assert_eq!(report.objective, "L^");
}

#[test]
fn trained_model_files_are_reproducible() {
    let dir = temp_dir("model_bytes");
    let dataset = small_dataset(5);
    let weights = WeightTable::default_table();
    let matrix = build_rating_matrix(
        &dataset,
        &weights,
        ProfileSelector::AllInteraction,
        &NormalizationSpec::<f64>::default(),
    )
    .unwrap();
    let (_, profiles) = build_tfidf::<f64>(dataset.posts(), None);
    let sim = build_similarity(&profiles, 10, 0.01, true)
        .unwrap()
        .restrict(matrix.items());
    let hp = Hyperparams {
        d: 4,
        epochs: 15,
        alpha: 0.1,
        ..Hyperparams::default()
    };
    let config = std::collections::BTreeMap::from([("alpha".to_string(), "0.1".to_string())]);

    let path_a = dir.join("a.json");
    let path_b = dir.join("b.json");
    let (model_a, _) = train(&matrix, Some(&sim), &hp).unwrap();
    save_model(&model_a, &path_a, &config).unwrap();
    let (model_b, _) = train(&matrix, Some(&sim), &hp).unwrap();
    save_model(&model_b, &path_b, &config).unwrap();
    assert_eq!(std::fs::read(&path_a).unwrap(), std::fs::read(&path_b).unwrap());
}

#[test]
fn similarity_file_round_trips_at_generator_scale() {
    let dataset = small_dataset(23);
    let (_, profiles) = build_tfidf::<f64>(dataset.posts(), None);
    let sim = build_similarity(&profiles, 5, 0.01, true).unwrap();
    let dir = temp_dir("sim_round_trip");
    let path = dir.join("sim.csv");
    sim.write_file(&path).unwrap();
    let items: Vec<String> = dataset.posts().iter().map(|p| p.post_id.clone()).collect();
    let back = feedrec_core::similarity::SimilarityMatrix::<f64>::read_file(&path, &items).unwrap();
    assert_eq!(back, sim);
}
