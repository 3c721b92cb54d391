use std::path::Path;

use flowrec_core::corpus::{self, Corpus};
use flowrec_core::embed::{
    from_text, load_model, save_model, to_text, train, EmbeddingModel, HuffmanTree, TrainConfig,
};
use flowrec_core::ingest::load_repository;
use flowrec_core::wskg::Wskg;
use proptest::prelude::*;

/// Optimal prefix-code cost: the sum of all merge weights when the two
/// lightest subtrees are merged repeatedly.
fn optimal_cost(counts: &[u64]) -> u64 {
    let mut w: Vec<u64> = counts.to_vec();
    let mut cost = 0;
    while w.len() > 1 {
        w.sort_unstable_by(|a, b| b.cmp(a));
        let a = w.pop().unwrap();
        let b = w.pop().unwrap();
        cost += a + b;
        w.push(a + b);
    }
    cost
}

proptest! {
    #[test]
    fn huffman_is_optimal(counts in prop::collection::vec(1u64..1000, 2..60)) {
        let tree = HuffmanTree::build(&counts).unwrap();
        prop_assert_eq!(tree.weighted_path_length(&counts), optimal_cost(&counts));
    }

    #[test]
    fn huffman_codes_are_prefix_free(counts in prop::collection::vec(1u64..50, 2..40)) {
        let tree = HuffmanTree::build(&counts).unwrap();
        let codes: Vec<Vec<u8>> = (0..counts.len()).map(|i| tree.path(i).iter().map(|s| s.bit).collect()).collect();
        for (i, a) in codes.iter().enumerate() {
            prop_assert!(!a.is_empty());
            prop_assert_eq!(tree.path(i)[0].node, counts.len() - 2);
            for (j, b) in codes.iter().enumerate() {
                if i != j {
                    prop_assert!(!b.starts_with(a));
                }
            }
        }
    }

    #[test]
    fn equal_counts_depth_bound(n in 2usize..300) {
        let tree = HuffmanTree::build(&vec![1; n]).unwrap();
        let bound = (n as f64).log2().ceil() as usize;
        prop_assert!(tree.max_depth() <= bound);
    }
}

#[test]
fn huffman_rejects_degenerate_input() {
    assert!(HuffmanTree::build(&[5]).is_err());
    assert!(HuffmanTree::build(&[1, 0]).is_err());
}

#[test]
fn trained_fixture_model_round_trips_through_file() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let g = Wskg::build(&load_repository(&dir).unwrap().repository);
    let c = corpus::generate_dfs(&g);
    let m = train(
        &c,
        &TrainConfig {
            dim: 16,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert!(m.all_finite());
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("model.txt");
    save_model(&m, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(to_text(&back), to_text(&m));
    for i in 0..m.len() {
        for j in 0..m.len() {
            assert_eq!(back.similarity_idx(i, j), m.similarity_idx(i, j));
        }
    }
}

#[test]
fn training_increases_likelihood_on_fixture_corpus() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let g = Wskg::build(&load_repository(&dir).unwrap().repository);
    let c = corpus::generate_bfs(&g);
    let cfg = TrainConfig {
        dim: 12,
        epochs: 20,
        ..TrainConfig::default()
    };
    let init = EmbeddingModel::initialize(&c, &cfg).unwrap();
    let m = train(&c, &cfg).unwrap();
    assert!(m.mean_log_likelihood(&c) > init.mean_log_likelihood(&c));
    assert!(m.contains("s14&s15&s17&s18"));
}

#[test]
fn similarity_basics() {
    let c = Corpus::from_text("a b c\nc b a\n").unwrap();
    let m = train(
        &c,
        &TrainConfig {
            dim: 4,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert!((m.similarity("a", "a").unwrap() - 1.0).abs() < 1e-12);
    let ab = m.similarity("a", "b").unwrap();
    assert_eq!(ab, m.similarity("b", "a").unwrap());
    assert!((-1.0..=1.0).contains(&ab));
    assert!(m.similarity("a", "zzz").is_err());
}

#[test]
fn unsupported_version_rejected() {
    let c = Corpus::from_text("a b\n").unwrap();
    let m = train(
        &c,
        &TrainConfig {
            dim: 3,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let text = to_text(&m).replacen("v1", "v2", 1);
    assert!(from_text(&text).unwrap_err().to_string().contains("v2"));
}
