use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use flowrec_core::corpus::{self, Corpus, PwConfig, ServiceToken, Strategy};
use flowrec_core::ingest::{
    load_repository, parse_canonical_json, parse_workflow_file, Repository, ServiceId,
    WorkflowGraph,
};
use flowrec_core::wskg::Wskg;
use proptest::prelude::*;
use proptest::strategy::Strategy as PropStrategy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn sid(s: &str) -> ServiceId {
    ServiceId::from(s)
}

#[test]
fn fixture_directory_loads() {
    let report = load_repository(&fixtures()).unwrap();
    assert_eq!(report.loaded, 10);
    assert!(report.skipped.is_empty());
    let g = Wskg::build(&report.repository);
    assert_eq!(g.occurrence(&sid("s7"), &sid("s10")).unwrap(), 4);
    assert_eq!(g.occurrence(&sid("s7"), &sid("s9")).unwrap(), 1);
    assert_eq!(g.occurrence(&sid("s19"), &sid("s14")).unwrap(), 3);
    assert_eq!(g.out_weight(&sid("s7")).unwrap(), 5);
}

#[test]
fn xml_and_json_fixtures_agree() {
    let xml = parse_workflow_file(&fixtures().join("../fixtures_xml/wf941.xml")).unwrap();
    let json = parse_workflow_file(&fixtures().join("wf941.json")).unwrap();
    assert_eq!(xml, json);
}

#[test]
fn bad_files_are_skipped_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixtures().join("wf941.json"), dir.path().join("a.json")).unwrap();
    std::fs::write(
        dir.path().join("b.json"),
        r#"{"id":"x","services":["a"],"links":[["a","zz"]]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("c.xml"),
        "<workflow id=\"c\"><processor name=\"p\">",
    )
    .unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let report = load_repository(dir.path()).unwrap();
    assert_eq!(report.loaded, 1);
    assert_eq!(report.skipped.len(), 2);
}

#[test]
fn edge_list_round_trip() {
    let repo = load_repository(&fixtures()).unwrap().repository;
    let g = Wskg::build(&repo);
    let back = Wskg::from_edge_list(&g.to_edge_list()).unwrap();
    assert_eq!(back.edges(), g.edges());
    assert_eq!(back.to_edge_list(), g.to_edge_list());
}

#[test]
fn corpus_text_round_trip() {
    let repo = load_repository(&fixtures()).unwrap().repository;
    let g = Wskg::build(&repo);
    for strategy in [Strategy::Dfs, Strategy::Bfs, Strategy::Pw] {
        let c = corpus::generate(&g, strategy, &PwConfig::default(), false, None).unwrap();
        let back = Corpus::from_text(&c.to_text()).unwrap();
        assert_eq!(back.to_text(), c.to_text());
        assert_eq!(back.vocabulary(), c.vocabulary());
    }
}

#[test]
fn pw_is_seed_determined() {
    let g = Wskg::build(&load_repository(&fixtures()).unwrap().repository);
    let cfg = PwConfig::default();
    let a = corpus::generate_pw(&g, &cfg).unwrap();
    let b = corpus::generate_pw(&g, &cfg).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    let other = corpus::generate_pw(
        &g,
        &PwConfig {
            rng_seed: 43,
            ..cfg
        },
    )
    .unwrap();
    assert_eq!(other.len(), a.len());
}

#[test]
fn dedupe_is_idempotent() {
    let g = Wskg::build(&load_repository(&fixtures()).unwrap().repository);
    let c = corpus::generate_pw(&g, &PwConfig::default()).unwrap();
    let once = corpus::dedupe(&c);
    let lines: Vec<String> = once.to_text().lines().map(str::to_string).collect();
    let distinct: HashSet<&String> = lines.iter().collect();
    assert_eq!(lines.len(), distinct.len());
    assert_eq!(corpus::dedupe(&once), once);
}

/// Random DAG: edges only from lower to higher index.
fn dag() -> impl PropStrategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..12, 0u8..12), 1..30).prop_map(|pairs| {
        pairs
            .into_iter()
            .filter(|(a, b)| a < b)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    })
}

fn workflow(id: &str, links: &[(u8, u8)]) -> Option<WorkflowGraph> {
    if links.is_empty() {
        return None;
    }
    let name = |i: u8| sid(&format!("n{i}"));
    let services: BTreeSet<ServiceId> = links
        .iter()
        .flat_map(|&(a, b)| [name(a), name(b)])
        .collect();
    Some(WorkflowGraph::new(id, services, links.iter().map(|&(a, b)| (name(a), name(b)))).unwrap())
}

fn repo_of(dags: &[Vec<(u8, u8)>]) -> Repository {
    Repository::from_workflows(
        dags.iter()
            .enumerate()
            .filter_map(|(i, l)| workflow(&format!("w{i}"), l)),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn workflow_json_round_trip(links in dag()) {
        if let Some(w) = workflow("rt", &links) {
            let back = parse_canonical_json(w.to_canonical_json().as_bytes()).unwrap();
            prop_assert_eq!(back, w);
        }
    }

    #[test]
    fn transition_distribution_sums_to_one(dags in prop::collection::vec(dag(), 1..5), drop in 0usize..4) {
        let g = Wskg::build(&repo_of(&dags));
        for u in g.services() {
            let neigh: Vec<ServiceId> = g.out_neighbors(u).unwrap().into_iter().map(|(v, _)| v.clone()).collect();
            let excluded: HashSet<ServiceId> = neigh.iter().take(drop).cloned().collect();
            let dist = corpus::transition_distribution(&g, u, &excluded).unwrap();
            if neigh.len() > excluded.len() {
                let total: f64 = dist.iter().map(|(_, p)| p).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(dist.iter().all(|(v, p)| *p > 0.0 && !excluded.contains(v)));
            } else {
                prop_assert!(dist.is_empty());
            }
        }
    }

    #[test]
    fn walks_are_simple_and_bounded(dags in prop::collection::vec(dag(), 1..5), l in 2usize..8, seed in any::<u64>()) {
        let g = Wskg::build(&repo_of(&dags));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for u in g.services() {
            let walk = corpus::probabilistic_walk(&g, u, l, &mut rng).unwrap();
            prop_assert!(walk.len() <= l);
            let distinct: HashSet<&ServiceId> = walk.iter().collect();
            prop_assert_eq!(distinct.len(), walk.len());
            for pair in walk.windows(2) {
                prop_assert!(g.occurrence(&pair[0], &pair[1]).unwrap() > 0);
            }
        }
        let c = corpus::generate_pw(&g, &PwConfig { walk_length: l, walks_per_vertex: 3, rng_seed: seed }).unwrap();
        prop_assert!(c.sequences().iter().all(|s| s.len() >= 2 && s.len() <= l));
    }

    #[test]
    fn corpus_links_exist_in_graph(dags in prop::collection::vec(dag(), 1..5)) {
        let g = Wskg::build(&repo_of(&dags));
        for c in [corpus::generate_dfs(&g), corpus::generate_bfs(&g)] {
            prop_assert!(c.sequences().iter().all(|s| s.len() >= 2));
            for (a, b) in c.covered_links() {
                prop_assert!(g.contains(&a) && g.contains(&b));
            }
        }
        for (a, b) in corpus::generate_dfs(&g).covered_links() {
            prop_assert!(g.occurrence(&a, &b).unwrap() > 0);
        }
    }

    #[test]
    fn bundle_keys_are_order_free(mut names in prop::collection::btree_set("[a-z][a-z0-9]{0,4}", 1..5)) {
        let sorted: Vec<String> = std::mem::take(&mut names).into_iter().collect();
        let mut rev = sorted.clone();
        rev.reverse();
        let a = ServiceToken::parse(&sorted.join("&")).unwrap();
        let b = ServiceToken::parse(&rev.join("&")).unwrap();
        prop_assert_eq!(a.key(), b.key());
        prop_assert_eq!(a.is_bundle(), sorted.len() > 1);
    }
}
