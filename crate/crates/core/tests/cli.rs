use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use tgraph::graph::{is_chordal, leaf_cliques, maximal_cliques, minimal_separators};
use tgraph::harness::{is_isomorphism, random_relabel, random_t_graph, verify_t_representation, TRepresentation};
use tgraph::Graph;

fn tgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgraph")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, g: &Graph) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, g.to_text()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn spider() -> Graph {
    Graph::from_edges(7, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]).unwrap()
}

#[test]
fn iso_identical_files() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "a.graph", &spider());
    let o = tgraph(&["iso", s(&p), s(&p), "--d-max", "3", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["verdict"], "isomorphic");
}

#[test]
fn iso_path_against_cycle_is_rejected() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "p4.graph", &Graph::path(4));
    let b = write(&dir, "c4.graph", &Graph::cycle(4));
    let o = tgraph(&["iso", s(&a), s(&b), "--d-max", "3", "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "not_t_graph");
    assert!(v["evidence"].is_object());
}

#[test]
fn iso_relabeled_generator_pair_has_witness() {
    let dir = TempDir::new().unwrap();
    let (g, _) = random_t_graph(4, 30, 11);
    let (h, _) = random_relabel(&g, 12);
    let a = write(&dir, "g.graph", &g);
    let b = write(&dir, "h.graph", &h);
    let o = tgraph(&["iso", s(&a), s(&b), "--d-max", "4", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let w: Vec<usize> = serde_json::from_value(stdout_json(&o)["witness"].clone()).unwrap();
    assert!(is_isomorphism(&g, &h, &w));
}

#[test]
fn iso_non_isomorphic_and_bad_input() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "p5.graph", &Graph::path(5));
    let b = write(&dir, "k5.graph", &Graph::complete(5));
    let o = tgraph(&["iso", s(&a), s(&b), "--d-max", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let bad = dir.path().join("bad.graph");
    fs::write(&bad, "2 1\n0 7\n").unwrap();
    let o = tgraph(&["iso", s(&bad), s(&a)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
    let o = tgraph(&["iso", "/nonexistent/x.graph", s(&a)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn decompose_levels() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.graph", &Graph::path(6));
    let o = tgraph(&["decompose", s(&p), "--d", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["levels"].as_array().unwrap().len(), 1);

    let p = write(&dir, "spider.graph", &spider());
    let o = tgraph(&["decompose", s(&p), "--d", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["levels"].as_array().unwrap().len(), 2);
    assert_eq!(v["n"], 7);

    let p = write(&dir, "c4.graph", &Graph::cycle(4));
    let o = tgraph(&["decompose", s(&p), "--d", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["error"], "not_chordal");
}

#[test]
fn gen_is_deterministic_and_certified() {
    let dir = TempDir::new().unwrap();
    let run = |prefix: &str| {
        let out = dir.path().join(prefix);
        let o = tgraph(&["gen", "--d", "4", "--n", "25", "--seed", "9", "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(0));
        let g = fs::read_to_string(dir.path().join(format!("{prefix}.graph"))).unwrap();
        let c = fs::read_to_string(dir.path().join(format!("{prefix}.cert.json"))).unwrap();
        (g, c)
    };
    let (g1, c1) = run("a");
    let (g2, c2) = run("b");
    assert_eq!((&g1, &c1), (&g2, &c2));
    let g = Graph::parse(&g1).unwrap();
    let rep = TRepresentation::from_json(&c1).unwrap();
    assert!(verify_t_representation(&g, &rep));
    assert!(is_chordal(&g).is_some());
    assert_eq!(g, random_t_graph(4, 25, 9).0);
}

#[test]
fn analyze_reports() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p4.graph", &Graph::path(4));
    let v = stdout_json(&tgraph(&["analyze", s(&p), "--json"]));
    assert_eq!(v["leaf_cliques"].as_array().unwrap().len(), 2);
    let p = write(&dir, "k4.graph", &Graph::complete(4));
    let v = stdout_json(&tgraph(&["analyze", s(&p), "--json"]));
    assert_eq!(v["maximal_cliques"].as_array().unwrap().len(), 1);
    assert_eq!(v["minimal_separators"].as_array().unwrap().len(), 0);
    let p = write(&dir, "c4.graph", &Graph::cycle(4));
    let v = stdout_json(&tgraph(&["analyze", s(&p), "--json"]));
    assert_eq!(v["chordal"], false);
}

#[test]
fn analyze_matches_library() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let (g, _) = random_t_graph(3, 20, seed);
        let g = g.induced(&g.components()[0]).0;
        let p = write(&dir, "g.graph", &g);
        let v = stdout_json(&tgraph(&["analyze", s(&p), "--json"]));
        let cliques: Vec<Vec<usize>> = maximal_cliques(&g).unwrap().into_iter().map(|c| c.0).collect();
        let seps: Vec<Vec<usize>> = minimal_separators(&g).unwrap().into_iter().map(|x| x.vertices).collect();
        let mut leaves: Vec<Vec<usize>> = leaf_cliques(&g).unwrap().into_iter().map(|c| c.0).collect();
        leaves.sort();
        assert_eq!(serde_json::from_value::<Vec<Vec<usize>>>(v["maximal_cliques"].clone()).unwrap(), cliques);
        assert_eq!(serde_json::from_value::<Vec<Vec<usize>>>(v["minimal_separators"].clone()).unwrap(), seps);
        assert_eq!(serde_json::from_value::<Vec<Vec<usize>>>(v["leaf_cliques"].clone()).unwrap(), leaves);
    }
}

#[test]
fn selftest_quick_passes_and_fault_fails() {
    let o = tgraph(&["selftest", "--profile", "quick", "--seed", "1", "--json"]);
    let v = stdout_json(&o);
    assert_eq!(o.status.code(), Some(0), "{v}");
    assert_eq!(v["passed"], true);
    let criteria = v["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 9);
    for c in criteria {
        for key in ["id", "name", "cases", "failures", "passed", "seconds", "detail"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
    let o = tgraph(&["selftest", "--profile", "quick", "--seed", "1", "--inject-fault", "--json"]);
    assert_ne!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["criteria"][0]["passed"], false);
}
