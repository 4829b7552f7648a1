use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tgraph::decompose::{canonical_decomposition, DecomposeError, Evidence};
use tgraph::graph::{
    classify_edges, is_chordal, leaf_clique_indices, maximal_cliques, minimal_separators, weighted_clique_graph,
    EdgeClass,
};
use tgraph::harness::{random_t_graph, verify_t_representation};
use tgraph::selftest::{run_all, Faults, Profile};
use tgraph::{is_isomorphic_upto, Graph, Verdict};

const EXIT_ISO: u8 = 0;
const EXIT_NOT_ISO: u8 = 1;
const EXIT_NOT_T: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "tgraph", version, about = "Isomorphism testing for chordal graphs of bounded leafage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide isomorphism of two graphs, trying leaf counts 2..=d-max.
    Iso {
        g1: PathBuf,
        g2: PathBuf,
        #[arg(long, default_value_t = 4)]
        d_max: usize,
        /// Print the verdict as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print the canonical level decomposition as JSON.
    Decompose {
        g: PathBuf,
        #[arg(long)]
        d: usize,
    },
    /// Generate a random T-graph with its tree representation.
    Gen {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix; writes `<out>.graph` and `<out>.cert.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report chordality, cliques, separators, leaf cliques and edge classes.
    Analyze {
        g: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the acceptance checks.
    Selftest {
        #[arg(long, value_enum, default_value_t = ProfileArg::Quick)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrupt the oracle fixture; the run is expected to fail.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Quick,
    Full,
}

fn read_graph(path: &Path) -> Result<Graph, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Graph::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn input_error(msg: String) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INPUT)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Iso { g1, g2, d_max, json } => cmd_iso(&g1, &g2, d_max, json),
        Command::Decompose { g, d } => cmd_decompose(&g, d),
        Command::Gen { d, n, seed, out } => cmd_gen(d, n, seed, &out),
        Command::Analyze { g, json } => cmd_analyze(&g, json),
        Command::Selftest { profile, seed, inject_fault, json } => cmd_selftest(profile, seed, inject_fault, json),
    }
}

fn cmd_iso(p1: &Path, p2: &Path, d_max: usize, json: bool) -> ExitCode {
    if d_max < 2 {
        return input_error("--d-max must be at least 2".into());
    }
    let (g1, g2) = match (read_graph(p1), read_graph(p2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return input_error(e),
    };
    let (verdict, d) = is_isomorphic_upto(&g1, &g2, d_max);
    let report = verdict.report(d);
    if json {
        println!("{}", serde_json::to_string(&report).expect("serializable"));
    } else {
        match &verdict {
            Verdict::Isomorphic(w) => {
                println!("isomorphic (d = {d})");
                let pairs: Vec<String> = w.iter().enumerate().map(|(u, v)| format!("{u}->{v}")).collect();
                println!("witness: {}", pairs.join(" "));
            }
            Verdict::NotIsomorphic => println!("not isomorphic (d = {d})"),
            Verdict::NotTGraph(ev) => println!("not a T-graph with at most {d_max} leaves: {ev}"),
        }
    }
    ExitCode::from(match verdict {
        Verdict::Isomorphic(_) => EXIT_ISO,
        Verdict::NotIsomorphic => EXIT_NOT_ISO,
        Verdict::NotTGraph(_) => EXIT_NOT_T,
    })
}

#[derive(Serialize)]
struct DecomposeFailure {
    error: &'static str,
    d: usize,
    evidence: Option<Evidence>,
    message: String,
}

fn cmd_decompose(path: &Path, d: usize) -> ExitCode {
    if d < 2 {
        return input_error("--d must be at least 2".into());
    }
    let g = match read_graph(path) {
        Ok(g) => g,
        Err(e) => return input_error(e),
    };
    match canonical_decomposition(&g, d) {
        Ok(dec) => {
            println!("{}", dec.to_json());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (error, evidence) = match &e {
                DecomposeError::NotChordal => ("not_chordal", None),
                DecomposeError::NotTGraph { evidence, .. } => ("not_t_graph", Some(evidence.clone())),
                DecomposeError::BadSeparator(_) => ("bad_separator", None),
            };
            let out = DecomposeFailure { error, d, evidence, message: e.to_string() };
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            ExitCode::from(EXIT_NOT_T)
        }
    }
}

fn cmd_gen(d: usize, n: usize, seed: u64, out: &Path) -> ExitCode {
    if d < 2 {
        return input_error("--d must be at least 2".into());
    }
    let (g, rep) = random_t_graph(d, n, seed);
    debug_assert!(verify_t_representation(&g, &rep));
    let graph_path = with_suffix(out, "graph");
    let cert_path = with_suffix(out, "cert.json");
    let written = fs::write(&graph_path, g.to_text()).and_then(|_| fs::write(&cert_path, rep.to_json()));
    if let Err(e) = written {
        return input_error(format!("{}: {e}", out.display()));
    }
    println!("{}", graph_path.display());
    println!("{}", cert_path.display());
    ExitCode::SUCCESS
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct EdgeReport {
    cliques: (usize, usize),
    weight: usize,
    class: &'static str,
}

#[derive(Serialize)]
struct AnalyzeReport {
    n: usize,
    m: usize,
    chordal: bool,
    components: usize,
    maximal_cliques: Vec<Vec<usize>>,
    minimal_separators: Vec<Vec<usize>>,
    leaf_cliques: Vec<Vec<usize>>,
    clique_graph_edges: Vec<EdgeReport>,
}

fn analyze(g: &Graph) -> AnalyzeReport {
    let comps = g.components();
    let mut report = AnalyzeReport {
        n: g.n(),
        m: g.m(),
        chordal: is_chordal(g).is_some(),
        components: comps.len(),
        maximal_cliques: Vec::new(),
        minimal_separators: Vec::new(),
        leaf_cliques: Vec::new(),
        clique_graph_edges: Vec::new(),
    };
    if !report.chordal {
        return report;
    }
    report.maximal_cliques = maximal_cliques(g).expect("chordal").into_iter().map(|c| c.0).collect();
    report.minimal_separators = minimal_separators(g).expect("chordal").into_iter().map(|s| s.vertices).collect();
    // Clique-graph machinery runs per component; indices refer to `maximal_cliques`.
    for comp in &comps {
        let (h, map) = g.induced(comp);
        let w = weighted_clique_graph(&h).expect("chordal");
        let lift = |c: &[usize]| {
            let mut v: Vec<usize> = c.iter().map(|&x| map[x]).collect();
            v.sort_unstable();
            v
        };
        let global: Vec<usize> = w
            .cliques
            .iter()
            .map(|c| report.maximal_cliques.iter().position(|k| *k == lift(&c.0)).expect("clique present"))
            .collect();
        for i in leaf_clique_indices(&w) {
            report.leaf_cliques.push(lift(&w.cliques[i].0));
        }
        for (&(i, j, weight), class) in w.edges.iter().zip(classify_edges(&w)) {
            let class = match class {
                EdgeClass::Indispensable => "indispensable",
                EdgeClass::Unnecessary => "unnecessary",
                EdgeClass::Optional => "optional",
            };
            let (a, b) = (global[i], global[j]);
            report.clique_graph_edges.push(EdgeReport { cliques: (a.min(b), a.max(b)), weight, class });
        }
    }
    report.leaf_cliques.sort();
    report.clique_graph_edges.sort_by_key(|e| e.cliques);
    report
}

fn cmd_analyze(path: &Path, json: bool) -> ExitCode {
    let g = match read_graph(path) {
        Ok(g) => g,
        Err(e) => return input_error(e),
    };
    let r = analyze(&g);
    if json {
        println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
        return ExitCode::SUCCESS;
    }
    println!("n = {}, m = {}, components = {}", r.n, r.m, r.components);
    println!("chordal: {}", r.chordal);
    if !r.chordal {
        return ExitCode::SUCCESS;
    }
    let fmt = |c: &Vec<usize>| format!("{c:?}");
    println!("maximal cliques ({}):", r.maximal_cliques.len());
    for (i, c) in r.maximal_cliques.iter().enumerate() {
        println!("  C{i} {}", fmt(c));
    }
    println!("minimal separators ({}):", r.minimal_separators.len());
    for s in &r.minimal_separators {
        println!("  {}", fmt(s));
    }
    println!("leaf cliques ({}):", r.leaf_cliques.len());
    for c in &r.leaf_cliques {
        println!("  {}", fmt(c));
    }
    println!("clique graph edges ({}):", r.clique_graph_edges.len());
    for e in &r.clique_graph_edges {
        println!("  C{} - C{} weight {} {}", e.cliques.0, e.cliques.1, e.weight, e.class);
    }
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct SelftestSummary {
    profile: &'static str,
    seed: u64,
    passed: bool,
    criteria: Vec<tgraph::selftest::CriterionReport>,
}

fn cmd_selftest(profile: ProfileArg, seed: u64, inject_fault: bool, json: bool) -> ExitCode {
    let (p, name) = match profile {
        ProfileArg::Quick => (Profile::Quick, "quick"),
        ProfileArg::Full => (Profile::Full, "full"),
    };
    let reports = run_all(p, seed, Faults { flip_oracle_edge: inject_fault });
    let passed = reports.iter().all(|r| r.passed);
    if json {
        let s = SelftestSummary { profile: name, seed, passed, criteria: reports };
        println!("{}", serde_json::to_string_pretty(&s).expect("serializable"));
    } else {
        for r in &reports {
            println!("{}", r.line());
        }
        println!("{}", if passed { "selftest passed" } else { "selftest FAILED" });
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
