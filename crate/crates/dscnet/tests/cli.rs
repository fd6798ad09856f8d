use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dscnet::format::{read_json, read_trace, write_json, write_trace, EdgeSpec, Instance, ModelSpec, NodeSpec, Solution};
use serde_json::Value;
use tempfile::TempDir;

fn dscnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dscnet")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_instance(dir: &TempDir, name: &str, inst: &Instance) -> PathBuf {
    let p = dir.path().join(name);
    write_json(inst, Some(&p)).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn nodes(n: usize) -> Vec<NodeSpec> {
    (0..n).map(|id| NodeSpec { id, x: None, y: None }).collect()
}

fn edge(tail: usize, head: usize, capacity: f64, cost: f64) -> EdgeSpec {
    EdgeSpec { tail, head, capacity, cost }
}

/// Two correlated sources with direct edges of cost 1 and 10.
fn two_source(capacity: f64) -> Instance {
    Instance {
        nodes: nodes(3),
        edges: vec![edge(0, 2, capacity, 1.0), edge(1, 2, capacity, 10.0)],
        sources: vec![0, 1],
        terminals: vec![2],
        model: Some(ModelSpec::GaussianCovariance { covariance: vec![vec![1.0, 0.8], vec![0.8, 1.0]], delta: 0.05 }),
    }
}

fn solve(dir: &TempDir, problem: &str, inst: &Path, extra: &[&str]) -> (Output, PathBuf, PathBuf) {
    let sol = dir.path().join(format!("{problem}.json"));
    let trace = dir.path().join(format!("{problem}.csv"));
    let mut args = vec!["solve", problem, "--instance", s(inst), "--output", s(&sol), "--trace", s(&trace)];
    args.extend_from_slice(extra);
    (dscnet(&args), sol, trace)
}

fn verify(inst: &Path, sol: &Path) -> Value {
    let o = dscnet(&["verify", "--instance", s(inst), "--solution", s(sol)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn generate_defaults_reproduce_the_multicast_setup() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("standard.json");
    let o = dscnet(&["generate", "--nodes", "50", "--sources", "10", "--terminals", "3", "--seed", "7", "--output", s(&p)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let inst: Instance = read_json(&p).unwrap();
    assert_eq!((inst.nodes.len(), inst.edges.len(), inst.sources.len(), inst.terminals.len()), (50, 286, 10, 3));
    assert_eq!(inst.model, Some(ModelSpec::default_sw()));
    // Byte-identical on a second run, and the parsed value round-trips.
    let bare = dscnet(&["generate"]);
    assert_eq!(bare.stdout, std::fs::read(&p).unwrap());
    let again = dir.path().join("again.json");
    write_json(&inst, Some(&again)).unwrap();
    assert_eq!(read_json::<Instance>(&again).unwrap(), inst);
}

#[test]
fn missing_instance_is_a_usage_error() {
    let o = dscnet(&["solve", "sw"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--instance"));
    assert_eq!(code(&dscnet(&["solve", "nonsense", "--instance", "x.json"])), 2);
}

#[test]
fn ensure_feasible_gives_up_on_hostile_parameters() {
    let o = dscnet(&["generate", "--near-capacity", "1e-6", "--far-capacity", "1e-6", "--ensure-feasible", "--nodes", "12", "--sources", "3"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no servable instance"), "{}", stderr(&o));
}

#[test]
fn two_source_solve_and_verify() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "two.json", &two_source(100.0));
    let (o, sol, trace) = solve(&dir, "sw", &inst, &["--step-a", "8", "--step-alpha", "0.8", "--burnin", "50"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("cost"));
    let header = std::fs::read_to_string(&trace).unwrap();
    assert!(header.starts_with("iter,dual_value,primal_cost,avg_primal_cost,max_infeasibility,step\n"));
    let report = verify(&inst, &sol);
    assert_eq!(report["passes"], true, "{report}");
    assert!(report["oracle"]["gap"].as_f64().unwrap().abs() <= 5e-3);

    // Files round-trip.
    let parsed: Solution = read_json(&sol).unwrap();
    let copy = dir.path().join("copy.json");
    write_json(&parsed, Some(&copy)).unwrap();
    assert_eq!(read_json::<Solution>(&copy).unwrap(), parsed);
    let t = read_trace(&trace).unwrap();
    assert!(!t.is_empty());
    let copy = dir.path().join("copy.csv");
    write_trace(&t, &copy).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(&trace).unwrap());
    let averaged = t.rows.iter().filter(|r| !r.avg_primal_cost.is_nan()).count();
    assert!(averaged > 0 && averaged < t.len());
}

#[test]
fn verify_names_the_broken_node_and_subset() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "two.json", &two_source(100.0));
    let (o, sol, _) = solve(&dir, "sw", &inst, &[]);
    assert_eq!(code(&o), 0);
    let good: Solution = read_json(&sol).unwrap();

    let mut bad_flow = good.clone();
    bad_flow.x[0][0] += 1.0;
    let p = dir.path().join("bad_flow.json");
    write_json(&bad_flow, Some(&p)).unwrap();
    let report = verify(&inst, &p);
    assert_eq!(report["passes"], false);
    let flow = check(&report, "flow");
    assert_eq!(flow["passes"], false);
    assert!(flow["detail"].as_str().unwrap().contains("balance at node"), "{flow}");

    let mut bad_rate = good;
    bad_rate.rates[0][1] = 0.0;
    let p = dir.path().join("bad_rate.json");
    write_json(&bad_rate, Some(&p)).unwrap();
    let region = verify(&inst, &p);
    let region = check(&region, "region");
    assert_eq!(region["passes"], false);
    assert!(region["detail"].as_str().unwrap().contains("worst subset ["), "{region}");
}

#[test]
fn infeasible_instance_exits_with_witness() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "thin.json", &two_source(0.5));
    let (o, _, _) = solve(&dir, "sw", &inst, &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("cannot receive sources"), "{}", stderr(&o));
}

#[test]
fn iteration_cap_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "two.json", &two_source(100.0));
    let (o, sol, _) = solve(&dir, "sw", &inst, &["--max-iters", "5"]);
    assert_eq!(code(&o), 3);
    let parsed: Value = serde_json::from_str(&std::fs::read_to_string(sol).unwrap()).unwrap();
    assert_eq!(parsed["status"], "iteration_cap");
}

fn one_edge_ceo() -> Instance {
    Instance {
        nodes: nodes(2),
        edges: vec![edge(0, 1, 10.0, 1.0)],
        sources: vec![0],
        terminals: vec![1],
        model: Some(ModelSpec::Ceo { sigma_x2: 1.0, sigma_i2: vec![1.0], distortion: 0.6 }),
    }
}

#[test]
fn single_sink_problems_solve_and_verify() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "one.json", &one_edge_ceo());
    let (o, sol, _) = solve(&dir, "ceo", &inst, &["--step", "10", "--burnin", "100"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let parsed: Solution = read_json(&sol).unwrap();
    assert!((parsed.cost - 0.8047).abs() < 1e-3);
    assert_eq!(verify(&inst, &sol)["passes"], true);

    let (o, sol, _) = solve(&dir, "lifetime", &inst, &["--energy", "200", "--p-tx", "1.0", "--p-rx", "0.5", "--p-sense", "0.001"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("lifetime"));
    let parsed: Solution = read_json(&sol).unwrap();
    let expected = 1.001 * (0.5 * 3f64.ln() + 0.5 * (1.0f64 / 0.6).ln()) / 200.0;
    assert!((parsed.gamma.unwrap() - expected).abs() < 1e-6 * expected);
    let report = verify(&inst, &sol);
    assert_eq!(report["passes"], true, "{report}");
}

#[test]
fn multicast_model_is_required_for_sw() {
    let dir = TempDir::new().unwrap();
    let inst = write_instance(&dir, "one.json", &one_edge_ceo());
    let (o, _, _) = solve(&dir, "sw", &inst, &[]);
    assert_eq!(code(&o), 2);
}
