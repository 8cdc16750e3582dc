use std::fs;
use std::path::Path;

use graphon_isfe::cli::{ingest_edge_list, main_with, parse_pgm, shuffle_vertices, top_k_subgraph};
use graphon_isfe::generators::read_step_graphon;

fn run(args: &[&str]) -> u8 {
    main_with(std::iter::once("isfe").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_ingest_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    let latents = dir.path().join("u.txt");
    assert_eq!(
        run(&["generate", "--graphon", "sbm2:0.5,0.9,0.1", "--n", "80", "--seed", "3", "--out", s(&edges), "--latents", s(&latents)]),
        0
    );
    assert_eq!(fs::read_to_string(&latents).unwrap().lines().count(), 80);
    let g = ingest_edge_list(&edges).unwrap();
    assert!(g.n() <= 80 && g.num_edges() > 0);

    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        assert_eq!(run(&["ingest", "--input", s(&edges), "--top-k", "40", "--shuffle", "--seed", "9", "--out", s(out)]), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let expected = shuffle_vertices(&top_k_subgraph(&g, 40).unwrap(), 9);
    let got = ingest_edge_list(&a).unwrap();
    assert_eq!(got.num_edges(), expected.num_edges());
}

#[test]
fn estimate_writes_a_step_graphon_and_image() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    let step = dir.path().join("w.txt");
    let image = dir.path().join("w.pgm");
    assert_eq!(run(&["generate", "--graphon", "sbm2:0.5,0.8,0.2", "--n", "120", "--seed", "1", "--out", s(&edges)]), 0);
    let code = run(&[
        "estimate", "--input", s(&edges), "--ell", "4", "--iters", "3", "--init", "degree:2", "--out", s(&step),
        "--render", s(&image), "--resolution", "16",
    ]);
    assert_eq!(code, 0);
    let w = read_step_graphon(&step).unwrap();
    assert!(w.k() >= 2);
    let (width, height, payload) = parse_pgm(&fs::read(&image).unwrap()).unwrap();
    assert_eq!((width, height, payload.len()), (16, 16, 256));
}

#[test]
fn estimate_with_preset() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    let step = dir.path().join("w.txt");
    assert_eq!(run(&["generate", "--graphon", "gradient", "--n", "300", "--seed", "2", "--out", s(&edges)]), 0);
    assert_eq!(run(&["estimate", "--input", s(&edges), "--preset", "nips", "--out", s(&step)]), 0);
    assert!(read_step_graphon(&step).unwrap().k() >= 90);
    assert_eq!(run(&["estimate", "--input", s(&edges), "--preset", "no-such-preset"]), 2);
}

#[test]
fn evaluate_is_deterministic_apart_from_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let code = run(&[
            "evaluate", "--graphon", "irm:3,3,2.9", "--n", "30,60", "--seeds", "3", "--ell", "5", "--iters", "3",
            "--init", "random:3", "--seed", "17", "--out", s(out),
        ]);
        assert_eq!(code, 0);
    }
    let strip = |p: &Path| -> Vec<String> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let rows = strip(&a);
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0], "graphon,estimator,n,seed,iterations,mse");
    assert_eq!(rows, strip(&b));
    let summary = |p: &Path| {
        let mut name = p.as_os_str().to_owned();
        name.push(".summary.csv");
        fs::read(name).unwrap()
    };
    assert_eq!(summary(&a), summary(&b));
}

#[test]
fn theorem_command() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.txt");
    fs::write(
        &config,
        "n=200\nk=20\np=0.5\nq0=1\nq1=0\ntau=1\ntau_prime=1\nepsilon=0.5\nxi=0.001\ntrials=10\nseed=4\n",
    )
    .unwrap();
    let report = dir.path().join("report.txt");
    let trials = dir.path().join("trials.csv");
    assert_eq!(run(&["theorem", "--config", s(&config), "--out", s(&report), "--trials-csv", s(&trials)]), 0);
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.lines().any(|l| l == "empirical_frequency=1.0"), "{text}");
    assert!(text.lines().any(|l| l == "conditions_met=false"));
    assert_eq!(fs::read_to_string(&trials).unwrap().lines().count(), 11);

    let again = dir.path().join("again.txt");
    assert_eq!(run(&["theorem", "--config", s(&config), "--out", s(&again)]), 0);
    assert_eq!(fs::read(&report).unwrap(), fs::read(&again).unwrap());

    fs::write(&config, "n=200\nk=2\nthis is not a config\n").unwrap();
    assert_eq!(run(&["theorem", "--config", s(&config)]), 2);
}

#[test]
fn render_constants() {
    let dir = tempfile::tempdir().unwrap();
    for (c, byte) in [("0", 255u8), ("1", 0), ("0.5", 128)] {
        let out = dir.path().join(format!("c{c}.pgm"));
        assert_eq!(run(&["render", "--graphon", &format!("constant:{c}"), "--resolution", "9", "--out", s(&out)]), 0);
        let (_, _, payload) = parse_pgm(&fs::read(&out).unwrap()).unwrap();
        assert!(payload.iter().all(|&b| b == byte));
    }
    assert_eq!(run(&["render", "--graphon", "constant:0.5", "--out", "/nonexistent/dir/x.pgm"]), 2);
}
