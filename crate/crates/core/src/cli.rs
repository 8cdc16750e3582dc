//! Command-line driver and the file plumbing behind it: edge-list ingestion,
//! top-K extraction, PGM rendering, experiment sweeps and theorem reports.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::analysis::{monte_carlo_theorem, SbmAnalysisConfig, Verdict};
use crate::error::{Error, Result};
use crate::generators::{format_step_graphon, GraphonSpec};
use crate::graph::Graph;
use crate::graphon::{sample, sample_graph, Graphon};
use crate::isfe::{initial_partition, isfe_run, value_estimate, InitArg, IsfeConfig};
use crate::metrics::mse;
use crate::rng::{child_seeds, stream};

/// Reads a whitespace-separated edge list; see [`parse_edge_list`].
pub fn ingest_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text)
}

/// One edge per line as two nonnegative integer ids; `#` lines are comments.
/// Ids are renumbered in order of first appearance, self-loops dropped and
/// repeated or reversed edges collapsed.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut ids = std::collections::HashMap::new();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: idx + 1, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(parse_err(format!("expected two vertex ids, found '{line}'")));
        }
        let mut ends = [0usize; 2];
        for (slot, tok) in ends.iter_mut().zip(&tokens) {
            let id: u64 = tok.parse().map_err(|_| parse_err(format!("bad vertex id '{tok}'")))?;
            let next = ids.len();
            *slot = *ids.entry(id).or_insert(next);
        }
        edges.push((ends[0], ends[1]));
    }
    if ids.is_empty() {
        return Err(Error::invalid("edge list contains no edges"));
    }
    let mut g = Graph::new(ids.len());
    for (a, b) in edges {
        if a != b {
            g.set_edge_unchecked(a, b);
        }
    }
    Ok(g)
}

/// Edge-list text of `g` (`i j` with `i < j`), preceded by a size comment.
pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("# vertices {} edges {}\n", g.n(), g.num_edges());
    for (i, j) in g.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

/// Induced subgraph on the `k` highest-degree vertices (ties to the smaller
/// index), keeping their original relative order.
pub fn top_k_subgraph(g: &Graph, k: usize) -> Result<Graph> {
    if k == 0 || k > g.n() {
        return Err(Error::invalid(format!("top {k} of {} vertices", g.n())));
    }
    let degrees = g.degrees();
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(degrees[v]), v));
    let mut keep = order[..k].to_vec();
    keep.sort_unstable();
    g.induced_subgraph(&keep)
}

/// Relabels vertices by a uniform permutation drawn from `seed`.
pub fn shuffle_vertices(g: &Graph, seed: u64) -> Graph {
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.shuffle(&mut stream("shuffle", seed));
    g.permute(&perm).expect("a shuffled identity is a permutation")
}

fn pgm(r: usize, pixel: impl Fn(usize, usize) -> f64) -> Vec<u8> {
    let mut out = format!("P5\n{r} {r}\n255\n").into_bytes();
    out.reserve(r * r);
    for a in 0..r {
        for b in 0..r {
            // Round half up; darker means closer to 1.
            let level = (255.0 * (1.0 - pixel(a, b)) + 0.5).floor();
            out.push(level.clamp(0.0, 255.0) as u8);
        }
    }
    out
}

/// PGM (P5) image of `w` at resolution `r`: pixel `(a, b)` shows
/// `w((b + 0.5)/r, (a + 0.5)/r)`.
pub fn render_pgm_bytes(w: &dyn Graphon, r: usize) -> Result<Vec<u8>> {
    if r == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let mid = |i: usize| (i as f64 + 0.5) / r as f64;
    Ok(pgm(r, |a, b| w.value(mid(b), mid(a))))
}

/// PGM image of a square matrix, one pixel per entry.
pub fn render_matrix_pgm_bytes(m: &Array2<f64>) -> Result<Vec<u8>> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::invalid(format!("cannot render a {:?} matrix", m.dim())));
    }
    Ok(pgm(m.nrows(), |a, b| m[[a, b]]))
}

pub fn render_pgm(w: &dyn Graphon, r: usize, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &render_pgm_bytes(w, r)?)
}

/// Splits a P5 image into `(width, height, payload)`.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |m: &str| Error::invalid(format!("not a P5 image: {m}"));
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not text"))?);
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad("unsupported magic or maxval"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let payload = &bytes[pos + 1..];
    if payload.len() != width * height {
        return Err(bad("payload size"));
    }
    Ok((width, height, payload.to_vec()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Estimator {
    /// Iterated ISFE from the initial partition.
    Isfe,
    /// Quotient by the initial partition alone.
    Quotient,
}

impl Estimator {
    fn name(self) -> &'static str {
        match self {
            Estimator::Isfe => "isfe",
            Estimator::Quotient => "quotient",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub graphon: String,
    pub estimator: Estimator,
    pub init: InitArg,
    pub ns: Vec<usize>,
    pub seeds: usize,
    pub isfe: IsfeConfig,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub n: usize,
    pub seed: u64,
    pub iterations: usize,
    pub mse: f64,
    pub runtime_ms: f64,
}

/// One sample-and-estimate run; returns `(iterations, mse)`.
fn experiment_run(graphon: &GraphonSpec, spec: &ExperimentSpec, n: usize, seed: u64) -> Result<(usize, f64)> {
    let w = graphon.build(seed)?;
    let s = sample(&w, n, seed)?;
    let init = initial_partition(spec.init.with_seed(seed), &s.graph)?;
    match spec.estimator {
        Estimator::Quotient => Ok((0, mse(&value_estimate(&s.graph, &init)?, &s.value_matrix)?)),
        Estimator::Isfe => {
            let trace = isfe_run(&s.graph, &init, &spec.isfe, Some(&s.value_matrix))?;
            Ok((trace.iterations_run(), mse(trace.final_value_estimate(), &s.value_matrix)?))
        }
    }
}

/// Runs every `(n, seed)` pair (in parallel) and returns rows in
/// `(n, seed index)` order. Seeds derive from the master seed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>> {
    if spec.ns.is_empty() || spec.ns.contains(&0) {
        return Err(Error::invalid("n values must be positive"));
    }
    if spec.seeds == 0 {
        return Err(Error::invalid("at least one seed is required"));
    }
    spec.isfe.validate()?;
    let graphon: GraphonSpec = spec.graphon.parse()?;
    let seeds = child_seeds("experiment", spec.master_seed, spec.seeds);
    let jobs: Vec<(usize, u64)> = spec.ns.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    jobs.par_iter()
        .map(|&(n, seed)| {
            let start = Instant::now();
            let (iterations, mse) = experiment_run(&graphon, spec, n, seed)?;
            Ok(ExperimentRow {
                n,
                seed,
                iterations,
                mse,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect()
}

pub const EXPERIMENT_HEADER: &str = "graphon,estimator,n,seed,iterations,mse,runtime_ms";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn experiment_csv(spec: &ExperimentSpec, rows: &[ExperimentRow]) -> String {
    let mut out = format!("{EXPERIMENT_HEADER}\n");
    let graphon = csv_field(&spec.graphon);
    for r in rows {
        let _ = writeln!(
            out,
            "{graphon},{},{},{},{},{:?},{:.3}",
            spec.estimator.name(),
            r.n,
            r.seed,
            r.iterations,
            r.mse,
            r.runtime_ms
        );
    }
    out
}

/// Per-`n` mean and sample standard deviation of the MSE.
pub fn experiment_summary_csv(spec: &ExperimentSpec, rows: &[ExperimentRow]) -> String {
    let mut out = String::from("graphon,estimator,n,runs,mean_mse,sd_mse,mean_iterations\n");
    let graphon = csv_field(&spec.graphon);
    for &n in &spec.ns {
        let group: Vec<&ExperimentRow> = rows.iter().filter(|r| r.n == n).collect();
        let count = group.len() as f64;
        let mean = group.iter().map(|r| r.mse).sum::<f64>() / count;
        let sd = if group.len() > 1 {
            (group.iter().map(|r| (r.mse - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
        } else {
            0.0
        };
        let iters = group.iter().map(|r| r.iterations as f64).sum::<f64>() / count;
        let _ = writeln!(out, "{graphon},{},{n},{},{mean:?},{sd:?},{iters:?}", spec.estimator.name(), group.len());
    }
    out
}

/// Options of a real-data run shipped with the crate. Datasets are not
/// bundled; the expected sizes are those of the published snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: String,
    pub top_k: usize,
    pub iterations: usize,
    pub ell: usize,
    pub init: InitArg,
    pub expected_vertices: usize,
    pub expected_edges: usize,
}

const BUILTIN_PRESETS: [(&str, &str); 3] = [
    ("nips", include_str!("../presets/nips.preset")),
    ("ca-astroph", include_str!("../presets/ca-astroph.preset")),
    ("epinions", include_str!("../presets/epinions.preset")),
];

impl Preset {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = std::collections::HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected name=value, found '{line}'"),
            })?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| kv.get(k).ok_or_else(|| Error::invalid(format!("preset lacks '{k}'")));
        let int = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|e| Error::invalid(format!("preset {k}: {e}")))
        };
        Ok(Preset {
            name: get("name")?.clone(),
            top_k: int("top_k")?,
            iterations: int("iterations")?,
            ell: int("ell")?,
            init: get("init")?.parse()?,
            expected_vertices: int("expected_vertices")?,
            expected_edges: int("expected_edges")?,
        })
    }

    /// A built-in preset by name, or else a preset file at that path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        match BUILTIN_PRESETS.iter().find(|(n, _)| *n == name_or_path) {
            Some((_, text)) => Preset::parse(text),
            None => {
                let text = fs::read_to_string(name_or_path).map_err(|e| Error::io(name_or_path, e))?;
                Preset::parse(&text)
            }
        }
    }

    /// Describes how an ingested graph differs from the expected size.
    /// Published edge counts sometimes list both directions, so twice the
    /// undirected count also matches.
    pub fn size_mismatch(&self, g: &Graph) -> Option<String> {
        let m = g.num_edges();
        if g.n() == self.expected_vertices && (m == self.expected_edges || 2 * m == self.expected_edges) {
            None
        } else {
            Some(format!(
                "{} expects {} vertices and {} edges; input has {} vertices and {m} edges",
                self.name,
                self.expected_vertices,
                self.expected_edges,
                g.n()
            ))
        }
    }
}

/// Runs the theorem check from a config file, optionally with another
/// seed. Writes the report (and the optional per-trial CSV) and returns the
/// verdict.
pub fn run_theorem(config: &Path, seed: Option<u64>, out: Option<&Path>, trials_csv: Option<&Path>) -> Result<Verdict> {
    let text = fs::read_to_string(config).map_err(|e| Error::io(config, e))?;
    let mut cfg: SbmAnalysisConfig = text.parse()?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = monte_carlo_theorem(&cfg)?;
    emit(out, report.to_key_values().as_bytes())?;
    if let Some(path) = trials_csv {
        write_bytes(path, report.trials_csv().as_bytes())?;
    }
    Ok(report.verdict())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_bytes(p, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

#[derive(Debug, Parser)]
#[command(name = "isfe", version, about = "Graphon estimation with the iterative step-function estimator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Minimum number of classes per iteration.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Threshold decay factor in (0, 1).
    #[arg(long)]
    pub decay: Option<f64>,
    /// Maximum number of iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Initial partition: trivial, discrete, random:k or degree:k.
    #[arg(long)]
    pub init: Option<InitArg>,
    /// Stop once the MSE no longer improves by this much (needs latents).
    #[arg(long)]
    pub stop_threshold: Option<f64>,
}

impl EstimatorArgs {
    fn config(&self, preset: Option<&Preset>) -> IsfeConfig {
        let base = IsfeConfig::default();
        IsfeConfig {
            min_classes: self.ell.or(preset.map(|p| p.ell)).unwrap_or(base.min_classes),
            decay: self.decay.unwrap_or(base.decay),
            max_iterations: self.iters.or(preset.map(|p| p.iterations)).unwrap_or(base.max_iterations),
            stop_threshold: self.stop_threshold.unwrap_or(base.stop_threshold),
            ..base
        }
    }

    fn init(&self, preset: Option<&Preset>) -> InitArg {
        self.init
            .or(preset.map(|p| p.init))
            .unwrap_or(InitArg(crate::isfe::InitKind::Trivial))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a graph from a graphon and write it as an edge list.
    Generate {
        /// constant:c, sbm2:p,q0,q1, gradient, irm:alpha,a,b or file:PATH.
        #[arg(long)]
        graphon: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the latent values, one per line.
        #[arg(long)]
        latents: Option<PathBuf>,
    },
    /// Estimate a step graphon from an edge list.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Built-in preset (nips, ca-astroph, epinions) or a preset file.
        #[arg(long)]
        preset: Option<String>,
        /// Keep only the K highest-degree vertices.
        #[arg(long)]
        top_k: Option<usize>,
        /// Randomly relabel vertices before estimating.
        #[arg(long)]
        shuffle: bool,
        #[command(flatten)]
        estimator: EstimatorArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step-graphon output file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the estimate as a PGM image.
        #[arg(long)]
        render: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
    },
    /// Sweep sample sizes and seeds, reporting the MSE of each run as CSV.
    Evaluate {
        #[arg(long)]
        graphon: String,
        #[arg(long, value_enum, default_value = "isfe")]
        estimator: Estimator,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Number of runs per sample size.
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        #[command(flatten)]
        args: EstimatorArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-n summary file; defaults to the output path with
        /// `.summary.csv` appended.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Render a graphon as a PGM image.
    Render {
        #[arg(long)]
        graphon: String,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean an edge list, optionally keeping the top-K vertices and shuffling.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        shuffle: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo check of the classification guarantee from a config file.
    Theorem {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trial majority fractions as CSV.
        #[arg(long)]
        trials_csv: Option<PathBuf>,
    },
}

fn prepare_graph(input: &Path, top_k: Option<usize>, shuffle: bool, seed: u64) -> Result<Graph> {
    let mut g = ingest_edge_list(input)?;
    if let Some(k) = top_k {
        g = top_k_subgraph(&g, k)?;
    }
    if shuffle {
        g = shuffle_vertices(&g, seed);
    }
    Ok(g)
}

/// Executes a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Generate { graphon, n, seed, out, latents } => {
            let w = graphon.parse::<GraphonSpec>()?.build(seed)?;
            let (g, u) = sample_graph(&w, n, seed)?;
            emit(out.as_deref(), format_edge_list(&g).as_bytes())?;
            if let Some(path) = latents {
                let text: String = u.iter().map(|x| format!("{x:?}\n")).collect();
                write_bytes(&path, text.as_bytes())?;
            }
        }
        Command::Estimate {
            input,
            preset,
            top_k,
            shuffle,
            estimator,
            seed,
            out,
            render,
            resolution,
        } => {
            let preset = preset.as_deref().map(Preset::load).transpose()?;
            if let Some(p) = &preset {
                let full = ingest_edge_list(&input)?;
                if let Some(msg) = p.size_mismatch(&full) {
                    eprintln!("warning: {msg}");
                }
            }
            let top_k = top_k.or(preset.as_ref().map(|p| p.top_k));
            let g = prepare_graph(&input, top_k, shuffle || preset.is_some(), seed)?;
            let cfg = estimator.config(preset.as_ref());
            let init = initial_partition(estimator.init(preset.as_ref()).with_seed(seed), &g)?;
            let trace = isfe_run(&g, &init, &cfg, None)?;
            let w = trace.final_step_graphon();
            eprintln!(
                "{} vertices, {} edges: {} iterations, {} steps",
                g.n(),
                g.num_edges(),
                trace.iterations_run(),
                w.k()
            );
            emit(out.as_deref(), format_step_graphon(w).as_bytes())?;
            if let Some(path) = render {
                render_pgm(w, resolution, path)?;
            }
        }
        Command::Evaluate {
            graphon,
            estimator,
            n,
            seeds,
            args,
            seed,
            out,
            summary,
        } => {
            let spec = ExperimentSpec {
                graphon,
                estimator,
                init: args.init(None),
                ns: n,
                seeds,
                isfe: args.config(None),
                master_seed: seed,
            };
            let rows = run_experiment(&spec)?;
            emit(out.as_deref(), experiment_csv(&spec, &rows).as_bytes())?;
            let summary_text = experiment_summary_csv(&spec, &rows);
            match (summary, out) {
                (Some(path), _) => write_bytes(&path, summary_text.as_bytes())?,
                (None, Some(path)) => {
                    let mut name = path.into_os_string();
                    name.push(".summary.csv");
                    write_bytes(Path::new(&name), summary_text.as_bytes())?;
                }
                (None, None) => eprint!("{summary_text}"),
            }
        }
        Command::Render {
            graphon,
            resolution,
            seed,
            out,
        } => {
            let w = graphon.parse::<GraphonSpec>()?.build(seed)?;
            render_pgm(&w, resolution, out)?;
        }
        Command::Ingest {
            input,
            top_k,
            shuffle,
            seed,
            out,
        } => {
            let g = prepare_graph(&input, top_k, shuffle, seed)?;
            emit(out.as_deref(), format_edge_list(&g).as_bytes())?;
        }
        Command::Theorem {
            config,
            seed,
            out,
            trials_csv,
        } => {
            return Ok(verdict_code(run_theorem(&config, seed, out.as_deref(), trials_csv.as_deref())?));
        }
    }
    Ok(0)
}

/// A failed Monte-Carlo check exits with 1. Unmet conditions are recorded
/// in the report and are not a failure of the check.
fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass | Verdict::ConditionsUnmet | Verdict::NoTrials => 0,
        Verdict::Fail => 1,
    }
}

/// Parses `args` and runs the command. Usage and input errors exit with 2.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
