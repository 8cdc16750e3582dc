//! Graphon families: constant, stochastic block models, the infinite
//! relational model, the gradient graphon, and step graphons read from file.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::graphon::{AnalyticGraphon, Graphon, StepGraphon};
use crate::rng::stream;

/// Two-block SBM: blocks of width `p` and `1 - p`, density `q0` within and
/// `q1` across.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SbmSpec {
    pub p: f64,
    pub q0: f64,
    pub q1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IrmSpec {
    /// Chinese restaurant process concentration.
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    /// Number of CRP arrivals used to approximate the limiting block widths.
    pub customers: usize,
}

impl IrmSpec {
    pub const DEFAULT_CUSTOMERS: usize = 10_000;

    pub fn new(alpha: f64, a: f64, b: f64) -> Self {
        IrmSpec {
            alpha,
            a,
            b,
            customers: Self::DEFAULT_CUSTOMERS,
        }
    }
}

pub fn constant(c: f64) -> Result<StepGraphon> {
    StepGraphon::constant(c)
}

pub fn sbm2(spec: SbmSpec) -> Result<StepGraphon> {
    let SbmSpec { p, q0, q1 } = spec;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("block width p = {p} must lie in (0, 1)")));
    }
    sbm_general(vec![p, 1.0 - p], Array2::from_shape_vec((2, 2), vec![q0, q1, q1, q0]).expect("2x2"))
}

pub fn sbm_general(widths: Vec<f64>, block_values: Array2<f64>) -> Result<StepGraphon> {
    StepGraphon::new(widths, block_values)
}

/// IRM graphon: CRP block proportions with iid `Beta(a, b)` block values,
/// one per unordered pair of blocks.
pub fn irm(spec: IrmSpec, seed: u64) -> Result<StepGraphon> {
    let IrmSpec { alpha, a, b, customers } = spec;
    if customers == 0 {
        return Err(Error::invalid("IRM needs at least one customer"));
    }
    if !(alpha > 0.0 && a > 0.0 && b > 0.0) {
        return Err(Error::invalid(format!("IRM parameters must be positive (alpha={alpha}, a={a}, b={b})")));
    }
    let mut rng = stream("irm", seed);
    let mut tables: Vec<usize> = Vec::new();
    for seated in 0..customers {
        let r: f64 = rng.gen::<f64>() * (alpha + seated as f64);
        let mut acc = 0.0;
        let mut chosen = None;
        for (t, &count) in tables.iter().enumerate() {
            acc += count as f64;
            if r < acc {
                chosen = Some(t);
                break;
            }
        }
        match chosen {
            Some(t) => tables[t] += 1,
            None => tables.push(1),
        }
    }
    let k = tables.len();
    let beta = Beta::new(a, b).map_err(|e| Error::invalid(format!("beta distribution: {e}")))?;
    let mut values = Array2::zeros((k, k));
    for i in 0..k {
        for j in i..k {
            let v: f64 = beta.sample(&mut rng);
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    let widths = tables.iter().map(|&c| c as f64 / customers as f64).collect();
    StepGraphon::new(widths, values)
}

/// `W(x, y) = ((1 - x) + (1 - y)) / 2`.
pub fn gradient() -> AnalyticGraphon {
    AnalyticGraphon::new("gradient", |x, y| ((1.0 - x) + (1.0 - y)) / 2.0)
}

/// Either kind of graphon, as produced by a spec string.
#[derive(Clone, Debug)]
pub enum AnyGraphon {
    Step(StepGraphon),
    Analytic(AnalyticGraphon),
}

impl Graphon for AnyGraphon {
    fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            AnyGraphon::Step(w) => w.value(x, y),
            AnyGraphon::Analytic(w) => w.value(x, y),
        }
    }

    fn latent_kernel<'a>(&'a self, latents: &'a [f64]) -> Box<dyn Fn(usize, usize) -> f64 + 'a> {
        match self {
            AnyGraphon::Step(w) => w.latent_kernel(latents),
            AnyGraphon::Analytic(w) => w.latent_kernel(latents),
        }
    }
}

/// Parsed graphon spec string: `constant:c`, `sbm2:p,q0,q1`, `gradient`,
/// `irm:alpha,a,b`, or `file:PATH`.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphonSpec {
    Constant(f64),
    Sbm2(SbmSpec),
    Gradient,
    Irm(IrmSpec),
    File(String),
}

fn parse_reals(kind: &str, args: &str, count: usize) -> Result<Vec<f64>> {
    let vals = args
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::invalid(format!("{kind}: {e}")))?;
    if vals.len() != count {
        return Err(Error::invalid(format!("{kind} expects {count} values, got {}", vals.len())));
    }
    Ok(vals)
}

impl FromStr for GraphonSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a)),
            None => (s.trim(), None),
        };
        match (kind, args) {
            ("gradient", None) => Ok(GraphonSpec::Gradient),
            ("constant", Some(a)) => Ok(GraphonSpec::Constant(parse_reals(kind, a, 1)?[0])),
            ("sbm2", Some(a)) => {
                let v = parse_reals(kind, a, 3)?;
                Ok(GraphonSpec::Sbm2(SbmSpec { p: v[0], q0: v[1], q1: v[2] }))
            }
            ("irm", Some(a)) => {
                let v = parse_reals(kind, a, 3)?;
                Ok(GraphonSpec::Irm(IrmSpec::new(v[0], v[1], v[2])))
            }
            ("file", Some(path)) if !path.is_empty() => Ok(GraphonSpec::File(path.to_string())),
            _ => Err(Error::invalid(format!("unrecognized graphon spec '{s}'"))),
        }
    }
}

impl GraphonSpec {
    /// Builds the graphon; `seed` only matters for `irm`.
    pub fn build(&self, seed: u64) -> Result<AnyGraphon> {
        Ok(match self {
            GraphonSpec::Constant(c) => AnyGraphon::Step(constant(*c)?),
            GraphonSpec::Sbm2(spec) => AnyGraphon::Step(sbm2(*spec)?),
            GraphonSpec::Gradient => AnyGraphon::Analytic(gradient()),
            GraphonSpec::Irm(spec) => AnyGraphon::Step(irm(*spec, seed)?),
            GraphonSpec::File(path) => AnyGraphon::Step(read_step_graphon(path)?),
        })
    }
}

/// Parses the step-graphon matrix format: first line the widths, then one
/// line per row of the value matrix, all whitespace-separated.
pub fn parse_step_graphon(text: &str) -> Result<StepGraphon> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        rows.push((idx + 1, vals));
    }
    let Some(((_, widths), matrix)) = rows.split_first() else {
        return Err(Error::Parse {
            line: 0,
            message: "empty step graphon file".into(),
        });
    };
    let k = widths.len();
    if matrix.len() != k {
        return Err(Error::Parse {
            line: matrix.last().map_or(1, |r| r.0),
            message: format!("expected {k} matrix rows, found {}", matrix.len()),
        });
    }
    let mut values = Array2::zeros((k, k));
    for (i, (line, row)) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {k} values, found {}", row.len()),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    StepGraphon::new(widths.clone(), values)
}

pub fn read_step_graphon(path: impl AsRef<Path>) -> Result<StepGraphon> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_step_graphon(&text)
}

/// Inverse of [`parse_step_graphon`], using round-trip float formatting.
pub fn format_step_graphon(w: &StepGraphon) -> String {
    let mut out = String::new();
    let join = |vals: &mut dyn Iterator<Item = f64>| vals.map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{}", join(&mut w.widths().iter().copied()));
    for row in w.values().rows() {
        let _ = writeln!(out, "{}", join(&mut row.iter().copied()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sbm2_examples() {
        let w = sbm2(SbmSpec { p: 0.5, q0: 0.7, q1: 0.3 }).unwrap();
        assert_eq!(w.widths(), &[0.5, 0.5]);
        assert_eq!(w.values(), &array![[0.7, 0.3], [0.3, 0.7]]);
        let w = sbm2(SbmSpec { p: 0.3, q0: 0.7, q1: 0.3 }).unwrap();
        assert_eq!(w.widths(), &[0.3, 0.7]);
        let w = sbm2(SbmSpec { p: 0.3, q0: 0.4, q1: 0.4 }).unwrap();
        for (x, y) in [(0.1, 0.9), (0.2, 0.25), (0.8, 0.6)] {
            assert_eq!(w.eval(x, y).unwrap(), 0.4);
        }
        assert!(sbm2(SbmSpec { p: 0.0, q0: 0.7, q1: 0.3 }).is_err());
        assert!(sbm2(SbmSpec { p: 1.0, q0: 0.7, q1: 0.3 }).is_err());
    }

    #[test]
    fn sbm_general_examples() {
        assert_eq!(sbm_general(vec![1.0], array![[0.2]]).unwrap(), constant(0.2).unwrap());
        assert_eq!(
            sbm_general(vec![0.5, 0.5], array![[0.7, 0.3], [0.3, 0.7]]).unwrap(),
            sbm2(SbmSpec { p: 0.5, q0: 0.7, q1: 0.3 }).unwrap()
        );
        assert!(sbm_general(vec![0.5, 0.5], array![[0.7]]).is_err());
        assert!(sbm_general(vec![0.5, 0.5], array![[0.7, 0.3], [0.2, 0.7]]).is_err());
    }

    #[test]
    fn constant_examples() {
        assert_eq!(constant(0.5).unwrap().values()[[0, 0]], 0.5);
        assert!(constant(1.0).is_ok());
        assert!(constant(0.0).is_ok());
        assert!(constant(1.01).is_err());
    }

    #[test]
    fn gradient_examples() {
        let w = gradient();
        assert_eq!(w.eval(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(w.eval(1.0, 1.0).unwrap(), 0.0);
        assert!((w.eval(0.2, 0.6).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn irm_is_valid_and_deterministic() {
        let spec = IrmSpec::new(3.0, 3.0, 2.9);
        for seed in 0..20 {
            let w = irm(spec, seed).unwrap();
            assert!(w.k() >= 1);
            assert_eq!(w, irm(spec, seed).unwrap());
        }
        assert!(irm(IrmSpec { customers: 0, ..spec }, 0).is_err());
        assert!(irm(IrmSpec::new(0.0, 1.0, 1.0), 0).is_err());
    }

    #[test]
    fn irm_block_values_have_beta_mean() {
        // Pool block values across seeds; mean should approach a/(a+b).
        let spec = IrmSpec { customers: 500, ..IrmSpec::new(3.0, 3.0, 2.9) };
        let mut vals = Vec::new();
        for seed in 0..300 {
            let w = irm(spec, seed).unwrap();
            for i in 0..w.k() {
                for j in i..w.k() {
                    vals.push(w.values()[[i, j]]);
                }
            }
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let expect = 3.0 / 5.9;
        // Beta(3, 2.9) variance is ab/((a+b)^2 (a+b+1)).
        let sd = (3.0 * 2.9 / (5.9f64.powi(2) * 6.9)).sqrt();
        assert!((mean - expect).abs() < 4.0 * sd / (vals.len() as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn irm_tiny_alpha_gives_one_block() {
        let spec = IrmSpec {
            alpha: 1e-9,
            a: 2.0,
            b: 2.0,
            customers: 1000,
        };
        let w = irm(spec, 3).unwrap();
        assert_eq!(w.k(), 1);
        assert_eq!(w.widths(), &[1.0]);
    }

    #[test]
    fn irm_class_count_grows_with_alpha() {
        let mean_k = |alpha: f64| {
            let spec = IrmSpec { customers: 1000, ..IrmSpec::new(alpha, 1.0, 1.0) };
            (0..100).map(|s| irm(spec, s).unwrap().k() as f64).sum::<f64>() / 100.0
        };
        assert!(mean_k(3.0) > mean_k(0.3));
    }

    #[test]
    fn spec_strings() {
        assert_eq!("constant:0.5".parse::<GraphonSpec>().unwrap(), GraphonSpec::Constant(0.5));
        assert_eq!(
            "sbm2:0.5,0.7,0.3".parse::<GraphonSpec>().unwrap(),
            GraphonSpec::Sbm2(SbmSpec { p: 0.5, q0: 0.7, q1: 0.3 })
        );
        assert_eq!("gradient".parse::<GraphonSpec>().unwrap(), GraphonSpec::Gradient);
        assert_eq!("irm:3,3,2.9".parse::<GraphonSpec>().unwrap(), GraphonSpec::Irm(IrmSpec::new(3.0, 3.0, 2.9)));
        assert_eq!("file:w.txt".parse::<GraphonSpec>().unwrap(), GraphonSpec::File("w.txt".into()));
        for bad in ["", "sbm2:0.5,0.7", "constant", "gradient:1", "foo:1", "constant:x"] {
            assert!(bad.parse::<GraphonSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn step_graphon_file_format() {
        let w = parse_step_graphon("0.25 0.75\n0.9 0.1\n0.1 0.4\n").unwrap();
        assert_eq!(w.widths(), &[0.25, 0.75]);
        assert_eq!(w.values(), &array![[0.9, 0.1], [0.1, 0.4]]);
        assert_eq!(parse_step_graphon(&format_step_graphon(&w)).unwrap(), w);
        let third = irm(IrmSpec::new(3.0, 3.0, 2.9), 8).unwrap();
        assert_eq!(parse_step_graphon(&format_step_graphon(&third)).unwrap(), third);
        match parse_step_graphon("0.5 0.5\n0.1 0.2\n0.2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_step_graphon("0.5 0.5\n0.1 x\n0.2 0.1\n").is_err());
        assert!(parse_step_graphon("").is_err());
    }
}
