//! Numerical-integration study: estimate the mean of a test function over
//! `[0, 1]^p` with different design methods, with and without losing one
//! slice of runs, and report root-mean-square errors.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decorrelate::{reduce_correlations, DEFAULT_ITERATIONS};
use crate::error::{Error, Result};
use crate::generate::{
    generate_independent_lhds, generate_midpoint_lhd, generate_randomized_lhd,
    sliced_from_partition,
};
use crate::partition::partition_levels;
use crate::quadrature::integrate_2d;
use crate::types::{uniform_permutation, Design, LevelPartition, RngStream, SliceSizes};

/// Which coordinates enter the log-product test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Variant {
    /// `log(x1 x2 x2 x4 x5)`; `x3` is unused.
    #[default]
    Literal,
    /// `log(x1 x2 x3 x4 x5)`.
    X3,
}

impl FromStr for F1Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "literal" => Ok(Self::Literal),
            "x3" => Ok(Self::X3),
            other => Err(Error::Parse(format!("unknown f1 variant {other:?}"))),
        }
    }
}

impl fmt::Display for F1Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Literal => "literal",
            Self::X3 => "x3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Integrand {
    F1(F1Variant),
    /// `log(x1^(-1/2) + x2^(-1/2))`.
    F2,
    /// Constant function; any dimension.
    Constant(f64),
}

fn check_domain(x: &[f64]) -> Result<()> {
    match x.iter().find(|&&v| v.is_nan() || v <= 0.0) {
        Some(v) => Err(Error::InvalidArgument(format!(
            "coordinate {v} is outside (0, 1]"
        ))),
        None => Ok(()),
    }
}

pub fn eval_f1(x: &[f64], variant: F1Variant) -> Result<f64> {
    if x.len() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 5,
            found: x.len(),
        });
    }
    check_domain(x)?;
    let product = match variant {
        F1Variant::Literal => x[0] * x[1] * x[1] * x[3] * x[4],
        F1Variant::X3 => x[0] * x[1] * x[2] * x[3] * x[4],
    };
    Ok(product.ln())
}

pub fn eval_f2(x: &[f64]) -> Result<f64> {
    if x.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: x.len(),
        });
    }
    check_domain(x)?;
    Ok((x[0].powf(-0.5) + x[1].powf(-0.5)).ln())
}

/// Mean of `f2` over the unit square by adaptive cubature at tolerance `tol`.
///
/// The substitution `x = s^3` turns the logarithmic edge singularities into a
/// bounded integrand.
pub fn f2_mean_by_cubature(tol: f64) -> Result<f64> {
    let g = |s: f64, r: f64| {
        let (a, b) = (s * s * s, r * r * r);
        9.0 * s * s * r * r * (a.powf(-0.5) + b.powf(-0.5)).ln()
    };
    Ok(integrate_2d(g, (0.0, 1.0), (0.0, 1.0), tol)?.value)
}

/// Reference mean of `f2`, computed once at tolerance `1e-12`.
pub fn f2_true_mean() -> f64 {
    static MEAN: OnceLock<f64> = OnceLock::new();
    *MEAN.get_or_init(|| f2_mean_by_cubature(1e-12).expect("f2 cubature converges"))
}

impl Integrand {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::F1(_) => Some(5),
            Self::F2 => Some(2),
            Self::Constant(_) => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match *self {
            Self::F1(variant) => eval_f1(x, variant),
            Self::F2 => eval_f2(x),
            Self::Constant(c) => Ok(c),
        }
    }

    /// Exact mean over the unit cube. Each `log x_i` term integrates to `-1`
    /// and both `f1` variants carry five of them.
    pub fn true_mean(&self) -> f64 {
        match *self {
            Self::F1(_) => -5.0,
            Self::F2 => f2_true_mean(),
            Self::Constant(c) => c,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::F1(v) => format!("f1 ({v})"),
            Self::F2 => "f2".into(),
            Self::Constant(c) => format!("constant {c}"),
        }
    }
}

/// Design methods under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    /// Single randomized LHD with `n` runs.
    Rlh,
    /// Single midpoint LHD.
    Mlh,
    /// Single midpoint LHD after the correlation sweep.
    Clh,
    /// Independent midpoint LHDs, one per slice.
    Imlh,
    /// Independent decorrelated midpoint LHDs.
    Iclh,
    /// Sliced LHD.
    Slh,
    /// Sliced LHD after the correlation sweep.
    Cslh,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Rlh,
        Method::Mlh,
        Method::Clh,
        Method::Imlh,
        Method::Iclh,
        Method::Slh,
        Method::Cslh,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rlh => "RLH",
            Self::Mlh => "MLH",
            Self::Clh => "CLH",
            Self::Imlh => "IMLH",
            Self::Iclh => "ICLH",
            Self::Slh => "SLH",
            Self::Cslh => "CSLH",
        }
    }

    /// Whether the design comes with its own slice structure. Single-design
    /// methods have their runs dealt out to the slices at random instead.
    pub fn is_sliced(&self) -> bool {
        matches!(self, Self::Imlh | Self::Iclh | Self::Slh | Self::Cslh)
    }

    fn stream_label(&self) -> u64 {
        *self as u64 + 1
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        if upper == "FSD" {
            return Err(Error::MethodUnavailable(
                "FSD (flexible sliced designs) is not implemented".into(),
            ));
        }
        Method::ALL
            .into_iter()
            .find(|m| m.name() == upper)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Every run completes.
    AllComplete,
    /// One slice, chosen uniformly at random, is lost.
    OneSliceFails,
}

impl Scenario {
    pub fn number(&self) -> usize {
        match self {
            Self::AllComplete => 1,
            Self::OneSliceFails => 2,
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "all-complete" => Ok(Self::AllComplete),
            "2" | "one-slice-fails" => Ok(Self::OneSliceFails),
            other => Err(Error::Parse(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub integrand: Integrand,
    pub sizes: SliceSizes,
    pub dim: usize,
    pub methods: Vec<Method>,
    pub scenarios: Vec<Scenario>,
    pub replicates: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// The `f1` setup: four slices of 17, 13, 11 and 7 runs in five dimensions.
    pub fn f1(variant: F1Variant, replicates: usize, seed: u64) -> Self {
        Self {
            integrand: Integrand::F1(variant),
            sizes: SliceSizes::new(vec![17, 13, 11, 7]).expect("valid sizes"),
            dim: 5,
            methods: Method::ALL.to_vec(),
            scenarios: vec![Scenario::AllComplete, Scenario::OneSliceFails],
            replicates,
            seed,
        }
    }

    /// The `f2` setup: three slices of 9, 7 and 6 runs in two dimensions.
    pub fn f2(replicates: usize, seed: u64) -> Self {
        Self {
            integrand: Integrand::F2,
            sizes: SliceSizes::new(vec![9, 7, 6]).expect("valid sizes"),
            dim: 2,
            methods: Method::ALL.to_vec(),
            scenarios: vec![Scenario::AllComplete, Scenario::OneSliceFails],
            replicates,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.integrand.dim() {
            if d != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: self.dim,
                });
            }
        }
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be positive".into()));
        }
        if self.methods.is_empty() || self.scenarios.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one method and one scenario are required".into(),
            ));
        }
        if self.sizes.slices() < 2 && self.scenarios.contains(&Scenario::OneSliceFails) {
            return Err(Error::InvalidArgument(
                "losing a slice needs at least two slices".into(),
            ));
        }
        Ok(())
    }

    /// Parses the TOML config format; see `configs/` for examples.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        raw.try_into()
    }
}

/// On-disk form of [`ExperimentConfig`].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    integrand: String,
    #[serde(default)]
    f1_variant: Option<String>,
    #[serde(default)]
    constant: Option<f64>,
    sizes: Vec<usize>,
    dim: usize,
    #[serde(default)]
    methods: Option<Vec<String>>,
    #[serde(default)]
    scenarios: Option<Vec<String>>,
    replicates: usize,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<ConfigFile> for ExperimentConfig {
    type Error = Error;

    fn try_from(raw: ConfigFile) -> Result<Self> {
        let integrand = match raw.integrand.to_ascii_lowercase().as_str() {
            "f1" => Integrand::F1(match &raw.f1_variant {
                Some(v) => v.parse()?,
                None => F1Variant::default(),
            }),
            "f2" => Integrand::F2,
            "constant" => Integrand::Constant(raw.constant.ok_or_else(|| {
                Error::Parse("integrand \"constant\" needs a `constant` value".into())
            })?),
            other => return Err(Error::Parse(format!("unknown integrand {other:?}"))),
        };
        let methods = match raw.methods {
            Some(names) => names
                .iter()
                .map(|m| m.parse())
                .collect::<Result<Vec<_>>>()?,
            None => Method::ALL.to_vec(),
        };
        let scenarios = match raw.scenarios {
            Some(names) => names
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<_>>>()?,
            None => vec![Scenario::AllComplete, Scenario::OneSliceFails],
        };
        let config = Self {
            integrand,
            sizes: SliceSizes::new(raw.sizes)?,
            dim: raw.dim,
            methods,
            scenarios,
            replicates: raw.replicates,
            seed: raw.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseCell {
    pub method: Method,
    pub scenario: Scenario,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub integrand: String,
    pub sizes: Vec<usize>,
    pub dim: usize,
    pub replicates: usize,
    pub seed: u64,
    pub true_mean: f64,
    pub cells: Vec<RmseCell>,
}

impl RmseReport {
    pub fn get(&self, method: Method, scenario: Scenario) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.scenario == scenario)
            .map(|c| c.rmse)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table with one row per scenario and one column per method.
    /// The flexible sliced design column is always `n/a`.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let header = ["RLH", "MLH", "CLH", "IMLH", "ICLH", "FSD", "SLH", "CSLH"];
        out.push_str(&format!("{:<16} {:>8}", "Function", "Scenario"));
        for h in header {
            out.push_str(&format!(" {h:>8}"));
        }
        out.push('\n');
        let mut scenarios: Vec<Scenario> = self.cells.iter().map(|c| c.scenario).collect();
        scenarios.sort();
        scenarios.dedup();
        for (i, scenario) in scenarios.into_iter().enumerate() {
            let label = if i == 0 { self.integrand.as_str() } else { "" };
            out.push_str(&format!("{label:<16} {:>8}", scenario.number()));
            for h in header {
                let cell = match h.parse::<Method>() {
                    Ok(m) => self
                        .get(m, scenario)
                        .map_or_else(|| "-".to_string(), |v| format!("{v:.4}")),
                    Err(_) => "n/a".to_string(),
                };
                out.push_str(&format!(" {cell:>8}"));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for RmseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}

/// Prepared, per-run state shared by all replicates of one method.
struct Plan<'a> {
    method: Method,
    sizes: &'a SliceSizes,
    dim: usize,
    partition: &'a LevelPartition,
    whole: &'a LevelPartition,
}

impl Plan<'_> {
    fn design(&self, stream: &RngStream) -> Design {
        let n = self.sizes.total();
        match self.method {
            Method::Rlh => generate_randomized_lhd(n, self.dim, stream),
            Method::Mlh => generate_midpoint_lhd(n, self.dim, stream),
            Method::Clh => {
                let d = generate_midpoint_lhd(n, self.dim, stream);
                reduce_correlations(d, self.whole, DEFAULT_ITERATIONS)
                    .expect("design matches partition")
                    .0
            }
            Method::Imlh => generate_independent_lhds(self.sizes, self.dim, stream, false),
            Method::Iclh => generate_independent_lhds(self.sizes, self.dim, stream, true),
            Method::Slh => sliced_from_partition(self.partition, self.dim, stream),
            Method::Cslh => {
                let d = sliced_from_partition(self.partition, self.dim, stream);
                reduce_correlations(d, self.partition, DEFAULT_ITERATIONS)
                    .expect("design matches partition")
                    .0
            }
        }
    }
}

/// Estimation errors of one replicate: `(all runs, one slice lost)`.
fn replicate_errors(
    plan: &Plan<'_>,
    integrand: &Integrand,
    true_mean: f64,
    stream: &RngStream,
    with_failure: bool,
) -> Result<(f64, Option<f64>)> {
    let design = plan.design(&stream.split(0));
    let outputs = design
        .rows()
        .map(|row| integrand.eval(row.as_slice().expect("rows are contiguous")))
        .collect::<Result<Vec<f64>>>()?;
    let n = outputs.len();
    let full = outputs.iter().sum::<f64>() / n as f64 - true_mean;

    if !with_failure {
        return Ok((full, None));
    }
    let failure = stream.split(1);
    let t = plan.sizes.slices();
    let lost = uniform_permutation(t, &failure.split(0))[0] - 1;
    let lost_rows = plan.sizes.rows(lost);
    let kept: f64 = if plan.method.is_sliced() {
        outputs
            .iter()
            .enumerate()
            .filter(|(i, _)| !lost_rows.contains(i))
            .map(|(_, y)| y)
            .sum()
    } else {
        // deal the runs to the slices at random, then drop one slice's share
        let deal = uniform_permutation(n, &failure.split(1));
        deal.iter()
            .enumerate()
            .filter(|(pos, _)| !lost_rows.contains(pos))
            .map(|(_, &row)| outputs[row - 1])
            .sum()
    };
    let survivors = n - lost_rows.len();
    Ok((full, Some(kept / survivors as f64 - true_mean)))
}

/// Runs every requested method for `replicates` replicates.
///
/// Replicates run in parallel; each draws from its own split of the seed, and
/// squared errors are summed in replicate order, so results do not depend on
/// scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RmseReport> {
    config.validate()?;
    let true_mean = config.integrand.true_mean();
    let partition = partition_levels(&config.sizes);
    let whole = LevelPartition::whole(config.sizes.total())?;
    let root = RngStream::new(config.seed);
    let with_failure = config.scenarios.contains(&Scenario::OneSliceFails);

    let mut cells = Vec::new();
    for &method in &config.methods {
        let plan = Plan {
            method,
            sizes: &config.sizes,
            dim: config.dim,
            partition: &partition,
            whole: &whole,
        };
        let method_stream = root.split(method.stream_label());
        let errors = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                replicate_errors(
                    &plan,
                    &config.integrand,
                    true_mean,
                    &method_stream.split(r as u64),
                    with_failure,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        for &scenario in &config.scenarios {
            let sum_sq: f64 = errors
                .iter()
                .map(|(full, lost)| match scenario {
                    Scenario::AllComplete => full * full,
                    Scenario::OneSliceFails => lost.map_or(0.0, |e| e * e),
                })
                .sum();
            cells.push(RmseCell {
                method,
                scenario,
                rmse: (sum_sq / config.replicates as f64).sqrt(),
            });
        }
    }

    Ok(RmseReport {
        integrand: config.integrand.label(),
        sizes: config.sizes.as_slice().to_vec(),
        dim: config.dim,
        replicates: config.replicates,
        seed: config.seed,
        true_mean,
        cells,
    })
}
