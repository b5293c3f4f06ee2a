//! TOML experiment configuration. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dyadic::RepresentationResolution;
use crate::error::{Error, Result};
use crate::functional_1d::QuadratureResolution;
use crate::model::{Domain1D, FunctionalParams, Function1D};
use crate::slicing_nd::{ConvexBody, FunctionND, NdVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sweep,
    DyadicCheck,
    CellBound,
    GammaLiminf,
    FamilySearch,
    SlicingCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sweep => "sweep",
            Self::DyadicCheck => "dyadic_check",
            Self::CellBound => "cell_bound",
            Self::GammaLiminf => "gamma_liminf",
            Self::FamilySearch => "family_search",
            Self::SlicingCheck => "slicing_check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub gamma: f64,
    pub p: f64,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl ParamsSpec {
    pub fn at(&self, lambda: f64) -> Result<FunctionalParams> {
        FunctionalParams::new(self.gamma, self.p, lambda, self.dim)
    }
}

/// One-dimensional function, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Step { breakpoints: Vec<f64>, values: Vec<f64> },
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
    GridSamples { lo: f64, hi: f64, samples: Vec<f64> },
    LinearRamp { slope: f64 },
    Cantor { level: u32 },
    Indicator { lo: f64, hi: f64 },
    UnitStep { at: f64 },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<Function1D> {
        match self {
            Self::Step { breakpoints, values } => Function1D::step(breakpoints.clone(), values.clone()),
            Self::PiecewiseLinear { knots, values } => Function1D::piecewise_linear(knots.clone(), values.clone()),
            Self::GridSamples { lo, hi, samples } => Function1D::grid_samples(*lo, *hi, samples.clone()),
            Self::LinearRamp { slope } => Function1D::linear_ramp(*slope),
            Self::Cantor { level } => Function1D::cantor(*level),
            Self::Indicator { lo, hi } => Function1D::indicator(*lo, *hi),
            Self::UnitStep { at } => Function1D::unit_step(*at),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub intervals: Vec<[f64; 2]>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain1D> {
        Domain1D::new(self.intervals.iter().map(|&[a, b]| (a, b)).collect())
    }
}

/// `count` geometrically spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LambdaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite()) || self.count == 0 {
            return Err(Error::Config(format!("lambda grid needs 0 < min <= max and count >= 1, got {self:?}")));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let ratio = (self.max / self.min).ln() / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min * (ratio * i as f64).exp() })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolutionSpec {
    pub nodes_per_octave: usize,
    pub octaves: usize,
    pub delta_cap: Option<f64>,
    pub dyadic_depth: u32,
    pub dyadic_delta_nodes: usize,
    pub dyadic_x_nodes: usize,
}

impl Default for ResolutionSpec {
    fn default() -> Self {
        let q = QuadratureResolution::default();
        let d = RepresentationResolution::default();
        Self {
            nodes_per_octave: q.nodes_per_octave,
            octaves: q.octaves,
            delta_cap: q.delta_cap,
            dyadic_depth: d.depth,
            dyadic_delta_nodes: d.delta_nodes,
            dyadic_x_nodes: d.x_nodes,
        }
    }
}

impl ResolutionSpec {
    pub fn quadrature(&self) -> QuadratureResolution {
        QuadratureResolution {
            nodes_per_octave: self.nodes_per_octave,
            octaves: self.octaves,
            delta_cap: self.delta_cap,
        }
    }

    pub fn representation(&self) -> RepresentationResolution {
        RepresentationResolution { depth: self.dyadic_depth, delta_nodes: self.dyadic_delta_nodes, x_nodes: self.dyadic_x_nodes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellBoundSpec {
    pub k: u32,
    pub epsilon: f64,
    /// Multiples of `2^((k+1)(1+gamma/p)) (B - A)`; when absent the
    /// `lambda_grid` is used as given.
    pub lambda_factors: Option<Vec<f64>>,
}

/// The family `u_lambda` of the liminf harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `u_lambda = u`.
    Identity,
    /// Every jump of a piecewise-constant `u` replaced by a linear ramp of
    /// width `width0 * lambda^(-exponent)`.
    Mollified { width0: f64, exponent: f64 },
    /// `u + amplitude0 lambda^(-exponent) w(frequency0 lambda^frequency_exponent x)`
    /// with `w` a triangle wave for continuous `u` and a square wave for
    /// piecewise-constant `u`.
    Oscillation { amplitude0: f64, exponent: f64, frequency0: f64, frequency_exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiminfSpec {
    pub family: FamilySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub plateaus: usize,
    pub lambda: f64,
    pub budget: usize,
    #[serde(default = "default_a")]
    pub big_a: f64,
    #[serde(default = "default_b")]
    pub big_b: f64,
}

fn default_a() -> f64 {
    0.0
}

fn default_b() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicCheckSpec {
    /// Allowed relative discrepancy on top of the reported error.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Size of the randomized walk corpus for the structural checks.
    #[serde(default)]
    pub walks: usize,
}

fn default_rel_tol() -> f64 {
    0.02
}

/// N-dimensional function on the box `[lo, hi]` (unit cube by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionNdSpec {
    CoordinateRamp { axis: usize, slope: f64 },
    BallIndicator { centre: Vec<f64>, radius: f64 },
    BoxIndicator { lo: Vec<f64>, hi: Vec<f64> },
    Tensor { axis: usize, profile: FunctionSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlicingSpec {
    pub function: FunctionNdSpec,
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
    pub samples: u64,
    pub directions: usize,
    pub offsets: usize,
}

impl SlicingSpec {
    pub fn build(&self, dim: usize) -> Result<FunctionND> {
        let lo = self.box_lo.clone().unwrap_or_else(|| vec![0.0; dim]);
        let hi = self.box_hi.clone().unwrap_or_else(|| vec![1.0; dim]);
        let variant = match &self.function {
            FunctionNdSpec::CoordinateRamp { axis, slope } => NdVariant::CoordinateRamp { axis: *axis, slope: *slope },
            FunctionNdSpec::BallIndicator { centre, radius } => {
                NdVariant::IndicatorConvex(ConvexBody::Ball { centre: centre.clone(), radius: *radius })
            }
            FunctionNdSpec::BoxIndicator { lo, hi } => NdVariant::IndicatorConvex(ConvexBody::Box { lo: lo.clone(), hi: hi.clone() }),
            FunctionNdSpec::Tensor { axis, profile } => NdVariant::TensorOf { profile: profile.build()?, axis: *axis },
        };
        FunctionND::new(lo, hi, variant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Output path stem: `<output>.csv` and `<output>.json`.
    pub output: Option<String>,
    pub params: ParamsSpec,
    pub function: Option<FunctionSpec>,
    pub domain: Option<DomainSpec>,
    pub lambda_grid: Option<LambdaGrid>,
    #[serde(default)]
    pub resolution: ResolutionSpec,
    pub cell_bound: Option<CellBoundSpec>,
    pub liminf: Option<LiminfSpec>,
    pub search: Option<SearchSpec>,
    pub dyadic: Option<DyadicCheckSpec>,
    pub slicing: Option<SlicingSpec>,
}

fn require<'a, T>(field: &'a Option<T>, name: &str, kind: ExperimentKind) -> Result<&'a T> {
    field.as_ref().ok_or_else(|| Error::Config(format!("experiment kind `{}` needs a [{name}] section", kind.name())))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn function_1d(&self) -> Result<Function1D> {
        require(&self.function, "function", self.kind)?.build()
    }

    pub fn domain_1d(&self) -> Result<Domain1D> {
        require(&self.domain, "domain", self.kind)?.build()
    }

    pub fn lambdas(&self) -> Result<Vec<f64>> {
        require(&self.lambda_grid, "lambda_grid", self.kind)?.values()
    }

    /// Checks the sections each kind needs, and that referenced functions
    /// can be constructed.
    pub fn validate(&self) -> Result<()> {
        self.params.at(1.0)?;
        let one_d = !matches!(self.kind, ExperimentKind::SlicingCheck);
        if one_d {
            if self.params.dim != 1 {
                return Err(Error::Config(format!("experiment kind `{}` is one-dimensional", self.kind.name())));
            }
            let f = self.function_1d()?;
            f.check_domain(&self.domain_1d()?)?;
        }
        match self.kind {
            ExperimentKind::Sweep => {
                if require(&self.lambda_grid, "lambda_grid", self.kind)?.count < 3 {
                    return Err(Error::Config("a sweep needs at least 3 lambda values".into()));
                }
            }
            ExperimentKind::DyadicCheck => {
                self.lambdas()?;
            }
            ExperimentKind::CellBound => {
                let cb = require(&self.cell_bound, "cell_bound", self.kind)?;
                if !(cb.epsilon > 0.0) {
                    return Err(Error::Config("cell_bound.epsilon must be positive".into()));
                }
                if cb.lambda_factors.is_none() {
                    self.lambdas()?;
                }
            }
            ExperimentKind::GammaLiminf => {
                self.lambdas()?;
                match &require(&self.liminf, "liminf", self.kind)?.family {
                    FamilySpec::Identity => {}
                    FamilySpec::Mollified { width0, exponent } => {
                        if !(*width0 > 0.0 && *exponent > 0.0) {
                            return Err(Error::Config("mollified family needs width0 > 0 and exponent > 0 so the width vanishes".into()));
                        }
                    }
                    FamilySpec::Oscillation { amplitude0, exponent, frequency0, .. } => {
                        if !(*amplitude0 >= 0.0 && *exponent > 0.0) {
                            return Err(Error::Config("oscillation family needs amplitude0 >= 0 and exponent > 0 so the amplitude vanishes".into()));
                        }
                        if !(*frequency0 > 0.0) {
                            return Err(Error::Config("oscillation family needs frequency0 > 0".into()));
                        }
                    }
                }
            }
            ExperimentKind::FamilySearch => {
                let s = require(&self.search, "search", self.kind)?;
                if !(s.lambda > 0.0) || !(s.big_b >= s.big_a) {
                    return Err(Error::Config("search needs lambda > 0 and big_b >= big_a".into()));
                }
                if self.domain_1d()?.intervals().len() != 1 {
                    return Err(Error::Config("family search needs a single interval".into()));
                }
            }
            ExperimentKind::SlicingCheck => {
                let s = require(&self.slicing, "slicing", self.kind)?;
                s.build(self.params.dim)?;
                self.lambdas()?;
            }
        }
        Ok(())
    }
}
