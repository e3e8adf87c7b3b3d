//! Scale functions `phi` (integrability weight) and `A` (Morrey-exponent
//! shift), the parameter bundle of a generalized grand Morrey norm, the
//! auxiliary exponent functions used for Riesz potentials, and the
//! closed-form operator constants.

mod constants;
mod potential;

pub use constants::{theoretical_constant, ConstantKind, ConstantValue, FreeConstants};
pub use potential::{
    sobolev_exponent, AdmissibilityMode, AdmissibilityReport, AuxFn, InverseResult, PotentialSetup,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which role a scale function plays; validation differs per role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Phi,
    A,
}

/// Which auxiliary function a composed spec inverts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InverseKind {
    /// Inverse of `phi_bar`, built from the outer function as `A_2`.
    PhiBar,
    /// Inverse of `phi_tilde`, built from the outer function as `A_1`.
    PhiTilde,
}

/// Exponent data needed to evaluate `phi_bar` or `phi_tilde` inside a composed spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseOf {
    pub kind: InverseKind,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
}

/// Serializable description of a scale function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScaleSpec {
    /// `scale * x^theta`.
    Power {
        theta: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `slope * x`.
    Linear { slope: f64 },
    /// `intercept + slope * x`.
    Affine { intercept: f64, slope: f64 },
    /// `slope * x + log_coef / ln(e / x)` for `x < e`, frozen beyond.
    AffineLog { slope: f64, log_coef: f64 },
    /// Identically zero.
    Zero,
    /// Piecewise-linear through `(x, y)` knots, constant outside the knot range.
    Table { knots: Vec<(f64, f64)> },
    /// `outer(aux^{-1}(x))` where `aux` is `phi_bar` or `phi_tilde` built
    /// from `outer`. Beyond `aux(delta)` the value is frozen at `outer(delta)`.
    Composed { outer: Box<ScaleSpec>, inverse: InverseOf },
}

fn one() -> f64 {
    1.0
}

impl ScaleSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScaleSpec::Power { theta, scale } => scale * x.powf(*theta),
            ScaleSpec::Linear { slope } => slope * x,
            ScaleSpec::Affine { intercept, slope } => intercept + slope * x,
            ScaleSpec::AffineLog { slope, log_coef } => {
                let xl = x.min(std::f64::consts::E);
                slope * x + log_coef / (1.0 - xl.ln())
            }
            ScaleSpec::Zero => 0.0,
            ScaleSpec::Table { knots } => table_eval(knots, x),
            ScaleSpec::Composed { outer, inverse } => {
                let y = potential::invert_aux(inverse, outer, x).map(|r| r.x).unwrap_or(inverse.delta);
                outer.eval(y)
            }
        }
    }

    /// `true` for the identically-zero function.
    pub fn is_zero(&self) -> bool {
        match self {
            ScaleSpec::Zero => true,
            ScaleSpec::Linear { slope } => *slope == 0.0,
            ScaleSpec::Power { scale, .. } => *scale == 0.0,
            _ => false,
        }
    }

    /// Exponent `theta` when this is a pure power `x^theta`.
    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            ScaleSpec::Power { theta, scale } if *scale == 1.0 => Some(*theta),
            ScaleSpec::Linear { slope } if *slope == 1.0 => Some(1.0),
            _ => None,
        }
    }
}

fn table_eval(knots: &[(f64, f64)], x: f64) -> f64 {
    match knots {
        [] => 0.0,
        [(_, y)] => *y,
        _ => {
            if x <= knots[0].0 {
                return knots[0].1;
            }
            let last = knots[knots.len() - 1];
            if x >= last.0 {
                return last.1;
            }
            let k = knots.partition_point(|&(kx, _)| kx <= x);
            let (x0, y0) = knots[k - 1];
            let (x1, y1) = knots[k];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

/// Short textual form: `pow:THETA`, `lin:C`, `affine:A,B`, `alog:S,C`, `zero`,
/// `table:X=Y;X=Y`. Composed specs have no textual form.
impl FromStr for ScaleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidScale(format!("cannot parse scale function `{s}`"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "zero" => Ok(ScaleSpec::Zero),
            "pow" => Ok(ScaleSpec::Power { theta: num(rest)?, scale: 1.0 }),
            "lin" => Ok(ScaleSpec::Linear { slope: num(rest)? }),
            "affine" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                Ok(ScaleSpec::Affine { intercept: num(a)?, slope: num(b)? })
            }
            "alog" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                Ok(ScaleSpec::AffineLog { slope: num(a)?, log_coef: num(b)? })
            }
            "table" => {
                let knots = rest
                    .split(';')
                    .map(|kv| {
                        let (x, y) = kv.split_once('=').ok_or_else(bad)?;
                        Ok((num(x)?, num(y)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidScale("table knots must be strictly increasing".into()));
                }
                Ok(ScaleSpec::Table { knots })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ScaleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleSpec::Power { theta, scale } if *scale == 1.0 => write!(f, "pow:{theta}"),
            ScaleSpec::Power { theta, scale } => write!(f, "{scale}*pow:{theta}"),
            ScaleSpec::Linear { slope } => write!(f, "lin:{slope}"),
            ScaleSpec::Affine { intercept, slope } => write!(f, "affine:{intercept},{slope}"),
            ScaleSpec::AffineLog { slope, log_coef } => write!(f, "alog:{slope},{log_coef}"),
            ScaleSpec::Zero => write!(f, "zero"),
            ScaleSpec::Table { knots } => {
                let parts: Vec<String> = knots.iter().map(|(x, y)| format!("{x}={y}")).collect();
                write!(f, "table:{}", parts.join(";"))
            }
            ScaleSpec::Composed { outer, inverse } => {
                let inv = match inverse.kind {
                    InverseKind::PhiBar => "phi_bar^-1",
                    InverseKind::PhiTilde => "phi_tilde^-1",
                };
                write!(f, "({outer})∘{inv}")
            }
        }
    }
}

/// Number of geometric validation nodes.
const VALIDATION_NODES: usize = 200;
/// Smallest validation node; the limit at `0+` is judged here.
const VALIDATION_FLOOR: f64 = 1e-30;
/// The value at the floor must be below this fraction of `max(1, sup)`.
const VANISHING_FRACTION: f64 = 0.05;

/// Validation outcome stored with every scale function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub upper: f64,
    pub nodes: usize,
    pub value_at_floor: f64,
    pub min_value: f64,
    pub max_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleFunction {
    pub spec: ScaleSpec,
    pub role: Role,
    pub validation: ValidationSummary,
}

impl ScaleFunction {
    /// Validates `spec` for `role` on `(0, p - 1]` using a geometric grid.
    ///
    /// `phi` must be positive, bounded and vanish at `0+`; `A` must be
    /// non-negative, non-decreasing and vanish at `0+`.
    pub fn new(spec: ScaleSpec, role: Role, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
        }
        let upper = p - 1.0;
        let ratio = (upper / VALIDATION_FLOOR).powf(1.0 / (VALIDATION_NODES - 1) as f64);
        let mut xs: Vec<f64> = (0..VALIDATION_NODES).map(|k| VALIDATION_FLOOR * ratio.powi(k as i32)).collect();
        xs[VALIDATION_NODES - 1] = upper;
        let ys: Vec<f64> = xs.iter().map(|&x| spec.eval(x)).collect();

        let name = match role {
            Role::Phi => "phi",
            Role::A => "A",
        };
        if let Some(k) = ys.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidScale(format!("{name} must be bounded; value {} at x = {:e}", ys[k], xs[k])));
        }
        let min_value = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_value = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        match role {
            Role::Phi => {
                if let Some(k) = ys.iter().position(|&y| !(y > 0.0)) {
                    return Err(Error::InvalidScale(format!("phi must be positive; phi({:e}) = {}", xs[k], ys[k])));
                }
            }
            Role::A => {
                if let Some(k) = (1..ys.len()).find(|&k| ys[k] < ys[k - 1] - 1e-12 * ys[k - 1].abs().max(1.0)) {
                    return Err(Error::InvalidScale(format!(
                        "A must be non-decreasing; A({:e}) = {} > A({:e}) = {}",
                        xs[k - 1],
                        ys[k - 1],
                        xs[k],
                        ys[k]
                    )));
                }
                if let Some(k) = ys.iter().position(|&y| y < 0.0) {
                    return Err(Error::InvalidScale(format!("A must be non-negative; A({:e}) = {}", xs[k], ys[k])));
                }
            }
        }
        if ys[0] > VANISHING_FRACTION * max_value.max(1.0) {
            return Err(Error::InvalidScale(format!(
                "{name} must vanish at 0+; {name}({:e}) = {}",
                xs[0], ys[0]
            )));
        }
        Ok(Self {
            spec,
            role,
            validation: ValidationSummary { upper, nodes: VALIDATION_NODES, value_at_floor: ys[0], min_value, max_value },
        })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.spec.eval(x)
    }
}

/// Which normalisation a Morrey-type norm uses in its ball denominator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MorreyVariant {
    /// `mu B(x, r)^lambda`.
    MeasurePower,
    /// `r^(gamma lambda)`.
    RadiusPower { gamma: f64 },
    /// `mu B(x, dilation r)^lambda`.
    Modified { dilation: f64 },
}

impl MorreyVariant {
    pub fn dilation(&self) -> f64 {
        match self {
            MorreyVariant::Modified { dilation } => *dilation,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MorreyVariant::RadiusPower { gamma } if !(gamma > 0.0) => {
                Err(Error::InvalidParameter(format!("radius-power exponent gamma must be positive, got {gamma}")))
            }
            MorreyVariant::Modified { dilation } if !(dilation >= 1.0) => {
                Err(Error::InvalidParameter(format!("dilation must be at least 1, got {dilation}")))
            }
            _ => Ok(()),
        }
    }
}

/// Bisection tolerance for `a = sup{x > 0 : A(x) <= lambda}`.
pub const A_SUP_TOLERANCE: f64 = 1e-10;
const A_SUP_CEILING: f64 = 1e12;

/// `sup{x > 0 : A(x) <= lambda}` for non-decreasing `A`, possibly `+inf`.
pub fn a_supremum(a: &ScaleSpec, lambda: f64) -> f64 {
    if a.eval(f64::MIN_POSITIVE) > lambda {
        return 0.0;
    }
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = 1.0;
    while a.eval(hi) <= lambda {
        lo = hi;
        hi *= 2.0;
        if hi > A_SUP_CEILING {
            return f64::INFINITY;
        }
    }
    // invariant: A(lo) <= lambda < A(hi)
    while hi - lo > 1e-4 * A_SUP_TOLERANCE * lo.max(1e-300) && hi - lo > f64::MIN_POSITIVE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if a.eval(mid) <= lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Parameter bundle of one generalized grand Morrey norm with derived `a` and `s_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrandParams {
    pub p: f64,
    pub lambda: f64,
    pub phi: ScaleFunction,
    pub a: ScaleFunction,
    pub variant: MorreyVariant,
    /// `sup{x > 0 : A(x) <= lambda}`; `None` stands for `+inf`.
    pub a_sup: Option<f64>,
    pub s_max: f64,
}

/// The `epsilon` range of a grand norm: `(0, upper)` or `(0, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRange {
    pub upper: f64,
    pub closed: bool,
}

impl GrandParams {
    pub fn new(p: f64, lambda: f64, phi: ScaleSpec, a: ScaleSpec, variant: MorreyVariant) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")));
        }
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1), got {lambda}")));
        }
        variant.validate()?;
        let phi = ScaleFunction::new(phi, Role::Phi, p)?;
        let a = ScaleFunction::new(a, Role::A, p)?;
        let a_sup = if a.spec.is_zero() { f64::INFINITY } else { a_supremum(&a.spec, lambda) };
        let s_max = (p - 1.0).min(a_sup);
        if !(s_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grandification range is empty: s_max = min(p - 1, a) = {s_max} (a = {a_sup})"
            )));
        }
        Ok(Self { p, lambda, phi, a, variant, a_sup: a_sup.is_finite().then_some(a_sup), s_max })
    }

    /// Convenience constructor for `phi(eps) = eps^theta`.
    pub fn with_theta(p: f64, lambda: f64, theta: f64, a: ScaleSpec, variant: MorreyVariant) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        Self::new(p, lambda, ScaleSpec::Power { theta, scale: 1.0 }, a, variant)
    }

    /// The dilated-ball norm takes its supremum over `0 < eps <= p - 1`; every
    /// other variant uses `0 < eps < s_max`.
    pub fn epsilon_range(&self) -> EpsilonRange {
        match self.variant {
            MorreyVariant::Modified { .. } => EpsilonRange { upper: self.p - 1.0, closed: true },
            _ => EpsilonRange { upper: self.s_max, closed: false },
        }
    }

    /// `phi(eps)^(1 / (p - eps))`.
    #[inline]
    pub fn weight(&self, eps: f64) -> f64 {
        self.phi.eval(eps).powf(1.0 / (self.p - eps))
    }

    /// Morrey exponent `lambda - A(eps)` at a grid node.
    #[inline]
    pub fn shifted_lambda(&self, eps: f64) -> f64 {
        self.lambda - self.a.eval(eps)
    }
}
