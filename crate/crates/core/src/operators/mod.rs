//! Maximal operators, Riesz-type potentials and Calderón–Zygmund operators
//! acting on grid functions.

mod cz;

pub use cz::{
    cz_apply, validate_cz_kernel, DiniReport, KernelReport, KernelSpec, ModulusReport, ModulusSpec, SmoothnessReport,
    ValidatedKernel, DEFAULT_FILTER_CONSTANT, DELTA2_CAP,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::GridFunction;
use crate::space::{QuasimetricSpace, RadiusRange};

/// Averages `mu B(x, dilation r)^{-1} int_{B(x, r)} |f|` over representative radii.
fn dilated_averages(f: &GridFunction, space: &QuasimetricSpace, dilation: f64, range: RadiusRange) -> GridFunction {
    let n = space.len();
    let mut out = vec![0.0; n];
    let mut prefix = vec![0.0; n + 1];
    for (x, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &y) in space.neighbors(x).iter().enumerate() {
            acc += f.values()[y].abs() * space.weight(y);
            prefix[j + 1] = acc;
        }
        let mut best = 0.0f64;
        for r in space.representative_radii(x, dilation, range) {
            let k = space.count_within(x, r);
            let avg = if dilation == 1.0 && k == 1 {
                f.values()[space.neighbors(x)[0]].abs()
            } else if dilation == 1.0 {
                prefix[k] / space.prefix_measures(x)[k]
            } else {
                prefix[k] / space.ball_measure(x, dilation * r)
            };
            best = best.max(avg);
        }
        *slot = best;
    }
    GridFunction::new(out).expect("averages are finite")
}

/// Hardy–Littlewood maximal function over balls `B(x, r)`, `0 < r < d_X`.
pub fn maximal(f: &GridFunction, space: &QuasimetricSpace) -> Result<GridFunction> {
    f.check_space(space)?;
    Ok(dilated_averages(f, space, 1.0, RadiusRange::Open))
}

/// `sup_{r > 0} mu B(x, n0 r)^{-1} int_{B(x, r)} |f|`, the denominator ball centered at `x`.
pub fn modified_maximal(f: &GridFunction, space: &QuasimetricSpace, n0: f64) -> Result<GridFunction> {
    f.check_space(space)?;
    if !(n0 >= 1.0) || !n0.is_finite() {
        return Err(Error::InvalidParameter(format!("dilation N0 must be at least 1, got {n0}")));
    }
    Ok(dilated_averages(f, space, n0, RadiusRange::Unbounded))
}

/// Kernel family of a potential operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `d(x, y)^(alpha - gamma)`, `0 < alpha < gamma`.
    Gamma { alpha: f64, gamma: f64 },
    /// `mu B(x, d(x, y))^(alpha - 1)`, `0 < alpha < 1`.
    Measure { alpha: f64 },
    /// `d(x, y)^(alpha - 1)`, `0 < alpha < 1`.
    KAlpha { alpha: f64 },
}

impl PotentialKind {
    pub fn alpha(&self) -> f64 {
        match *self {
            PotentialKind::Gamma { alpha, .. } | PotentialKind::Measure { alpha } | PotentialKind::KAlpha { alpha } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialKind::Gamma { alpha, gamma } if !(alpha > 0.0 && alpha < gamma) => Err(Error::InvalidParameter(
                format!("gamma-kernel potential needs 0 < alpha < gamma, got alpha = {alpha}, gamma = {gamma}"),
            )),
            PotentialKind::Measure { alpha } | PotentialKind::KAlpha { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(Error::InvalidParameter(format!("potential needs 0 < alpha < 1, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value for `x != y`.
    pub fn kernel(&self, space: &QuasimetricSpace, x: usize, y: usize) -> f64 {
        let d = space.dist(x, y);
        match *self {
            PotentialKind::Gamma { alpha, gamma } => d.powf(alpha - gamma),
            PotentialKind::Measure { alpha } => space.ball_measure(x, d).powf(alpha - 1.0),
            PotentialKind::KAlpha { alpha } => d.powf(alpha - 1.0),
        }
    }
}

/// `sum_{y != x} f(y) k(x, y) w_y`; the diagonal is excluded.
pub fn potential(f: &GridFunction, space: &QuasimetricSpace, kind: PotentialKind) -> Result<GridFunction> {
    kind.validate()?;
    f.check_space(space)?;
    let n = space.len();
    let v = f.values();
    let out = (0..n)
        .map(|x| {
            (0..n).filter(|&y| y != x && v[y] != 0.0).map(|y| v[y] * kind.kernel(space, x, y) * space.weight(y)).sum()
        })
        .collect();
    GridFunction::new(out)
}

fn default_filter() -> f64 {
    DEFAULT_FILTER_CONSTANT
}

/// An operator named by its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum OperatorSpec {
    Identity,
    Maximal,
    /// `n0 = None` takes `N0 = C_t (1 + 2 C_s)` of the space.
    ModifiedMaximal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n0: Option<f64>,
    },
    RieszGamma {
        alpha: f64,
        gamma: f64,
    },
    RieszMeasure {
        alpha: f64,
    },
    KAlpha {
        alpha: f64,
    },
    CalderonZygmund {
        kernel: KernelSpec,
        #[serde(default)]
        modulus: ModulusSpec,
        #[serde(default = "default_filter")]
        filter_constant: f64,
    },
}

/// An [`OperatorSpec`] bound to one space; kernels are validated once.
#[derive(Clone, Debug)]
pub struct Operator<'a> {
    space: &'a QuasimetricSpace,
    spec: OperatorSpec,
    kind: Prepared,
}

#[derive(Clone, Debug)]
enum Prepared {
    Identity,
    Maximal,
    ModifiedMaximal(f64),
    Potential(PotentialKind),
    Cz(Box<ValidatedKernel>),
}

impl<'a> Operator<'a> {
    pub fn new(spec: OperatorSpec, space: &'a QuasimetricSpace) -> Result<Self> {
        let kind = match &spec {
            OperatorSpec::Identity => Prepared::Identity,
            OperatorSpec::Maximal => Prepared::Maximal,
            OperatorSpec::ModifiedMaximal { n0 } => {
                let n0 = n0.unwrap_or_else(|| space.quasimetric_constants().n0);
                if !(n0 >= 1.0) || !n0.is_finite() {
                    return Err(Error::InvalidParameter(format!("dilation N0 must be at least 1, got {n0}")));
                }
                Prepared::ModifiedMaximal(n0)
            }
            OperatorSpec::RieszGamma { alpha, gamma } => potential_kind(PotentialKind::Gamma { alpha: *alpha, gamma: *gamma })?,
            OperatorSpec::RieszMeasure { alpha } => potential_kind(PotentialKind::Measure { alpha: *alpha })?,
            OperatorSpec::KAlpha { alpha } => potential_kind(PotentialKind::KAlpha { alpha: *alpha })?,
            OperatorSpec::CalderonZygmund { kernel, modulus, filter_constant } => Prepared::Cz(Box::new(
                ValidatedKernel::new(kernel.clone(), modulus.clone(), space, *filter_constant)?,
            )),
        };
        Ok(Self { space, spec, kind })
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn space(&self) -> &'a QuasimetricSpace {
        self.space
    }

    /// Validation report of a Calderón–Zygmund kernel.
    pub fn kernel_report(&self) -> Option<&KernelReport> {
        match &self.kind {
            Prepared::Cz(k) => Some(k.report()),
            _ => None,
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match &self.kind {
            Prepared::Identity => {
                f.check_space(self.space)?;
                Ok(f.clone())
            }
            Prepared::Maximal => maximal(f, self.space),
            Prepared::ModifiedMaximal(n0) => modified_maximal(f, self.space, *n0),
            Prepared::Potential(kind) => potential(f, self.space, *kind),
            Prepared::Cz(k) => cz_apply(f, self.space, k),
        }
    }
}

fn potential_kind(kind: PotentialKind) -> Result<Prepared> {
    kind.validate()?;
    Ok(Prepared::Potential(kind))
}
