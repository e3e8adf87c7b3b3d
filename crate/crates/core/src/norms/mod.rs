//! Lebesgue, grand Lebesgue, Morrey and generalized grand Morrey norms of
//! functions on a finite quasimetric measure space.

mod grid;
mod morrey;

pub use grid::{EpsilonGrid, GridSpec, DEFAULT_GEOMETRIC_NODES, GEOMETRIC_FLOOR, OPEN_END_OFFSET};
pub use morrey::{BallRef, MorreyTable};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scales::{EpsilonRange, GrandParams, MorreyVariant, ScaleSpec};
use crate::space::{QuasimetricSpace, RadiusRange};

/// On-disk form of a function: one value per point, in point order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub values: Vec<f64>,
}

/// Real values indexed like the points of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionFile", into = "FunctionFile")]
pub struct GridFunction {
    values: Vec<f64>,
}

impl TryFrom<FunctionFile> for GridFunction {
    type Error = Error;
    fn try_from(file: FunctionFile) -> Result<Self> {
        GridFunction::new(file.values)
    }
}

impl From<GridFunction> for FunctionFile {
    fn from(f: GridFunction) -> Self {
        FunctionFile { values: f.values }
    }
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("function value at point {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    /// Indicator of `members` on an `n`-point space.
    pub fn indicator(n: usize, members: &[usize]) -> Self {
        let mut values = vec![0.0; n];
        for &i in members {
            values[i] = 1.0;
        }
        Self { values }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn abs(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.abs()).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Errors unless there is exactly one value per point of `space`.
    pub fn check_space(&self, space: &QuasimetricSpace) -> Result<()> {
        if self.values.len() != space.len() {
            return Err(Error::InvalidParameter(format!(
                "function has {} values but the space has {} points",
                self.values.len(),
                space.len()
            )));
        }
        Ok(())
    }
}

/// Value of a norm together with where its suprema were attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub argmax_eps: Option<f64>,
    pub argmax_ball: Option<BallRef>,
    pub grid: Option<GridSpec>,
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")))
    }
}

/// `(sum_i |f_i|^p w_i)^(1/p)` for any `p >= 1`, without range checks.
pub(crate) fn lp_norm(f: &GridFunction, space: &QuasimetricSpace, p: f64) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let s: f64 = f.values().iter().zip(space.weights()).map(|(v, w)| v.abs().powf(p) * w).sum();
    s.powf(1.0 / p)
}

pub fn lebesgue_norm(f: &GridFunction, space: &QuasimetricSpace, p: f64) -> Result<f64> {
    check_p(p)?;
    f.check_space(space)?;
    Ok(lp_norm(f, space, p))
}

/// `sup_{0 < eps < p - 1} eps^(theta / (p - eps)) ||f||_{p - eps}` on `grid`.
pub fn grand_lebesgue_norm_on(
    f: &GridFunction,
    space: &QuasimetricSpace,
    p: f64,
    theta: f64,
    grid: &EpsilonGrid,
) -> Result<NormReport> {
    check_p(p)?;
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    f.check_space(space)?;
    let spec = grid.spec();
    if spec.upper != p - 1.0 || spec.closed {
        return Err(Error::InvalidParameter("grand Lebesgue grids must cover (0, p - 1)".into()));
    }
    if f.is_zero() {
        return Ok(NormReport { value: 0.0, argmax_eps: None, argmax_ball: None, grid: Some(spec) });
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &e in grid.nodes() {
        let v = e.powf(theta / (p - e)) * lp_norm(f, space, p - e);
        if v > best.0 {
            best = (v, e);
        }
    }
    Ok(NormReport { value: best.0, argmax_eps: Some(best.1), argmax_ball: None, grid: Some(spec) })
}

pub fn grand_lebesgue_norm(f: &GridFunction, space: &QuasimetricSpace, p: f64, theta: f64) -> Result<NormReport> {
    check_p(p)?;
    let grid = EpsilonGrid::with_default(EpsilonRange { upper: p - 1.0, closed: false })?;
    grand_lebesgue_norm_on(f, space, p, theta, &grid)
}

/// Radius range a single Morrey norm uses: `0 < r < d_X`, except the
/// dilated-ball norm which takes every `r > 0`.
pub fn default_radius_range(variant: MorreyVariant) -> RadiusRange {
    match variant {
        MorreyVariant::Modified { .. } => RadiusRange::Unbounded,
        _ => RadiusRange::Open,
    }
}

pub fn morrey_norm_in(
    f: &GridFunction,
    space: &QuasimetricSpace,
    p: f64,
    lambda: f64,
    variant: MorreyVariant,
    range: RadiusRange,
) -> Result<NormReport> {
    check_p(p)?;
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    variant.validate()?;
    f.check_space(space)?;
    let table = MorreyTable::new(space, variant, range);
    if f.is_zero() {
        return Ok(NormReport { value: 0.0, argmax_eps: None, argmax_ball: None, grid: None });
    }
    let (value, arg) = table.norm(space, f, p, lambda);
    Ok(NormReport { value, argmax_eps: None, argmax_ball: Some(table.ball(space, arg)), grid: None })
}

/// Supremum over representative balls of `(den(B)^(-lambda) int_B |f|^p)^(1/p)`.
pub fn morrey_norm(
    f: &GridFunction,
    space: &QuasimetricSpace,
    p: f64,
    lambda: f64,
    variant: MorreyVariant,
) -> Result<NormReport> {
    morrey_norm_in(f, space, p, lambda, variant, default_radius_range(variant))
}

/// Per-node Morrey norms of one function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    /// `||f||_{p - eps, lambda - A(eps)}` at every grid node.
    pub morrey: Vec<f64>,
    /// The same times `phi(eps)^(1/(p - eps))`.
    pub weighted: Vec<f64>,
    /// Maximizing table entry per node.
    pub entries: Vec<usize>,
}

/// Evaluates one grand Morrey norm, its `Phi` functional and its per-node
/// profile for many functions over a fixed grid.
#[derive(Clone, Debug)]
pub struct GrandEvaluator<'a> {
    space: &'a QuasimetricSpace,
    params: GrandParams,
    grid: EpsilonGrid,
    table: MorreyTable,
    weights: Vec<f64>,
}

impl<'a> GrandEvaluator<'a> {
    pub fn new(space: &'a QuasimetricSpace, params: GrandParams, grid: EpsilonGrid) -> Result<Self> {
        let range = params.epsilon_range();
        let spec = grid.spec();
        if spec.upper != range.upper || spec.closed != range.closed {
            return Err(Error::InvalidParameter(format!(
                "grid covers (0, {}) but the norm needs (0, {}){}",
                spec.upper,
                range.upper,
                if range.closed { " closed" } else { "" }
            )));
        }
        let table = MorreyTable::new(space, params.variant, RadiusRange::Open);
        let weights = grid.nodes().iter().map(|&e| params.weight(e)).collect();
        Ok(Self { space, params, grid, table, weights })
    }

    pub fn with_default(space: &'a QuasimetricSpace, params: GrandParams) -> Result<Self> {
        let grid = EpsilonGrid::with_default(params.epsilon_range())?;
        Self::new(space, params, grid)
    }

    pub fn space(&self) -> &'a QuasimetricSpace {
        self.space
    }

    pub fn params(&self) -> &GrandParams {
        &self.params
    }

    pub fn grid(&self) -> &EpsilonGrid {
        &self.grid
    }

    pub fn table(&self) -> &MorreyTable {
        &self.table
    }

    /// `phi(eps)^(1/(p - eps))` per node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Morrey norm at exponent `p - eps`, shift `lambda - A(eps)` for any admissible `eps`.
    pub fn morrey_at(&self, f: &GridFunction, eps: f64) -> (f64, usize) {
        self.table.norm(self.space, f, self.params.p - eps, self.params.shifted_lambda(eps))
    }

    pub fn profile(&self, f: &GridFunction) -> Result<Profile> {
        f.check_space(self.space)?;
        let mut morrey = Vec::with_capacity(self.grid.len());
        let mut entries = Vec::with_capacity(self.grid.len());
        for &e in self.grid.nodes() {
            let (v, arg) = self.morrey_at(f, e);
            morrey.push(v);
            entries.push(arg);
        }
        let weighted = morrey.iter().zip(&self.weights).map(|(m, w)| m * w).collect();
        Ok(Profile { morrey, weighted, entries })
    }

    /// `Phi(f, s)` from a precomputed profile.
    pub fn phi_from_profile(&self, profile: &Profile, s: f64) -> Result<NormReport> {
        let k = self.grid.count_below(s)?;
        let spec = Some(self.grid.spec());
        let mut best: Option<(f64, usize)> = None;
        for (i, &v) in profile.weighted[..k].iter().enumerate() {
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, i));
            }
        }
        let (value, i) = best.expect("count_below returns at least one node");
        if value == 0.0 {
            return Ok(NormReport { value, argmax_eps: None, argmax_ball: None, grid: spec });
        }
        Ok(NormReport {
            value,
            argmax_eps: Some(self.grid.nodes()[i]),
            argmax_ball: Some(self.table.ball(self.space, profile.entries[i])),
            grid: spec,
        })
    }

    /// `sup_{0 < eps < s} phi(eps)^(1/(p - eps)) ||f||_{p - eps, lambda - A(eps)}` on the grid.
    pub fn phi(&self, f: &GridFunction, s: f64) -> Result<NormReport> {
        self.grid.count_below(s)?;
        self.phi_from_profile(&self.profile(f)?, s)
    }

    pub fn norm(&self, f: &GridFunction) -> Result<NormReport> {
        self.phi(f, self.grid.spec().upper)
    }

    /// The grid supremum of `profile`, refined by golden-section search over
    /// the two cells around the best node.
    pub fn refined_sup(&self, f: &GridFunction, profile: &Profile) -> f64 {
        let nodes = self.grid.nodes();
        let (i, mut best) = profile
            .weighted
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if !(best > 0.0) {
            return best.max(0.0);
        }
        let g = |e: f64| self.params.weight(e) * self.morrey_at(f, e).0;
        let (mut a, mut b) = (nodes[i.saturating_sub(1)], nodes[(i + 1).min(nodes.len() - 1)]);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        for _ in 0..GOLDEN_ITERATIONS {
            best = best.max(gc).max(gd);
            if gc >= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - ratio * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + ratio * (b - a);
                gd = g(d);
            }
        }
        best.max(gc).max(gd)
    }

    /// [`GrandEvaluator::refined_sup`] of a fresh profile.
    pub fn refined_norm(&self, f: &GridFunction) -> Result<f64> {
        Ok(self.refined_sup(f, &self.profile(f)?))
    }
}

/// Golden-section steps of [`GrandEvaluator::refined_sup`].
pub const GOLDEN_ITERATIONS: usize = 60;

/// The generalized grand Morrey norm on the default grid.
pub fn grand_morrey_norm(f: &GridFunction, space: &QuasimetricSpace, params: &GrandParams) -> Result<NormReport> {
    GrandEvaluator::with_default(space, params.clone())?.norm(f)
}

/// `Phi(f, s)` on the default grid of `params`.
pub fn phi_functional(f: &GridFunction, space: &QuasimetricSpace, params: &GrandParams, s: f64) -> Result<NormReport> {
    GrandEvaluator::with_default(space, params.clone())?.phi(f, s)
}

/// A norm named by its parameters, as accepted on the command line and in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "kebab-case")]
pub enum NormSpec {
    Lebesgue {
        p: f64,
    },
    GrandLebesgue {
        p: f64,
        theta: f64,
    },
    Morrey {
        p: f64,
        lambda: f64,
        variant: MorreyVariant,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        range: Option<RadiusRange>,
    },
    GrandMorrey {
        p: f64,
        lambda: f64,
        phi: ScaleSpec,
        a: ScaleSpec,
        variant: MorreyVariant,
    },
}

impl NormSpec {
    /// Validates the parameters and precomputes ball tables and grids for `space`.
    pub fn prepare<'a>(&self, space: &'a QuasimetricSpace) -> Result<PreparedNorm<'a>> {
        Ok(match self {
            NormSpec::Lebesgue { p } => {
                check_p(*p)?;
                PreparedNorm::Lebesgue { space, p: *p }
            }
            NormSpec::GrandLebesgue { p, theta } => {
                check_p(*p)?;
                let grid = EpsilonGrid::with_default(EpsilonRange { upper: p - 1.0, closed: false })?;
                if !(*theta > 0.0) {
                    return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
                }
                PreparedNorm::GrandLebesgue { space, p: *p, theta: *theta, grid }
            }
            NormSpec::Morrey { p, lambda, variant, range } => {
                check_p(*p)?;
                if !(0.0..1.0).contains(lambda) {
                    return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1), got {lambda}")));
                }
                variant.validate()?;
                let range = range.unwrap_or(default_radius_range(*variant));
                PreparedNorm::Morrey { space, p: *p, lambda: *lambda, table: MorreyTable::new(space, *variant, range) }
            }
            NormSpec::GrandMorrey { p, lambda, phi, a, variant } => {
                let params = GrandParams::new(*p, *lambda, phi.clone(), a.clone(), *variant)?;
                PreparedNorm::Grand(Box::new(GrandEvaluator::with_default(space, params)?))
            }
        })
    }
}

/// A [`NormSpec`] bound to one space.
#[derive(Clone, Debug)]
pub enum PreparedNorm<'a> {
    Lebesgue { space: &'a QuasimetricSpace, p: f64 },
    GrandLebesgue { space: &'a QuasimetricSpace, p: f64, theta: f64, grid: EpsilonGrid },
    Morrey { space: &'a QuasimetricSpace, p: f64, lambda: f64, table: MorreyTable },
    Grand(Box<GrandEvaluator<'a>>),
}

impl PreparedNorm<'_> {
    pub fn evaluate(&self, f: &GridFunction) -> Result<NormReport> {
        match self {
            PreparedNorm::Lebesgue { space, p } => {
                f.check_space(space)?;
                Ok(NormReport { value: lp_norm(f, space, *p), argmax_eps: None, argmax_ball: None, grid: None })
            }
            PreparedNorm::GrandLebesgue { space, p, theta, grid } => grand_lebesgue_norm_on(f, space, *p, *theta, grid),
            PreparedNorm::Morrey { space, p, lambda, table } => {
                f.check_space(space)?;
                if f.is_zero() {
                    return Ok(NormReport { value: 0.0, argmax_eps: None, argmax_ball: None, grid: None });
                }
                let (value, arg) = table.norm(space, f, *p, *lambda);
                Ok(NormReport { value, argmax_eps: None, argmax_ball: Some(table.ball(space, arg)), grid: None })
            }
            PreparedNorm::Grand(ev) => ev.norm(f),
        }
    }

    pub fn value(&self, f: &GridFunction) -> Result<f64> {
        Ok(self.evaluate(f)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::presets;

    #[test]
    fn lebesgue_examples() {
        let s = presets::uniform_grid(4);
        let one = GridFunction::constant(4, 1.0);
        for p in [1.5, 2.0, 7.0] {
            assert!((lebesgue_norm(&one, &s, p).unwrap() - 1.0).abs() < 1e-15);
        }
        let f = GridFunction::new(vec![2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((lebesgue_norm(&f, &s, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(lebesgue_norm(&f, &s, 1.0).is_err());
        assert!(lebesgue_norm(&GridFunction::zeros(3), &s, 2.0).is_err());
    }

    #[test]
    fn grand_lebesgue_of_constants() {
        let s = presets::uniform_grid(4);
        let one = GridFunction::constant(4, 1.0);
        let r = grand_lebesgue_norm(&one, &s, 2.0, 1.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
        let r = grand_lebesgue_norm(&one, &s, 3.0, 1.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
        assert_eq!(grand_lebesgue_norm(&GridFunction::zeros(4), &s, 2.0, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn morrey_of_constant_on_probability_space() {
        let s = presets::uniform_grid(16);
        let one = GridFunction::constant(16, 1.0);
        for lambda in [0.0, 0.3, 0.9] {
            let r = morrey_norm(&one, &s, 2.0, lambda, MorreyVariant::MeasurePower).unwrap();
            assert!((r.value - 1.0).abs() < 1e-14, "lambda {lambda}: {}", r.value);
        }
    }

    #[test]
    fn values_must_be_finite() {
        assert!(GridFunction::new(vec![1.0, f64::NAN]).is_err());
        assert!(serde_json::from_str::<GridFunction>(r#"{"values":[1.0, 2.0]}"#).is_ok());
    }

    #[test]
    fn grid_must_match_params() {
        let s = presets::uniform_grid(4);
        let params =
            GrandParams::with_theta(2.0, 0.3, 1.0, "lin:1".parse().unwrap(), MorreyVariant::MeasurePower).unwrap();
        let wrong = EpsilonGrid::with_default(EpsilonRange { upper: 1.0, closed: false }).unwrap();
        assert!(GrandEvaluator::new(&s, params, wrong).is_err());
    }
}
