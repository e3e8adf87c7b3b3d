//! Exponent bookkeeping for Riesz potentials between grand Morrey norms:
//! Sobolev exponent, the auxiliary functions `phi_bar`, `phi_tilde`,
//! `A_bar`, `A_tilde`, `phi`, `Phi`, `psi`, `Psi`, their inverses and the
//! admissibility checks on `(A_1, A_2)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{InverseKind, InverseOf, ScaleSpec};
use crate::error::{Error, Result};

/// Relative tolerance of the Sobolev relation.
const SOBOLEV_TOLERANCE: f64 = 1e-12;
/// Tolerance of the derivative-limit estimate at `0+`.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-6;
/// Absolute tolerance on `A_1 = A_2 o phi_bar^{-1}` (scaled by `max(1, |A|)`).
pub const CONSISTENCY_TOLERANCE: f64 = 1e-8;
/// Inversion target: `|aux(x) - y| <= INVERSE_TOLERANCE * max(1, |y|)`.
pub const INVERSE_TOLERANCE: f64 = 1e-12;
/// Smallest abscissa used when inverting; reaching it sets the boundary flag.
const INVERSE_FLOOR: f64 = 1e-300;
const GRID_NODES: usize = 200;
const GRID_SPAN: f64 = 1e-8;

/// `q = p (1 - lambda) gamma / ((1 - lambda) gamma - alpha p)`.
pub fn sobolev_exponent(p: f64, lambda: f64, alpha: f64, gamma: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must lie in (1, inf), got {p}")));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let top = (1.0 - lambda) * gamma;
    if !(alpha > 0.0 && alpha * p < top) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, (1 - lambda) gamma / p) = (0, {}), got {alpha}",
            top / p
        )));
    }
    let q = p * top / (top - alpha * p);
    if !q.is_finite() || q <= p {
        return Err(Error::InvalidParameter(format!("Sobolev exponent is not finite for alpha = {alpha}")));
    }
    Ok(q)
}

/// Names accepted by [`PotentialSetup::aux`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxFn {
    #[serde(rename = "phi_bar")]
    PhiBar,
    #[serde(rename = "phi_tilde")]
    PhiTilde,
    #[serde(rename = "A_bar")]
    ABar,
    #[serde(rename = "A_tilde")]
    ATilde,
    #[serde(rename = "phi")]
    Phi,
    #[serde(rename = "Phi")]
    PhiUpper,
    #[serde(rename = "psi")]
    Psi,
    #[serde(rename = "Psi")]
    PsiUpper,
}

impl AuxFn {
    pub const ALL: [AuxFn; 8] = [
        AuxFn::PhiBar,
        AuxFn::PhiTilde,
        AuxFn::ABar,
        AuxFn::ATilde,
        AuxFn::Phi,
        AuxFn::PhiUpper,
        AuxFn::Psi,
        AuxFn::PsiUpper,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AuxFn::PhiBar => "phi_bar",
            AuxFn::PhiTilde => "phi_tilde",
            AuxFn::ABar => "A_bar",
            AuxFn::ATilde => "A_tilde",
            AuxFn::Phi => "phi",
            AuxFn::PhiUpper => "Phi",
            AuxFn::Psi => "psi",
            AuxFn::PsiUpper => "Psi",
        }
    }
}

impl FromStr for AuxFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AuxFn::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown auxiliary function `{s}`")))
    }
}

impl fmt::Display for AuxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn outside() -> Error {
    Error::InvalidParameter("outside admissible window".into())
}

/// `phi_bar(x)` or `phi_tilde(x)` given the value of the relevant `A` at `x`.
pub(super) fn aux_raw(inv: &InverseOf, a_at_x: f64, x: f64) -> Option<f64> {
    let InverseOf { kind, p, q, lambda, gamma, alpha, .. } = *inv;
    let base = 1.0 - lambda + a_at_x;
    let value = match kind {
        InverseKind::PhiBar => {
            let den = gamma * base - alpha * (x - q);
            if den == 0.0 {
                return None;
            }
            p + gamma * (x - q) * base / den
        }
        InverseKind::PhiTilde => {
            let den = gamma * base - alpha * (p - x);
            if den == 0.0 {
                return None;
            }
            q - gamma * (p - x) * base / den
        }
    };
    value.is_finite().then_some(value)
}

/// Result of inverting an auxiliary function on `(0, delta]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseResult {
    pub x: f64,
    /// Set when the target lies at or below the value at the inversion floor.
    pub boundary: bool,
}

/// Inverts `phi_bar` (or `phi_tilde`) built from `a` on `(0, delta]` by bisection.
pub(super) fn invert_aux(inv: &InverseOf, a: &ScaleSpec, y: f64) -> Result<InverseResult> {
    let f = |x: f64| aux_raw(inv, a.eval(x), x).ok_or_else(outside);
    let delta = inv.delta;
    let top = f(delta)?;
    let bottom = f(INVERSE_FLOOR)?;
    if !y.is_finite() {
        return Err(Error::InvalidParameter(format!("cannot invert at non-finite value {y}")));
    }
    if y <= bottom {
        return Ok(InverseResult { x: INVERSE_FLOOR, boundary: true });
    }
    let tol = INVERSE_TOLERANCE * y.abs().max(1.0);
    if y > top + tol {
        return Err(Error::InvalidParameter(format!(
            "value {y} lies outside the range (0, {top}] of the auxiliary function on (0, {delta}]"
        )));
    }
    if y >= top {
        return Ok(InverseResult { x: delta, boundary: false });
    }
    let (mut lo, mut hi) = (INVERSE_FLOOR, delta);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo)?, f(hi)?);
    let x = if (flo - y).abs() <= (fhi - y).abs() { lo } else { hi };
    Ok(InverseResult { x, boundary: false })
}

/// Which pairing of `(A_1, A_2)` an admissibility check uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmissibilityMode {
    /// Conditions on `A_2`, paired through `A_1 = A_2 o phi_bar^{-1}`;
    /// `theta_2 >= theta_1 (1 + alpha q / ((1 - lambda) gamma))`.
    PhiBar,
    /// Conditions on `A_1`, paired through `A_2 = A_1 o phi_tilde^{-1}`;
    /// requires `1/p - 1/q = alpha / (1 - lambda)` and a strict `theta_2` bound.
    PhiTilde,
}

impl FromStr for AdmissibilityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi-bar" => Ok(Self::PhiBar),
            "phi-tilde" => Ok(Self::PhiTilde),
            _ => Err(Error::InvalidParameter(format!("unknown admissibility mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub mode: AdmissibilityMode,
    pub admissible: bool,
    pub reasons: Vec<String>,
    /// Estimated `lim_{x -> 0+} A'(x)` of the driving function; `None` if it did not converge.
    pub derivative_limit: Option<f64>,
    /// Upper bound the derivative limit must stay strictly below (`phi_bar` pairing only).
    pub derivative_bound: Option<f64>,
    pub theta2_threshold: f64,
}

impl AdmissibilityReport {
    pub fn into_result(self) -> Result<Self> {
        if self.admissible {
            Ok(self)
        } else {
            Err(Error::Inadmissible(self.reasons))
        }
    }
}

/// Exponent bundle of a Riesz-potential boundedness statement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSetup {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub a1: ScaleSpec,
    pub a2: ScaleSpec,
    pub delta: f64,
}

impl PotentialSetup {
    /// Builds a setup with `q` from the Sobolev relation; `delta` defaults to
    /// `0.1 min(p - 1, q - 1)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: f64,
        lambda: f64,
        alpha: f64,
        gamma: f64,
        theta1: f64,
        theta2: f64,
        a1: ScaleSpec,
        a2: ScaleSpec,
        delta: Option<f64>,
    ) -> Result<Self> {
        let q = sobolev_exponent(p, lambda, alpha, gamma)?;
        if !(theta1 > 0.0 && theta2 > 0.0) {
            return Err(Error::InvalidParameter(format!("theta_1, theta_2 must be positive, got {theta1}, {theta2}")));
        }
        let delta = delta.unwrap_or(0.1 * (p - 1.0).min(q - 1.0));
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        Ok(Self { p, q, lambda, alpha, gamma, theta1, theta2, a1, a2, delta })
    }

    /// `A_2 = a2` and `A_1 = A_2 o phi_bar^{-1}`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_a2(
        p: f64,
        lambda: f64,
        alpha: f64,
        gamma: f64,
        theta1: f64,
        theta2: f64,
        a2: ScaleSpec,
        delta: Option<f64>,
    ) -> Result<Self> {
        let mut s = Self::new(p, lambda, alpha, gamma, theta1, theta2, ScaleSpec::Zero, a2, delta)?;
        s.a1 = ScaleSpec::Composed { outer: Box::new(s.a2.clone()), inverse: s.inverse_of(InverseKind::PhiBar) };
        Ok(s)
    }

    /// `A_1 = a1` and `A_2 = A_1 o phi_tilde^{-1}`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_a1(
        p: f64,
        lambda: f64,
        alpha: f64,
        gamma: f64,
        theta1: f64,
        theta2: f64,
        a1: ScaleSpec,
        delta: Option<f64>,
    ) -> Result<Self> {
        let mut s = Self::new(p, lambda, alpha, gamma, theta1, theta2, a1, ScaleSpec::Zero, delta)?;
        s.a2 = ScaleSpec::Composed { outer: Box::new(s.a1.clone()), inverse: s.inverse_of(InverseKind::PhiTilde) };
        Ok(s)
    }

    /// The linear preset `A_2(x) = slope x`, `A_1 = A_2 o phi_bar^{-1}`, `theta_2` at its threshold.
    pub fn linear_preset(p: f64, lambda: f64, alpha: f64, gamma: f64, theta1: f64, slope: f64) -> Result<Self> {
        let q = sobolev_exponent(p, lambda, alpha, gamma)?;
        let theta2 = theta1 * (1.0 + alpha * q / ((1.0 - lambda) * gamma));
        Self::from_a2(p, lambda, alpha, gamma, theta1, theta2, ScaleSpec::Linear { slope }, None)
    }

    pub fn inverse_of(&self, kind: InverseKind) -> InverseOf {
        InverseOf {
            kind,
            p: self.p,
            q: self.q,
            lambda: self.lambda,
            gamma: self.gamma,
            alpha: self.alpha,
            delta: self.delta,
        }
    }

    /// `theta_1 (1 + alpha q / ((1 - lambda) gamma))`.
    pub fn theta2_threshold(&self) -> f64 {
        self.theta1 * (1.0 + self.alpha * self.q / ((1.0 - self.lambda) * self.gamma))
    }

    pub fn phi_bar(&self, x: f64) -> Result<f64> {
        aux_raw(&self.inverse_of(InverseKind::PhiBar), self.a2.eval(x), x).ok_or_else(outside)
    }

    pub fn phi_tilde(&self, x: f64) -> Result<f64> {
        aux_raw(&self.inverse_of(InverseKind::PhiTilde), self.a1.eval(x), x).ok_or_else(outside)
    }

    /// Evaluates a named auxiliary function at `x > 0`.
    pub fn aux(&self, f: AuxFn, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::InvalidParameter(format!("auxiliary functions need x > 0, got {x}")));
        }
        let (p, q, lambda, gamma, alpha) = (self.p, self.q, self.lambda, self.gamma, self.alpha);
        let value = match f {
            AuxFn::PhiBar => self.phi_bar(x)?,
            AuxFn::PhiTilde => self.phi_tilde(x)?,
            AuxFn::ABar => {
                let den = gamma * (1.0 - lambda + self.a2.eval(x));
                if den == 0.0 {
                    return Err(outside());
                }
                1.0 - alpha * (x - q) / den
            }
            AuxFn::ATilde => {
                let base = 1.0 - lambda + self.a1.eval(x);
                let den = gamma * base - (p - x) * alpha;
                if den == 0.0 {
                    return Err(outside());
                }
                base / den
            }
            AuxFn::Phi => {
                let b = self.phi_bar(x)?;
                if b < 0.0 {
                    return Err(outside());
                }
                b.powf(self.aux(AuxFn::ABar, x)?)
            }
            AuxFn::PhiUpper => {
                let b = self.phi_tilde(x)?;
                if b < 0.0 {
                    return Err(outside());
                }
                b.powf(self.aux(AuxFn::ATilde, x)?)
            }
            AuxFn::Psi => self.aux(AuxFn::Phi, x.powf(self.theta1))?,
            AuxFn::PsiUpper => self.aux(AuxFn::PhiUpper, x.powf(self.theta1))?,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(outside())
        }
    }

    pub fn invert_phi_bar(&self, y: f64) -> Result<InverseResult> {
        self.check_increasing(InverseKind::PhiBar).map_err(|r| Error::Inadmissible(vec![r]))?;
        invert_aux(&self.inverse_of(InverseKind::PhiBar), &self.a2, y)
    }

    pub fn invert_phi_tilde(&self, y: f64) -> Result<InverseResult> {
        self.check_increasing(InverseKind::PhiTilde).map_err(|r| Error::Inadmissible(vec![r]))?;
        invert_aux(&self.inverse_of(InverseKind::PhiTilde), &self.a1, y)
    }

    /// Geometric grid of `GRID_NODES` points on `[top * GRID_SPAN, top]`.
    fn window(top: f64) -> Vec<f64> {
        let ratio = GRID_SPAN.powf(1.0 / (GRID_NODES - 1) as f64);
        let mut xs: Vec<f64> = (0..GRID_NODES).map(|k| top * ratio.powi((GRID_NODES - 1 - k) as i32)).collect();
        xs[GRID_NODES - 1] = top;
        xs
    }

    fn check_increasing(&self, kind: InverseKind) -> std::result::Result<(), String> {
        let (name, a) = match kind {
            InverseKind::PhiBar => ("phi_bar", &self.a2),
            InverseKind::PhiTilde => ("phi_tilde", &self.a1),
        };
        let inv = self.inverse_of(kind);
        let mut prev: Option<(f64, f64)> = None;
        for x in Self::window(self.delta) {
            let v = aux_raw(&inv, a.eval(x), x).ok_or_else(|| format!("{name} undefined at x = {x:e}"))?;
            if let Some((px, pv)) = prev {
                if !(v > pv) {
                    return Err(format!("{name} is not strictly increasing on (0, delta]: {name}({px:e}) = {pv} >= {name}({x:e}) = {v}"));
                }
            }
            prev = Some((x, v));
        }
        Ok(())
    }

    /// Checks the hypotheses of the chosen pairing; never fails, reasons are collected.
    pub fn check_admissibility(&self, mode: AdmissibilityMode) -> AdmissibilityReport {
        let mut reasons = Vec::new();
        let (p, q, lambda, alpha, gamma) = (self.p, self.q, self.lambda, self.alpha, self.gamma);
        if !(lambda > 0.0 && lambda < 1.0) {
            reasons.push(format!("lambda must lie in (0, 1), got {lambda}"));
        }
        let threshold = match mode {
            AdmissibilityMode::PhiBar => self.theta2_threshold(),
            AdmissibilityMode::PhiTilde => self.theta1 * (1.0 + alpha * q / (1.0 - lambda)),
        };
        let (driver, driver_name, paired, paired_name, kind) = match mode {
            AdmissibilityMode::PhiBar => (&self.a2, "A_2", &self.a1, "A_1", InverseKind::PhiBar),
            AdmissibilityMode::PhiTilde => (&self.a1, "A_1", &self.a2, "A_2", InverseKind::PhiTilde),
        };
        match mode {
            AdmissibilityMode::PhiBar => {
                if !(alpha > 0.0 && alpha < (1.0 - lambda) * gamma / p) {
                    reasons.push(format!("alpha must lie in (0, (1 - lambda) gamma / p), got {alpha}"));
                }
                let lhs = 1.0 / p - 1.0 / q;
                let rhs = alpha / ((1.0 - lambda) * gamma);
                if (lhs - rhs).abs() > SOBOLEV_TOLERANCE * rhs.abs() {
                    reasons.push(format!("Sobolev relation fails: 1/p - 1/q = {lhs} but alpha / ((1 - lambda) gamma) = {rhs}"));
                }
                if self.theta2 < threshold * (1.0 - 1e-12) {
                    reasons.push(format!(
                        "theta_2 = {} is below the threshold theta_1 (1 + alpha q / ((1 - lambda) gamma)) = {threshold}",
                        self.theta2
                    ));
                }
            }
            AdmissibilityMode::PhiTilde => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    reasons.push(format!("alpha must lie in (0, 1), got {alpha}"));
                }
                if !(lambda < 1.0 - alpha * p) {
                    reasons.push(format!("lambda must be below 1 - alpha p = {}, got {lambda}", 1.0 - alpha * p));
                }
                let lhs = 1.0 / p - 1.0 / q;
                let rhs = alpha / (1.0 - lambda);
                if (lhs - rhs).abs() > SOBOLEV_TOLERANCE * rhs.abs() {
                    reasons.push(format!("this pairing needs 1/p - 1/q = alpha / (1 - lambda) = {rhs}, got {lhs}"));
                }
                if !(self.theta2 > threshold) {
                    reasons.push(format!(
                        "theta_2 = {} must exceed theta_1 (1 + alpha q / (1 - lambda)) = {threshold}",
                        self.theta2
                    ));
                }
            }
        }

        if let Some(r) = smoothness_violation(driver, self.delta) {
            reasons.push(format!("{driver_name} is not continuously differentiable on (0, delta]: {r}"));
        }
        let at_zero = driver.eval(1e-15);
        let vanishes = at_zero.abs() <= DERIVATIVE_TOLERANCE;
        if !vanishes {
            reasons.push(format!("{driver_name}(0+) must be 0, got {at_zero}"));
        }
        let derivative_limit = if vanishes { derivative_at_zero(driver, self.delta) } else { None };
        let derivative_bound = match mode {
            AdmissibilityMode::PhiBar => Some((1.0 - lambda).powi(2) / (alpha * q * q)),
            AdmissibilityMode::PhiTilde => None,
        };
        match derivative_limit {
            None => reasons.push(format!("derivative of {driver_name} at 0+ does not converge")),
            Some(b) => {
                if b < -DERIVATIVE_TOLERANCE {
                    reasons.push(format!("derivative of {driver_name} at 0+ must be non-negative, got {b}"));
                }
                if let Some(bound) = derivative_bound {
                    if !(b < bound - DERIVATIVE_TOLERANCE * bound.max(1.0)) {
                        reasons.push(format!(
                            "derivative of {driver_name} at 0+ is {b}; it must be strictly below (1 - lambda)^2 / (alpha q^2) = {bound}"
                        ));
                    }
                }
            }
        }

        match self.check_increasing(kind) {
            Err(r) => reasons.push(r),
            Ok(()) => {
                let inv = self.inverse_of(kind);
                let top = match aux_raw(&inv, driver.eval(self.delta), self.delta) {
                    Some(t) if t > 0.0 => t.min(match mode {
                        AdmissibilityMode::PhiBar => p - 1.0,
                        AdmissibilityMode::PhiTilde => q - 1.0,
                    }),
                    _ => 0.0,
                };
                if top > 0.0 {
                    for y in Self::window(top) {
                        let lhs = paired.eval(y);
                        let rhs = match invert_aux(&inv, driver, y) {
                            Ok(r) => driver.eval(r.x),
                            Err(e) => {
                                reasons.push(format!("cannot invert at {y:e}: {e}"));
                                break;
                            }
                        };
                        if (lhs - rhs).abs() > CONSISTENCY_TOLERANCE * rhs.abs().max(1.0) {
                            reasons.push(format!(
                                "{paired_name} does not match {driver_name} composed with the inverse at {y:e}: {lhs} vs {rhs}"
                            ));
                            break;
                        }
                    }
                } else {
                    reasons.push("auxiliary function is not positive at delta".into());
                }
            }
        }

        AdmissibilityReport {
            mode,
            admissible: reasons.is_empty(),
            reasons,
            derivative_limit,
            derivative_bound,
            theta2_threshold: threshold,
        }
    }
}

/// Compares one-sided difference quotients on a geometric grid of `(0, delta]`
/// (plus any table knots there); returns a description of the first jump.
fn smoothness_violation(a: &ScaleSpec, delta: f64) -> Option<String> {
    let mut xs: Vec<f64> = (0..60).map(|k| delta * 1e-6f64.powf(k as f64 / 59.0)).collect();
    if let ScaleSpec::Table { knots } = a {
        xs.extend(knots.iter().map(|k| k.0).filter(|&x| x > 0.0 && x <= delta));
    }
    for x in xs {
        let h = 1e-5 * x;
        let fx = a.eval(x);
        let left = (fx - a.eval(x - h)) / h;
        let right = (a.eval(x + h) - fx) / h;
        let scale = left.abs().max(right.abs()).max(1e-8);
        if !left.is_finite() || !right.is_finite() || (left - right).abs() > 1e-3 * scale {
            return Some(format!("one-sided slopes {left} and {right} at x = {x:e}"));
        }
    }
    None
}

/// `lim_{x -> 0+} A(x) / x` for `A(0+) = 0` via Richardson-extrapolated forward differences.
fn derivative_at_zero(a: &ScaleSpec, delta: f64) -> Option<f64> {
    let s = |h: f64| a.eval(h) / h;
    let mut prev: Option<f64> = None;
    let mut settled = 0;
    let mut h = delta;
    for _ in 0..60 {
        let r = 2.0 * s(0.5 * h) - s(h);
        if !r.is_finite() {
            return None;
        }
        if let Some(pr) = prev {
            if (r - pr).abs() <= DERIVATIVE_TOLERANCE * r.abs().max(1.0) {
                settled += 1;
                if settled >= 3 {
                    return Some(r);
                }
            } else {
                settled = 0;
            }
        }
        prev = Some(r);
        h *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset(slope: f64) -> PotentialSetup {
        PotentialSetup::linear_preset(2.0, 0.5, 0.125, 1.0, 1.0, slope).unwrap()
    }

    #[test]
    fn sobolev_examples() {
        assert!((sobolev_exponent(2.0, 0.5, 0.125, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((sobolev_exponent(2.0, 0.0, 0.25, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(sobolev_exponent(2.0, 0.5, 0.25, 1.0).is_err());
    }

    #[test]
    fn phi_bar_vanishes_at_zero_and_hits_p_at_q() {
        let s = preset(0.01);
        assert!(s.phi_bar(1e-14).unwrap().abs() < 1e-12);
        assert!((s.phi_bar(s.q).unwrap() - s.p).abs() < 1e-12);
    }

    #[test]
    fn phi_bar_slope_at_zero_matches_quotient_rule() {
        let s = preset(0.01);
        let (g, l, a, q, b) = (s.gamma, s.lambda, s.alpha, s.q, 0.01);
        let n0 = -g * q * (1.0 - l);
        let d0 = g * (1.0 - l) + a * q;
        let dn = g * (1.0 - l) - g * q * b;
        let dd = g * b - a;
        let slope = (dn * d0 - n0 * dd) / (d0 * d0);
        assert!(slope > 0.0);
        for k in 1..=6 {
            let x = 10f64.powi(-k);
            let ratio = s.phi_bar(x).unwrap() / x;
            if k == 6 {
                assert!((ratio - slope).abs() < 1e-4 * slope, "{ratio} vs {slope}");
            }
        }
    }

    #[test]
    fn inversion_round_trips() {
        let s = preset(0.01);
        let y = s.phi_bar(s.delta / 2.0).unwrap();
        let r = s.invert_phi_bar(y).unwrap();
        assert!((r.x - s.delta / 2.0).abs() < 1e-10);
        let r = s.invert_phi_bar(1e-3).unwrap();
        assert!((s.phi_bar(r.x).unwrap() - 1e-3).abs() <= 1e-12);
        let r = s.invert_phi_bar(0.0).unwrap();
        assert!(r.boundary);
        assert!(s.invert_phi_bar(10.0).is_err());
    }

    #[test]
    fn linear_preset_is_admissible() {
        let s = preset(0.05);
        let rep = s.check_admissibility(AdmissibilityMode::PhiBar);
        assert!(rep.admissible, "{:?}", rep.reasons);
        assert!((rep.derivative_limit.unwrap() - 0.05).abs() < 1e-9);
        assert!((rep.derivative_bound.unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn theta2_below_threshold_fails() {
        let mut s = preset(0.05);
        assert!((s.theta2_threshold() - 2.0).abs() < 1e-12);
        s.theta2 = 1.5;
        let rep = s.check_admissibility(AdmissibilityMode::PhiBar);
        assert!(!rep.admissible);
        assert!(rep.reasons.iter().any(|r| r.contains("theta_2")), "{:?}", rep.reasons);
    }

    #[test]
    fn derivative_at_bound_fails() {
        let rep = preset(0.125).check_admissibility(AdmissibilityMode::PhiBar);
        assert!(!rep.admissible);
        assert!(rep.reasons.iter().any(|r| r.contains("strictly below")), "{:?}", rep.reasons);
    }

    #[test]
    fn kinked_or_inconsistent_a1_fails() {
        let mut s = preset(0.05);
        s.a2 = "table:0=0;0.01=0.0005;1=1".parse().unwrap();
        let rep = s.check_admissibility(AdmissibilityMode::PhiBar);
        assert!(rep.reasons.iter().any(|r| r.contains("continuously differentiable")), "{:?}", rep.reasons);

        let mut s = preset(0.05);
        s.a1 = ScaleSpec::Linear { slope: 0.05 };
        let rep = s.check_admissibility(AdmissibilityMode::PhiBar);
        assert!(rep.reasons.iter().any(|r| r.contains("does not match")), "{:?}", rep.reasons);
    }

    #[test]
    fn psi_behaves_like_a_power() {
        let s = preset(0.05);
        let e = s.theta2_threshold();
        let ratios: Vec<f64> = (0..=10).map(|k| {
            let x = 1e-5 * 10f64.powf(-k as f64 / 10.0);
            s.aux(AuxFn::Psi, x).unwrap() / x.powf(e)
        }).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(lo > 0.0 && hi / lo - 1.0 < 0.01, "{ratios:?}");
    }

    #[test]
    fn tilde_pairing_with_unit_gamma() {
        let s = PotentialSetup::from_a1(2.0, 0.5, 0.125, 1.0, 1.0, 2.5, ScaleSpec::Linear { slope: 0.05 }, None).unwrap();
        assert!(s.phi_tilde(1e-14).unwrap().abs() < 1e-11);
        let rep = s.check_admissibility(AdmissibilityMode::PhiTilde);
        assert!(rep.admissible, "{:?}", rep.reasons);
        let mut t = s.clone();
        t.theta2 = 2.0;
        assert!(!t.check_admissibility(AdmissibilityMode::PhiTilde).admissible);
    }

    #[test]
    fn aux_names_parse() {
        for f in AuxFn::ALL {
            assert_eq!(f.name().parse::<AuxFn>().unwrap(), f);
        }
    }
}
