use serde::{Deserialize, Serialize};

use super::family::{FamilySpec, FunctionFamily, Member};
use super::reduction::ARITHMETIC_SLACK;
use crate::error::{Error, Result};
use crate::norms::{lebesgue_norm, morrey_norm_in, GridFunction};
use crate::operators::{maximal, modified_maximal, potential, PotentialKind};
use crate::scales::{theoretical_constant, ConstantKind, ConstantValue, FreeConstants, MorreyVariant};
use crate::space::{QuasimetricSpace, RadiusRange};

/// Worst point of a pointwise inequality `lhs(x) <= rhs(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseWorst {
    pub member: String,
    pub point: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of `K_alpha f <= A (M~f)^(1 - p alpha/(1 - lambda)) ||f||^(alpha p/(1 - lambda))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HedbergReport {
    pub p: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub n0: f64,
    /// Growth constant `b` with `mu B(x, r) <= b r` for `r >= d_min`.
    pub b: f64,
    pub b_witness: (usize, f64, f64),
    pub constant: ConstantValue,
    /// Exponents of `M~f(x)` and of the input norm.
    pub exponents: (f64, f64),
    pub members_checked: usize,
    pub points_checked: usize,
    pub failures: usize,
    /// `max_x lhs / rhs` over points with `rhs > 0`.
    pub worst_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst: Option<PointwiseWorst>,
    pub pass: bool,
}

/// Checks the Hedberg-type bound at every point for every nonnegative member.
/// The input norm is the dilated Morrey norm with dilation `n0` over all
/// `r > 0`; points with `rhs = 0` must have `lhs = 0`.
pub fn verify_hedberg(
    space: &QuasimetricSpace,
    family: &FunctionFamily,
    p: f64,
    lambda: f64,
    alpha: f64,
    n0: f64,
) -> Result<HedbergReport> {
    let (b, b_witness) = space.growth_constant();
    if !b.is_finite() {
        return Err(Error::Hypothesis(format!("growth condition mu B(x, r) <= b r has no finite b on {}", space.name())));
    }
    let constant = theoretical_constant(ConstantKind::Hedberg { b, n0, p, lambda, alpha }, &FreeConstants::default())?;
    let e_max = 1.0 - p * alpha / (1.0 - lambda);
    let e_norm = alpha * p / (1.0 - lambda);
    let kind = PotentialKind::KAlpha { alpha };
    let mut report = HedbergReport {
        p,
        lambda,
        alpha,
        n0,
        b,
        b_witness,
        constant,
        exponents: (e_max, e_norm),
        members_checked: 0,
        points_checked: 0,
        failures: 0,
        worst_ratio: 0.0,
        worst: None,
        pass: true,
    };
    for m in family.nonnegative() {
        let k = potential(&m.f, space, kind)?;
        let mt = modified_maximal(&m.f, space, n0)?;
        let norm =
            morrey_norm_in(&m.f, space, p, lambda, MorreyVariant::Modified { dilation: n0 }, RadiusRange::Unbounded)?
                .value;
        report.members_checked += 1;
        for x in 0..space.len() {
            let lhs = k.values()[x].abs();
            let rhs = report.constant.value * mt.values()[x].powf(e_max) * norm.powf(e_norm);
            report.points_checked += 1;
            if lhs > rhs * (1.0 + ARITHMETIC_SLACK) {
                report.failures += 1;
            }
            let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
            if ratio > report.worst_ratio || report.worst.is_none() && ratio > 0.0 {
                report.worst_ratio = ratio;
                report.worst = Some(PointwiseWorst { member: m.id.clone(), point: x, lhs, rhs });
            }
        }
    }
    if report.members_checked == 0 {
        return Err(Error::EmptyFamily(format!("family {} has no nonnegative member", family.spec)));
    }
    report.pass = report.failures == 0;
    Ok(report)
}

/// Outcome of `t mu{M~f > t} <= ||f||_1` over all thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeReport {
    pub n0: f64,
    pub members_checked: usize,
    pub thresholds_checked: usize,
    pub failures: usize,
    /// `max t mu{M~f > t} / ||f||_1`.
    pub worst_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_member: Option<String>,
    pub pass: bool,
}

/// Weak type (1,1) of `M~` with constant 1. `t mu{M~f > t}` only jumps at the
/// values `v` of `M~f`; its supremum over `t < v` is `v mu{M~f >= v}`, which is
/// what each threshold compares against `||f||_1`.
pub fn verify_weak_type(space: &QuasimetricSpace, family: &FunctionFamily, n0: f64) -> Result<WeakTypeReport> {
    let mut report = WeakTypeReport {
        n0,
        members_checked: 0,
        thresholds_checked: 0,
        failures: 0,
        worst_ratio: 0.0,
        worst_member: None,
        pass: true,
    };
    for m in &family.members {
        let l1: f64 = m.f.values().iter().zip(space.weights()).map(|(v, w)| v.abs() * w).sum();
        if l1 == 0.0 {
            continue;
        }
        let mt = modified_maximal(&m.f, space, n0)?;
        let mut levels: Vec<f64> = mt.values().iter().copied().filter(|&v| v > 0.0).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        report.members_checked += 1;
        for v in levels {
            let mass: f64 = mt.values().iter().zip(space.weights()).filter(|(&u, _)| u >= v).map(|(_, w)| w).sum();
            let lhs = v * mass;
            report.thresholds_checked += 1;
            if lhs > l1 * (1.0 + ARITHMETIC_SLACK) {
                report.failures += 1;
            }
            if lhs / l1 > report.worst_ratio {
                report.worst_ratio = lhs / l1;
                report.worst_member = Some(m.id.clone());
            }
        }
    }
    if report.members_checked == 0 {
        return Err(Error::EmptyFamily("every member has zero L^1 norm".into()));
    }
    report.pass = report.failures == 0;
    Ok(report)
}

/// Largest `||M~f||_p / ||f||_p` over the family with its witness.
pub fn modified_maximal_lp_ratio(
    space: &QuasimetricSpace,
    family: &FunctionFamily,
    p: f64,
    n0: f64,
) -> Result<(f64, String)> {
    let mut best = (f64::NEG_INFINITY, String::new());
    for m in &family.members {
        let den = lebesgue_norm(&m.f, space, p)?;
        if den == 0.0 {
            continue;
        }
        let r = lebesgue_norm(&modified_maximal(&m.f, space, n0)?, space, p)? / den;
        if r > best.0 {
            best = (r, m.id.clone());
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(Error::EmptyFamily("every member has zero L^p norm".into()));
    }
    Ok(best)
}

/// Number of points with `Mf(x) < |f(x)|` over the family.
pub fn maximal_dominance_failures(space: &QuasimetricSpace, family: &FunctionFamily) -> Result<usize> {
    let mut failures = 0;
    for m in &family.members {
        let mf = maximal(&m.f, space)?;
        failures += mf.values().iter().zip(m.f.values()).filter(|(a, b)| **a < b.abs()).count();
    }
    Ok(failures)
}

/// Empirical `c` in `I^alpha f(x) <= c Mf(x)` over nonnegative members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub alpha: f64,
    pub gamma: f64,
    pub ratio: f64,
    pub witness: String,
    pub point: usize,
    pub members_checked: usize,
}

pub fn riesz_maximal_domination(
    space: &QuasimetricSpace,
    family: &FunctionFamily,
    alpha: f64,
    gamma: f64,
) -> Result<DominationReport> {
    let kind = PotentialKind::Gamma { alpha, gamma };
    let mut report =
        DominationReport { alpha, gamma, ratio: 0.0, witness: String::new(), point: 0, members_checked: 0 };
    for m in family.nonnegative() {
        if m.f.is_zero() {
            continue;
        }
        let i = potential(&m.f, space, kind)?;
        let mf = maximal(&m.f, space)?;
        report.members_checked += 1;
        for x in 0..space.len() {
            if mf.values()[x] > 0.0 {
                let r = i.values()[x] / mf.values()[x];
                if r > report.ratio {
                    report.ratio = r;
                    report.witness = m.id.clone();
                    report.point = x;
                }
            }
        }
    }
    if report.members_checked == 0 {
        return Err(Error::EmptyFamily(format!("family {} has no nonzero nonnegative member", family.spec)));
    }
    Ok(report)
}

/// [`verify_hedberg`] for a single function, which must be nonnegative.
pub fn verify_hedberg_function(
    space: &QuasimetricSpace,
    f: &GridFunction,
    p: f64,
    lambda: f64,
    alpha: f64,
    n0: f64,
) -> Result<HedbergReport> {
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("the Hedberg bound is stated for f >= 0".into()));
    }
    let family = FunctionFamily { spec: FamilySpec::Constant, members: vec![Member { id: "f".into(), f: f.clone() }] };
    verify_hedberg(space, &family, p, lambda, alpha, n0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::family::generate_family;
    use crate::space::presets;

    #[test]
    fn hedberg_exponent_bookkeeping() {
        let s = presets::uniform_grid(16);
        let fam = generate_family(&s, &FamilySpec::BallIndicators).unwrap();
        let r = verify_hedberg(&s, &fam, 2.0, 0.5, 0.125, 3.0).unwrap();
        assert_eq!(r.exponents, (0.5, 0.5));
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn hedberg_zero_function_passes() {
        let s = presets::uniform_grid(8);
        let r = verify_hedberg_function(&s, &GridFunction::zeros(8), 2.0, 0.5, 0.125, 3.0).unwrap();
        assert!(r.pass && r.failures == 0 && r.worst_ratio == 0.0);
    }

    #[test]
    fn hedberg_ball_indicators_on_grid64() {
        let s = presets::uniform_grid(64);
        let fam = generate_family(&s, &FamilySpec::BallIndicators).unwrap();
        let n0 = s.quasimetric_constants().n0;
        let r = verify_hedberg(&s, &fam, 2.0, 0.5, 0.125, n0).unwrap();
        assert_eq!(r.points_checked, 64 * fam.len());
        assert!(r.pass, "{:?}", r.worst);
    }

    #[test]
    fn weak_type_on_point_mass() {
        // M~ of a unit mass at 0 on grid4 with N0 = 3: oracle by hand
        let s = presets::uniform_grid(4);
        let fam = generate_family(&s, &FamilySpec::PointMasses).unwrap();
        let r = verify_weak_type(&s, &fam, 3.0).unwrap();
        assert!(r.pass && r.worst_ratio <= 1.0 + 1e-12, "{r:?}");
    }

    #[test]
    fn modified_maximal_lp_bound() {
        let s = presets::uniform_grid(16);
        let fam = generate_family(&s, &FamilySpec::Mixed { seed: 2 }).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let (r, _) = modified_maximal_lp_ratio(&s, &fam, p, 3.0).unwrap();
            assert!(r <= 2.0 * (p / (p - 1.0)).powf(1.0 / p));
        }
    }

    #[test]
    fn maximal_dominates_modulus() {
        let s = presets::snowflake_grid(16, 0.5);
        let fam = generate_family(&s, &FamilySpec::Mixed { seed: 9 }).unwrap();
        assert_eq!(maximal_dominance_failures(&s, &fam).unwrap(), 0);
    }

    #[test]
    fn negative_input_rejected() {
        let s = presets::uniform_grid(4);
        let f = GridFunction::new(vec![1.0, -1.0, 0.0, 0.0]).unwrap();
        assert!(verify_hedberg_function(&s, &f, 2.0, 0.5, 0.125, 3.0).is_err());
    }
}
