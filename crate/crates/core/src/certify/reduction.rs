use serde::{Deserialize, Serialize};

use super::empirical::{sharpen, RatioResult};
use super::family::FunctionFamily;
use crate::error::{Error, Result};
use crate::norms::{EpsilonGrid, GrandEvaluator, GridFunction};
use crate::operators::Operator;
use crate::scales::{GrandParams, PotentialSetup};

/// Relative slack on every inequality that is checked exactly.
pub const ARITHMETIC_SLACK: f64 = 1e-12;
/// `log R` decreasing faster than this in `log eps` over the first decade
/// of the chain counts as divergence of the ratio condition.
pub const DIVERGENCE_SLOPE: f64 = 1e-4;
/// Largest `max / min` of the per-eps constants accepted as grid-uniform.
pub const UNIFORMITY_LIMIT: f64 = 10.0;
/// Refinement deltas may grow by at most this fraction of the ratio.
pub const REFINEMENT_SLACK: f64 = 1e-9;

/// `Phi(f, s) <= C phi(sigma)^(-1/(p - sigma)) Phi(f, sigma)` on one function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub sigma: f64,
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    /// `phi(sigma)^(1/(p - sigma))`.
    pub sigma_weight: f64,
    /// Extremes of `Delta(eps, sigma)` over grid nodes in `[sigma, s)`.
    pub delta_min: f64,
    pub delta_max: f64,
    pub pass: bool,
}

/// Chain constant of the dominance estimate, evaluated on the space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceConstant {
    pub value: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub nodes: usize,
}

fn check_sigma_s(ev: &GrandEvaluator, sigma: f64, s: f64) -> Result<()> {
    let spec = ev.grid().spec();
    if !(sigma > 0.0 && sigma < s && s <= spec.upper) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < sigma < s <= {} (s_max), got sigma = {sigma}, s = {s}",
            spec.upper
        )));
    }
    Ok(())
}

/// `Delta(eps, sigma) = (1 + A(eps) - lambda)/(p - eps) - (1 + A(sigma) - lambda)/(p - sigma)`.
pub fn delta(params: &GrandParams, eps: f64, sigma: f64) -> f64 {
    let t = |e: f64| (1.0 + params.a.eval(e) - params.lambda) / (params.p - e);
    t(eps) - t(sigma)
}

/// Grid nodes of `sup_{sigma <= eps < s}` together with `sigma` itself.
fn upper_nodes(ev: &GrandEvaluator, sigma: f64, s: f64) -> Vec<f64> {
    let spec = ev.grid().spec();
    let mut nodes = vec![sigma];
    nodes.extend(
        ev.grid().nodes().iter().copied().filter(|&e| e >= sigma && (e < s || (spec.closed && s == spec.upper))),
    );
    nodes
}

/// `C = max_{eps in [sigma, s)} phi(eps)^(1/(p - eps)) max_B base(B)^(e1) mu(B)^(e2)` with
/// `e1 = (A(eps) - lambda)/(p - eps) - (A(sigma) - lambda)/(p - sigma)` and
/// `e2 = 1/(p - eps) - 1/(p - sigma)`: Hölder from `p - eps` up to `p - sigma` on each ball.
pub fn dominance_constant(ev: &GrandEvaluator, sigma: f64, s: f64) -> Result<DominanceConstant> {
    check_sigma_s(ev, sigma, s)?;
    let params = ev.params();
    let logs: Vec<(f64, f64)> =
        ev.table().measures_and_bases(ev.space()).iter().map(|&(m, b)| (m.ln(), b.ln())).collect();
    let shift = |e: f64| (params.a.eval(e) - params.lambda) / (params.p - e);
    let (s1, s2) = (shift(sigma), 1.0 / (params.p - sigma));
    let mut value = 0.0f64;
    let mut delta_min = f64::INFINITY;
    let mut delta_max = f64::NEG_INFINITY;
    let nodes = upper_nodes(ev, sigma, s);
    for &e in &nodes {
        let e1 = shift(e) - s1;
        let e2 = 1.0 / (params.p - e) - s2;
        let g = logs.iter().map(|&(lm, lb)| e1 * lb + e2 * lm).fold(f64::NEG_INFINITY, f64::max).exp();
        value = value.max(params.weight(e) * g);
        delta_min = delta_min.min(e1 + e2);
        delta_max = delta_max.max(e1 + e2);
    }
    Ok(DominanceConstant { value, delta_min, delta_max, nodes: nodes.len() })
}

/// `Phi(f, sigma]`: grid nodes below `sigma` and `sigma` itself.
pub fn phi_closed(ev: &GrandEvaluator, f: &GridFunction, sigma: f64) -> f64 {
    let params = ev.params();
    let mut best = params.weight(sigma) * ev.morrey_at(f, sigma).0;
    for &e in ev.grid().nodes().iter().take_while(|&&e| e < sigma) {
        best = best.max(params.weight(e) * ev.morrey_at(f, e).0);
    }
    best
}

pub fn verify_dominance(ev: &GrandEvaluator, f: &GridFunction, sigma: f64, s: f64) -> Result<DominanceReport> {
    f.check_space(ev.space())?;
    let c = dominance_constant(ev, sigma, s)?;
    let lhs = ev.phi(f, s)?.value;
    let sigma_weight = ev.params().weight(sigma);
    let rhs = c.value / sigma_weight * phi_closed(ev, f, sigma);
    let pass = lhs <= rhs * (1.0 + ARITHMETIC_SLACK)
        && c.delta_min >= -ARITHMETIC_SLACK
        && c.delta_max <= 1.0 + ARITHMETIC_SLACK;
    Ok(DominanceReport {
        sigma,
        s,
        lhs,
        rhs,
        constant: c.value,
        sigma_weight,
        delta_min: c.delta_min,
        delta_max: c.delta_max,
        pass,
    })
}

/// How the input exponent `eta` follows the output exponent `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Pairing {
    Identity,
    /// `eta = phi_bar(eps)`.
    PhiBar { setup: PotentialSetup },
    /// `eta = phi_tilde^{-1}(eps)`.
    PhiTildeInverse { setup: PotentialSetup },
}

impl Pairing {
    pub fn eta(&self, eps: f64) -> Result<f64> {
        match self {
            Pairing::Identity => Ok(eps),
            Pairing::PhiBar { setup } => setup.phi_bar(eps),
            Pairing::PhiTildeInverse { setup } => Ok(setup.invert_phi_tilde(eps)?.x),
        }
    }
}

/// An operator between two grand Morrey norms, certified through per-eps
/// Morrey bounds below `sigma` and the dominance estimate above it.
#[derive(Clone, Debug)]
pub struct GrandPair {
    pub params_in: GrandParams,
    pub params_out: GrandParams,
    pub pairing: Pairing,
    pub sigma: f64,
    pub grid_nodes: usize,
    pub refinements: usize,
    pub sharpen: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerEps {
    pub eps: f64,
    pub eta: f64,
    /// `max_f ||Uf||_{q - eps, lambda - A_2(eps)} / ||f||_{p - eta, lambda - A_1(eta)}`.
    pub ratio: f64,
    pub witness: String,
    /// Theoretical Morrey constant at this pair of exponents, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theoretical: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub out_nodes: usize,
    pub in_nodes: usize,
    pub ratio: f64,
    /// `|ratio - previous ratio|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub sigma: f64,
    pub eta_sigma: f64,
    /// `sup_{0 < eps <= sigma} psi(eps)^(1/(q - eps)) / phi(eta)^(1/(p - eta))` on the chain.
    pub ratio_condition: f64,
    /// Slope of `log R` against `log eps` over the first decade of the chain.
    pub ratio_condition_slope: f64,
    /// Dominance constant of the output norm from `sigma` up to its `s_max`.
    pub dominance_constant: f64,
    /// `psi(sigma)^(1/(q - sigma))`.
    pub sigma_weight: f64,
    pub per_eps_max: f64,
    pub per_eps_min: f64,
    /// `per_eps_max / per_eps_min`.
    pub uniformity: f64,
    /// `dominance_constant / sigma_weight * ratio_condition * per_eps_max`.
    pub assembled: f64,
    /// Grand-norm ratio measured directly, each norm refined around its best grid node.
    pub direct: RatioResult,
    /// `direct <= assembled`.
    pub consistent: bool,
    pub per_eps: Vec<PerEps>,
    pub refinement: Vec<RefinementStep>,
    pub refinement_stable: bool,
}

impl ReductionReport {
    pub fn finite(&self) -> bool {
        self.assembled.is_finite() && self.direct.ratio.is_finite() && self.per_eps.iter().all(|c| c.ratio.is_finite())
    }

    pub fn grid_uniform(&self) -> bool {
        self.uniformity < UNIFORMITY_LIMIT
    }
}

struct Chain {
    eps: Vec<f64>,
    eta: Vec<f64>,
    ratio: f64,
    slope: f64,
}

fn inside(e: f64, params: &GrandParams) -> bool {
    let r = params.epsilon_range();
    e > 0.0 && (e < r.upper || (r.closed && e == r.upper))
}

impl GrandPair {
    fn base_grids(&self) -> Result<(EpsilonGrid, EpsilonGrid)> {
        Ok((
            EpsilonGrid::new(self.params_in.epsilon_range(), self.grid_nodes)?,
            EpsilonGrid::new(self.params_out.epsilon_range(), self.grid_nodes)?,
        ))
    }

    fn chain(&self, out_grid: &EpsilonGrid) -> Result<Chain> {
        let sigma = self.sigma;
        let upper = out_grid.spec().upper;
        if !(sigma > 0.0 && sigma < upper) {
            return Err(Error::InvalidParameter(format!("sigma must lie in (0, {upper}), got {sigma}")));
        }
        let mut eps: Vec<f64> = out_grid.nodes().iter().copied().take_while(|&e| e < sigma).collect();
        eps.push(sigma);
        let eta = eps.iter().map(|&e| self.pairing.eta(e)).collect::<Result<Vec<f64>>>()?;
        if let Some((e, h)) = eps.iter().zip(&eta).find(|(_, &h)| !inside(h, &self.params_in)) {
            return Err(Error::InvalidParameter(format!(
                "paired input exponent eta({e}) = {h} leaves the input range (0, {}); lower sigma",
                self.params_in.epsilon_range().upper
            )));
        }
        let r: Vec<f64> = eps
            .iter()
            .zip(&eta)
            .map(|(&e, &h)| self.params_out.weight(e) / self.params_in.weight(h))
            .collect();
        if let Some(i) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::RatioCondition(format!(
                "psi(eps)^(1/(q - eps)) / phi(eps)^(1/(p - eps)) is not finite at eps = {}",
                eps[i]
            )));
        }
        // least squares slope of log R on log eps over [eps_0, 10 eps_0]
        let first: Vec<(f64, f64)> =
            eps.iter().zip(&r).filter(|(&e, _)| e <= 10.0 * eps[0]).map(|(&e, &v)| (e.ln(), v.ln())).collect();
        let slope = if first.len() >= 2 {
            let k = first.len() as f64;
            let mx = first.iter().map(|v| v.0).sum::<f64>() / k;
            let my = first.iter().map(|v| v.1).sum::<f64>() / k;
            let sxy: f64 = first.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
            let sxx: f64 = first.iter().map(|v| (v.0 - mx).powi(2)).sum();
            sxy / sxx
        } else {
            0.0
        };
        if slope < -DIVERGENCE_SLOPE {
            return Err(Error::RatioCondition(format!(
                "sup_(0 < eps < sigma) psi(eps)^(1/(q - eps)) / phi(eps)^(1/(p - eps)) diverges as eps -> 0 \
                 (log-log slope {slope:.4} near eps = {:e})",
                eps[0]
            )));
        }
        Ok(Chain { ratio: r.iter().copied().fold(0.0, f64::max), eps, eta, slope })
    }

    /// Checks the ratio condition without touching any function.
    pub fn check_ratio_condition(&self) -> Result<(f64, f64)> {
        let (_, out_grid) = self.base_grids()?;
        let c = self.chain(&out_grid)?;
        Ok((c.ratio, c.slope))
    }

    pub fn verify(&self, op: &Operator, family: &FunctionFamily) -> Result<ReductionReport> {
        let space = op.space();
        let (in_base, out_base) = self.base_grids()?;
        let chain = self.chain(&out_base)?;
        let out_ev = GrandEvaluator::new(space, self.params_out.clone(), out_base.clone())?;
        let dom = dominance_constant(&out_ev, self.sigma, out_base.spec().upper)?;

        // level 0 is the base grid; the input grid always carries the paired nodes
        let mut levels = Vec::with_capacity(self.refinements + 1);
        let (mut gi, mut go) = (in_base, out_base);
        for level in 0..=self.refinements {
            if level > 0 {
                gi = gi.refine();
                go = go.refine();
            }
            let ein = GrandEvaluator::new(space, self.params_in.clone(), gi.augmented(&chain.eta)?)?;
            let eout = GrandEvaluator::new(space, self.params_out.clone(), go.clone())?;
            levels.push((ein, eout));
        }
        let eta_index: Vec<usize> =
            chain.eta.iter().map(|&h| levels[0].0.grid().position(h).expect("paired node present")).collect();
        let k = chain.eps.len();

        let mut per_eps: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, 0); k];
        let mut best: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, 0); levels.len()];
        let mut skipped = 0;
        for (mi, m) in family.members.iter().enumerate() {
            let in_profile = levels[0].0.profile(&m.f)?;
            let in_norm = levels[0].0.refined_sup(&m.f, &in_profile);
            if in_norm == 0.0 {
                skipped += 1;
                continue;
            }
            let u = op.apply(&m.f)?;
            let out_profile = levels[0].1.profile(&u)?;
            let out_norm = levels[0].1.refined_sup(&u, &out_profile);
            let r0 = out_norm / in_norm;
            if r0 > best[0].0 {
                best[0] = (r0, mi);
            }
            for j in 0..k {
                let num = if j + 1 < k { out_profile.morrey[j] } else { levels[0].1.morrey_at(&u, chain.eps[j]).0 };
                let r = num / in_profile.morrey[eta_index[j]];
                if r > per_eps[j].0 {
                    per_eps[j] = (r, mi);
                }
            }
            for (l, (ein, eout)) in levels.iter().enumerate().skip(1) {
                let r = eout.refined_norm(&u)? / ein.refined_norm(&m.f)?;
                if r > best[l].0 {
                    best[l] = (r, mi);
                }
            }
        }
        if skipped == family.len() {
            return Err(Error::EmptyFamily("every member has zero input norm".into()));
        }

        let per_eps: Vec<PerEps> = chain
            .eps
            .iter()
            .zip(&chain.eta)
            .zip(&per_eps)
            .map(|((&eps, &eta), &(ratio, mi))| PerEps {
                eps,
                eta,
                ratio,
                witness: family.members[mi].id.clone(),
                theoretical: None,
            })
            .collect();
        let per_eps_max = per_eps.iter().map(|c| c.ratio).fold(f64::NEG_INFINITY, f64::max);
        let per_eps_min = per_eps.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
        let sigma_weight = self.params_out.weight(self.sigma);
        let assembled = dom.value / sigma_weight * chain.ratio * per_eps_max;

        let mut direct = RatioResult {
            ratio: best[0].0,
            witness: family.members[best[0].1].id.clone(),
            sharpened: None,
            evaluated: family.len() - skipped,
            skipped,
        };
        if self.sharpen {
            let (ein, eout) = &levels[0];
            let (s, _) = sharpen(&family.members[best[0].1].f, |g| {
                let den = ein.refined_norm(g)?;
                if den == 0.0 {
                    return Ok(None);
                }
                Ok(Some(eout.refined_norm(&op.apply(g)?)? / den))
            })?;
            direct.sharpened = Some(s.max(direct.ratio));
        }

        let refinement: Vec<RefinementStep> = levels
            .iter()
            .zip(&best)
            .enumerate()
            .map(|(l, ((ein, eout), &(ratio, _)))| RefinementStep {
                out_nodes: eout.grid().len(),
                in_nodes: ein.grid().len(),
                ratio,
                delta: (l > 0).then(|| (ratio - best[l - 1].0).abs()),
            })
            .collect();
        let deltas: Vec<f64> = refinement.iter().filter_map(|s| s.delta).collect();
        let refinement_stable = deltas.windows(2).all(|w| w[1] <= w[0] + REFINEMENT_SLACK * direct.ratio.abs());

        Ok(ReductionReport {
            sigma: self.sigma,
            eta_sigma: *chain.eta.last().expect("chain ends at sigma"),
            ratio_condition: chain.ratio,
            ratio_condition_slope: chain.slope,
            dominance_constant: dom.value,
            sigma_weight,
            per_eps_max,
            per_eps_min,
            uniformity: per_eps_max / per_eps_min,
            assembled,
            consistent: direct.ratio <= assembled * (1.0 + ARITHMETIC_SLACK),
            direct,
            per_eps,
            refinement,
            refinement_stable,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::family::{generate_family, FamilySpec};
    use crate::operators::OperatorSpec;
    use crate::scales::{MorreyVariant, ScaleSpec};
    use crate::space::presets;

    fn params(p: f64, lambda: f64, phi: &str, a: &str) -> GrandParams {
        GrandParams::new(p, lambda, phi.parse().unwrap(), a.parse().unwrap(), MorreyVariant::MeasurePower).unwrap()
    }

    fn pair(p_in: GrandParams, p_out: GrandParams, sigma: f64) -> GrandPair {
        GrandPair {
            params_in: p_in,
            params_out: p_out,
            pairing: Pairing::Identity,
            sigma,
            grid_nodes: 16,
            refinements: 2,
            sharpen: false,
        }
    }

    #[test]
    fn delta_arithmetic() {
        let pr = GrandParams::new(2.0, 0.0, "pow:1".parse().unwrap(), ScaleSpec::Zero, MorreyVariant::MeasurePower)
            .unwrap();
        let d = delta(&pr, 0.5, 0.25);
        assert!((d - (1.0 / 1.5 - 1.0 / 1.75)).abs() < 1e-15);
        assert!((d - 0.0952).abs() < 1e-4);
    }

    #[test]
    fn dominance_on_random_function() {
        let s = presets::uniform_grid(4);
        let ev = GrandEvaluator::with_default(&s, params(2.0, 0.3, "pow:1", "lin:1")).unwrap();
        let f = GridFunction::new(vec![0.7, -1.3, 0.2, 2.5]).unwrap();
        let r = verify_dominance(&ev, &f, 0.05, 0.25).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.lhs > 0.0 && r.lhs <= r.rhs);
        let z = verify_dominance(&ev, &GridFunction::zeros(4), 0.05, 0.25).unwrap();
        assert!(z.pass && z.lhs == 0.0 && z.rhs == 0.0);
        assert!(verify_dominance(&ev, &f, 0.25, 0.05).is_err());
    }

    #[test]
    fn identity_reduces_to_dominance_constant() {
        let s = presets::uniform_grid(4);
        let pr = params(2.0, 0.3, "pow:1", "lin:1");
        let op = Operator::new(OperatorSpec::Identity, &s).unwrap();
        let fam = generate_family(&s, &FamilySpec::Mixed { seed: 5 }).unwrap();
        let rep = pair(pr.clone(), pr, 0.1).verify(&op, &fam).unwrap();
        assert!((rep.direct.ratio - 1.0).abs() < 1e-14);
        assert!((rep.per_eps_max - 1.0).abs() < 1e-14);
        assert!((rep.ratio_condition - 1.0).abs() < 1e-14);
        assert!((rep.assembled - rep.dominance_constant / rep.sigma_weight).abs() < 1e-12 * rep.assembled);
        assert!(rep.consistent);
    }

    #[test]
    fn maximal_operator_passes_on_grid4() {
        let s = presets::uniform_grid(4);
        let pr = params(2.0, 0.3, "pow:1", "lin:1");
        let op = Operator::new(OperatorSpec::Maximal, &s).unwrap();
        let fam = generate_family(&s, &FamilySpec::Mixed { seed: 5 }).unwrap();
        let rep = pair(pr.clone(), pr, 0.1).verify(&op, &fam).unwrap();
        assert!(rep.finite() && rep.grid_uniform() && rep.consistent && rep.refinement_stable, "{rep:?}");
        assert!(rep.direct.ratio >= 1.0);
    }

    #[test]
    fn divergent_ratio_condition_is_reported() {
        let pr_in = params(2.0, 0.3, "pow:2", "lin:1");
        let pr_out = params(2.0, 0.3, "pow:0.5", "lin:1");
        let err = pair(pr_in, pr_out, 0.1).check_ratio_condition().unwrap_err();
        assert!(matches!(err, Error::RatioCondition(_)), "{err}");
    }
}
