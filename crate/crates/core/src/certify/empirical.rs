use serde::{Deserialize, Serialize};

use super::family::{FunctionFamily, Member};
use crate::error::{Error, Result};
use crate::norms::{GridFunction, PreparedNorm};
use crate::operators::Operator;

pub const SHARPEN_ITERATIONS: usize = 32;
pub const SHARPEN_STEP: f64 = 0.1;

/// Largest ratio over a family, with its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub ratio: f64,
    pub witness: String,
    /// Ratio after coordinate ascent from the witness, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpened: Option<f64>,
    pub evaluated: usize,
    /// Members whose input norm vanished.
    pub skipped: usize,
}

/// `max_f num(f) / den(f)` over members with `den(f) > 0`. The closure
/// returns `(num, den)`. Ties keep the first member.
pub fn max_ratio<F>(family: &FunctionFamily, mut eval: F) -> Result<(RatioResult, usize)>
where
    F: FnMut(&Member) -> Result<(f64, f64)>,
{
    let mut best: Option<(f64, usize)> = None;
    let mut skipped = 0;
    for (i, m) in family.members.iter().enumerate() {
        let (num, den) = eval(m)?;
        if den == 0.0 {
            skipped += 1;
            continue;
        }
        let r = num / den;
        if best.is_none_or(|(b, _)| r > b) {
            best = Some((r, i));
        }
    }
    let (ratio, i) = best.ok_or_else(|| Error::EmptyFamily("every member has zero input norm".into()))?;
    let result = RatioResult {
        ratio,
        witness: family.members[i].id.clone(),
        sharpened: None,
        evaluated: family.len() - skipped,
        skipped,
    };
    Ok((result, i))
}

/// Coordinate ascent on `ratio(g)` from `start`: each iteration scales one
/// nonzero coordinate by `1 +- SHARPEN_STEP`, cycling through coordinates in
/// decreasing order of `|f|`, and keeps the first improving move.
pub fn sharpen<F>(start: &GridFunction, mut ratio: F) -> Result<(f64, GridFunction)>
where
    F: FnMut(&GridFunction) -> Result<Option<f64>>,
{
    let mut f = start.clone();
    let mut best = ratio(&f)?.unwrap_or(0.0);
    let mut order: Vec<usize> = (0..f.len()).filter(|&i| f.values()[i] != 0.0).collect();
    order.sort_by(|&a, &b| f.values()[b].abs().total_cmp(&f.values()[a].abs()).then(a.cmp(&b)));
    if order.is_empty() {
        return Ok((best, f));
    }
    for it in 0..SHARPEN_ITERATIONS {
        let i = order[it % order.len()];
        for factor in [1.0 + SHARPEN_STEP, 1.0 - SHARPEN_STEP] {
            let mut values = f.values().to_vec();
            values[i] *= factor;
            let g = GridFunction::new(values)?;
            if let Some(r) = ratio(&g)? {
                if r > best {
                    best = r;
                    f = g;
                    break;
                }
            }
        }
    }
    Ok((best, f))
}

/// `max_f N_out(U f) / N_in(f)` over the family, optionally sharpened.
pub fn empirical_ratio(
    op: &Operator,
    family: &FunctionFamily,
    norm_in: &PreparedNorm,
    norm_out: &PreparedNorm,
    sharpen_witness: bool,
) -> Result<RatioResult> {
    let (mut result, i) = max_ratio(family, |m| Ok((norm_out.value(&op.apply(&m.f)?)?, norm_in.value(&m.f)?)))?;
    if sharpen_witness {
        let (s, _) = sharpen(&family.members[i].f, |g| {
            let den = norm_in.value(g)?;
            if den == 0.0 {
                return Ok(None);
            }
            Ok(Some(norm_out.value(&op.apply(g)?)? / den))
        })?;
        result.sharpened = Some(s.max(result.ratio));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::family::{generate_family, FamilySpec};
    use crate::norms::NormSpec;
    use crate::operators::OperatorSpec;
    use crate::scales::MorreyVariant;
    use crate::space::presets;

    fn morrey(p: f64, lambda: f64) -> NormSpec {
        NormSpec::Morrey { p, lambda, variant: MorreyVariant::MeasurePower, range: None }
    }

    #[test]
    fn identity_ratio_is_one() {
        let s = presets::uniform_grid(8);
        let op = Operator::new(OperatorSpec::Identity, &s).unwrap();
        let n = morrey(2.0, 0.3).prepare(&s).unwrap();
        for spec in [FamilySpec::BallIndicators, FamilySpec::Mixed { seed: 3 }] {
            let fam = generate_family(&s, &spec).unwrap();
            let r = empirical_ratio(&op, &fam, &n, &n, true).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-14);
            assert!((r.sharpened.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn maximal_of_constant_has_ratio_one() {
        let s = presets::uniform_grid(16);
        let op = Operator::new(OperatorSpec::Maximal, &s).unwrap();
        let n = morrey(2.0, 0.25).prepare(&s).unwrap();
        let fam = generate_family(&s, &FamilySpec::Constant).unwrap();
        let r = empirical_ratio(&op, &fam, &n, &n, false).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-14);
    }

    #[test]
    fn maximal_mixed_grid4_matches_brute_force() {
        let s = presets::uniform_grid(4);
        let op = Operator::new(OperatorSpec::Maximal, &s).unwrap();
        let n = morrey(2.0, 0.25).prepare(&s).unwrap();
        let fam = generate_family(&s, &FamilySpec::Mixed { seed: 11 }).unwrap();
        let r = empirical_ratio(&op, &fam, &n, &n, false).unwrap();

        // brute force: balls {y : |x - y| < r} on the points i/3, maximal averages over all such balls
        let pts: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let radii: Vec<f64> = (1..=5).map(|k| k as f64 / 6.0).filter(|&r| r < 1.0).collect();
        let ball = |x: usize, r: f64| -> Vec<usize> { (0..4).filter(|&y| (pts[x] - pts[y]).abs() < r).collect() };
        let morrey_bf = |v: &[f64]| -> f64 {
            let mut best = 0.0f64;
            for x in 0..4 {
                for &r in &radii {
                    let b = ball(x, r);
                    let mu = b.len() as f64 / 4.0;
                    let int: f64 = b.iter().map(|&y| v[y].abs().powi(2) / 4.0).sum();
                    best = best.max(int / mu.powf(0.25));
                }
            }
            best.sqrt()
        };
        let mut expected = 0.0f64;
        for m in &fam.members {
            let v = m.f.values();
            let mf: Vec<f64> = (0..4)
                .map(|x| {
                    radii.iter().map(|&r| {
                        let b = ball(x, r);
                        b.iter().map(|&y| v[y].abs()).sum::<f64>() / b.len() as f64
                    })
                    .fold(0.0, f64::max)
                })
                .collect();
            expected = expected.max(morrey_bf(&mf) / morrey_bf(v));
        }
        assert!((r.ratio - expected).abs() < 1e-12 * expected, "{} vs {expected}", r.ratio);
    }

    #[test]
    fn zero_input_norms_are_an_error() {
        let fam = FunctionFamily {
            spec: FamilySpec::Constant,
            members: vec![Member { id: "zero".into(), f: GridFunction::zeros(4) }],
        };
        assert!(max_ratio(&fam, |_| Ok((1.0, 0.0))).is_err());
    }
}
