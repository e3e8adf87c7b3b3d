//! Closed-form operator constants and the user-calibrated free constants they contain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unspecified constants of the operator bounds; all default to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FreeConstants {
    /// Covering constant of the maximal-operator bound.
    pub c_0: f64,
    /// Multiplier of the Calderón–Zygmund Morrey bound.
    pub c_cz: f64,
    /// Multiplier of the Riesz-potential Morrey bound.
    pub c_riesz: f64,
    /// Multiplier of the measure-kernel potential bound.
    pub b_0: f64,
    /// Additive constant in the measure-kernel potential bound.
    pub c_alpha: f64,
    /// Pointwise domination constant `I^alpha f <= c M f`.
    pub c_alpha_domination: f64,
    /// Set when the user supplied any of the above.
    pub calibrated: bool,
}

impl Default for FreeConstants {
    fn default() -> Self {
        Self { c_0: 1.0, c_cz: 1.0, c_riesz: 1.0, b_0: 1.0, c_alpha: 1.0, c_alpha_domination: 1.0, calibrated: false }
    }
}

impl FreeConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("c_0", self.c_0),
            ("c_cz", self.c_cz),
            ("c_riesz", self.c_riesz),
            ("b_0", self.b_0),
            ("C_alpha", self.c_alpha),
            ("c_alpha_domination", self.c_alpha_domination),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("free constant {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which bound to evaluate, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstantKind {
    /// `C_d^(lambda/p) c_0 (p')^(1/p) + 1`.
    Maximal { c_d: f64, lambda: f64, p: f64 },
    /// Piecewise bound for Calderón–Zygmund operators on Morrey spaces.
    Cz { p: f64, lambda: f64 },
    /// `c (1-lambda) gamma / (alpha [(1-lambda) gamma - alpha p]) [(p')^(1/q) + 1]`.
    Riesz { p: f64, lambda: f64, gamma: f64, alpha: f64, q: f64 },
    /// `b_0 (C_alpha + p / (1 - lambda - alpha p)) [(p')^(1/q) + 1]`.
    RieszMeasure { p: f64, lambda: f64, alpha: f64, q: f64 },
    /// `2 (p')^(1/p)`.
    LpModifiedMaximal { p: f64 },
    /// `1 + 2 (p')^(1/p)`.
    MorreyModifiedMaximal { p: f64 },
    /// `[1 + 2 (p')^(1/p)]^(p/q)` times the Hedberg constant, `q` from the Sobolev relation.
    KAlpha { b: f64, n0: f64, p: f64, lambda: f64, alpha: f64 },
    /// `4 [b N0 / alpha + b^(1/p' - lambda/p) N0^(lambda/p) p / (1 - lambda - alpha p)]`.
    Hedberg { b: f64, n0: f64, p: f64, lambda: f64, alpha: f64 },
}

/// A constant evaluated at the current calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantValue {
    pub value: f64,
    /// Value with every free multiplier set to 1, when the constant is a plain product.
    pub coefficient: Option<f64>,
    pub expression: String,
    pub free_symbols: Vec<String>,
}

fn conj(p: f64) -> f64 {
    p / (p - 1.0)
}

fn need(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn check_p_lambda(p: f64, lambda: f64) -> Result<()> {
    need(p > 1.0 && p.is_finite(), || format!("p must lie in (1, inf), got {p}"))?;
    need((0.0..1.0).contains(&lambda), || format!("lambda must lie in [0, 1), got {lambda}"))
}

fn hedberg(b: f64, n0: f64, p: f64, lambda: f64, alpha: f64) -> Result<f64> {
    check_p_lambda(p, lambda)?;
    need(b > 0.0 && n0 >= 1.0, || format!("need b > 0 and N0 >= 1, got b = {b}, N0 = {n0}"))?;
    need(alpha > 0.0 && alpha < (1.0 - lambda) / p, || {
        format!("alpha must lie in (0, (1 - lambda)/p) = (0, {}), got {alpha}", (1.0 - lambda) / p)
    })?;
    let e = 1.0 / conj(p) - lambda / p;
    Ok(4.0 * (b * n0 / alpha + b.powf(e) * n0.powf(lambda / p) * p / (1.0 - lambda - alpha * p)))
}

/// Evaluates a closed-form bound at the supplied calibration.
pub fn theoretical_constant(kind: ConstantKind, free: &FreeConstants) -> Result<ConstantValue> {
    free.validate()?;
    let sym = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    Ok(match kind {
        ConstantKind::Maximal { c_d, lambda, p } => {
            check_p_lambda(p, lambda)?;
            need(c_d >= 1.0, || format!("doubling constant must be at least 1, got {c_d}"))?;
            let value = c_d.powf(lambda / p) * free.c_0 * conj(p).powf(1.0 / p) + 1.0;
            ConstantValue {
                value,
                coefficient: None,
                expression: "C_d^(lambda/p) * c_0 * (p')^(1/p) + 1".into(),
                free_symbols: sym(&["c_0"]),
            }
        }
        ConstantKind::Cz { p, lambda } => {
            check_p_lambda(p, lambda)?;
            need(p != 2.0, || "the Calderón–Zygmund Morrey constant diverges at p = 2".into())?;
            let tail = (p - lambda + 1.0) / (1.0 - lambda);
            let (coef, expression) = if p < 2.0 {
                (conj(p) + p / (2.0 - p) + tail, "c * (p/(p-1) + p/(2-p) + (p-lambda+1)/(1-lambda))")
            } else {
                (p + p / (p - 2.0) + tail, "c * (p + p/(p-2) + (p-lambda+1)/(1-lambda))")
            };
            ConstantValue {
                value: free.c_cz * coef,
                coefficient: Some(coef),
                expression: expression.into(),
                free_symbols: sym(&["c_cz"]),
            }
        }
        ConstantKind::Riesz { p, lambda, gamma, alpha, q } => {
            check_p_lambda(p, lambda)?;
            let top = (1.0 - lambda) * gamma;
            need(gamma > 0.0 && alpha > 0.0 && alpha * p < top, || {
                format!("alpha must lie in (0, (1 - lambda) gamma / p), got {alpha}")
            })?;
            need(q > 0.0, || format!("q must be positive, got {q}"))?;
            let coef = top / (alpha * (top - alpha * p)) * (conj(p).powf(1.0 / q) + 1.0);
            ConstantValue {
                value: free.c_riesz * coef,
                coefficient: Some(coef),
                expression: "c * (1-lambda) gamma / (alpha [(1-lambda) gamma - alpha p]) * [(p')^(1/q) + 1]".into(),
                free_symbols: sym(&["c_riesz"]),
            }
        }
        ConstantKind::RieszMeasure { p, lambda, alpha, q } => {
            check_p_lambda(p, lambda)?;
            need(alpha > 0.0 && alpha * p < 1.0 - lambda, || {
                format!("alpha must lie in (0, (1 - lambda)/p), got {alpha}")
            })?;
            need(q > 0.0, || format!("q must be positive, got {q}"))?;
            let tail = conj(p).powf(1.0 / q) + 1.0;
            let value = free.b_0 * (free.c_alpha + p / (1.0 - lambda - alpha * p)) * tail;
            ConstantValue {
                value,
                coefficient: None,
                expression: "b_0 * (C_alpha + p/(1-lambda-alpha p)) * [(p')^(1/q) + 1]".into(),
                free_symbols: sym(&["b_0", "C_alpha"]),
            }
        }
        ConstantKind::LpModifiedMaximal { p } => {
            need(p > 1.0 && p.is_finite(), || format!("p must lie in (1, inf), got {p}"))?;
            let value = 2.0 * conj(p).powf(1.0 / p);
            ConstantValue { value, coefficient: Some(value), expression: "2 (p')^(1/p)".into(), free_symbols: vec![] }
        }
        ConstantKind::MorreyModifiedMaximal { p } => {
            need(p > 1.0 && p.is_finite(), || format!("p must lie in (1, inf), got {p}"))?;
            let value = 1.0 + 2.0 * conj(p).powf(1.0 / p);
            ConstantValue { value, coefficient: Some(value), expression: "1 + 2 (p')^(1/p)".into(), free_symbols: vec![] }
        }
        ConstantKind::Hedberg { b, n0, p, lambda, alpha } => {
            let value = hedberg(b, n0, p, lambda, alpha)?;
            ConstantValue {
                value,
                coefficient: Some(value),
                expression: "4 [b N0 / alpha + b^(1/p' - lambda/p) N0^(lambda/p) p / (1 - lambda - alpha p)]".into(),
                free_symbols: vec![],
            }
        }
        ConstantKind::KAlpha { b, n0, p, lambda, alpha } => {
            let h = hedberg(b, n0, p, lambda, alpha)?;
            let q = p * (1.0 - lambda) / (1.0 - lambda - alpha * p);
            let value = (1.0 + 2.0 * conj(p).powf(1.0 / p)).powf(p / q) * h;
            ConstantValue {
                value,
                coefficient: Some(value),
                expression:
                    "4 [1 + 2 (p')^(1/p)]^(p/q) [b N0 / alpha + b^(1/p' - lambda/p) N0^(lambda/p) p / (1 - lambda - alpha p)]"
                        .into(),
                free_symbols: vec![],
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(kind: ConstantKind) -> f64 {
        theoretical_constant(kind, &FreeConstants::default()).unwrap().value
    }

    #[test]
    fn morrey_modified_maximal_at_two() {
        let v = eval(ConstantKind::MorreyModifiedMaximal { p: 2.0 });
        assert!((v - (1.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((v - 3.8284).abs() < 1e-4);
    }

    #[test]
    fn maximal_example() {
        let v = eval(ConstantKind::Maximal { c_d: 2.0, lambda: 0.5, p: 2.0 });
        assert!((v - (2f64.powf(0.25) * 2f64.sqrt() + 1.0)).abs() < 1e-12);
        assert!((v - 2.6818).abs() < 1e-4);
    }

    #[test]
    fn riesz_example() {
        let c = theoretical_constant(
            ConstantKind::Riesz { p: 2.0, lambda: 0.5, gamma: 1.0, alpha: 0.125, q: 4.0 },
            &FreeConstants::default(),
        )
        .unwrap();
        assert!((c.coefficient.unwrap() - 16.0 * (2f64.powf(0.25) + 1.0)).abs() < 1e-12);
        assert!((c.value - 35.03).abs() < 1e-2);
        assert_eq!(c.free_symbols, vec!["c_riesz".to_string()]);
    }

    #[test]
    fn k_alpha_factors_through_modified_maximal_and_hedberg() {
        let (b, n0, p, lambda, alpha) = (1.5, 3.0, 2.0, 0.3, 0.1);
        let q = p * (1.0 - lambda) / (1.0 - lambda - alpha * p);
        let k = eval(ConstantKind::KAlpha { b, n0, p, lambda, alpha });
        let m = eval(ConstantKind::MorreyModifiedMaximal { p });
        let h = eval(ConstantKind::Hedberg { b, n0, p, lambda, alpha });
        assert!((k - m.powf(p / q) * h).abs() < 1e-12 * k);
    }

    #[test]
    fn cz_branches() {
        let v = eval(ConstantKind::Cz { p: 1.5, lambda: 0.3 });
        assert!((v - (3.0 + 3.0 + 2.2 / 0.7)).abs() < 1e-12);
        let v = eval(ConstantKind::Cz { p: 3.0, lambda: 0.0 });
        assert!((v - (3.0 + 3.0 + 4.0)).abs() < 1e-12);
        assert!(theoretical_constant(ConstantKind::Cz { p: 2.0, lambda: 0.0 }, &FreeConstants::default()).is_err());
    }

    #[test]
    fn out_of_window_parameters() {
        let f = FreeConstants::default();
        assert!(theoretical_constant(ConstantKind::Hedberg { b: 1.0, n0: 1.0, p: 2.0, lambda: 0.5, alpha: 0.25 }, &f).is_err());
        let bad = FreeConstants { c_0: 0.0, ..FreeConstants::default() };
        assert!(theoretical_constant(ConstantKind::LpModifiedMaximal { p: 2.0 }, &bad).is_err());
    }
}
