//! Calderón–Zygmund kernels: built-in and explicit kernels, the modulus of
//! continuity `w`, and a validation report covering size, smoothness,
//! `Delta_2`, Dini and `L^2` boundedness.

use serde::{Deserialize, Serialize};

use super::PotentialKind;
use crate::error::{Error, Result};
use crate::norms::GridFunction;
use crate::space::QuasimetricSpace;

/// Default constant `C` of the triple filter `d(x2, y) >= C d(x1, x2)`.
pub const DEFAULT_FILTER_CONSTANT: f64 = 2.0;
/// `Delta_2` constants above this count as a failure.
pub const DELTA2_CAP: f64 = 1e3;
const L2_TOLERANCE: f64 = 1e-8;
const L2_MAX_ITER: usize = 20_000;
const DINI_BLOCKS: usize = 60;
const DINI_PANELS: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `1 / (x - y)` on scalar coordinates.
    Hilbert,
    /// `d(x, y)^(alpha - gamma)`.
    RieszGamma { alpha: f64, gamma: f64 },
    /// `mu B(x, d(x, y))^(alpha - 1)`.
    RieszMeasure { alpha: f64 },
    /// `d(x, y)^(alpha - 1)`.
    KAlpha { alpha: f64 },
    /// Explicit values `entries[x][y]`; the diagonal is ignored.
    Matrix { entries: Vec<Vec<f64>> },
}

impl KernelSpec {
    /// Dense kernel matrix, row-major, zero diagonal.
    pub fn matrix(&self, space: &QuasimetricSpace) -> Result<Vec<f64>> {
        let n = space.len();
        let mut k = vec![0.0; n * n];
        match self {
            KernelSpec::Hilbert => {
                let xs: Vec<f64> = (0..n)
                    .map(|i| match space.coordinates(i).as_deref() {
                        Some([t]) => Ok(*t),
                        _ => Err(Error::Kernel("the Hilbert kernel needs scalar point coordinates".into())),
                    })
                    .collect::<Result<_>>()?;
                for x in 0..n {
                    for y in 0..n {
                        if x != y {
                            k[x * n + y] = 1.0 / (xs[x] - xs[y]);
                        }
                    }
                }
            }
            KernelSpec::RieszGamma { alpha, gamma } => fill(&mut k, space, PotentialKind::Gamma { alpha: *alpha, gamma: *gamma })?,
            KernelSpec::RieszMeasure { alpha } => fill(&mut k, space, PotentialKind::Measure { alpha: *alpha })?,
            KernelSpec::KAlpha { alpha } => fill(&mut k, space, PotentialKind::KAlpha { alpha: *alpha })?,
            KernelSpec::Matrix { entries } => {
                if entries.len() != n || entries.iter().any(|r| r.len() != n) {
                    return Err(Error::Kernel(format!("kernel matrix must be {n} x {n}")));
                }
                for x in 0..n {
                    for y in 0..n {
                        if x != y {
                            let v = entries[x][y];
                            if !v.is_finite() {
                                return Err(Error::Kernel(format!("kernel entry ({x}, {y}) is not finite")));
                            }
                            k[x * n + y] = v;
                        }
                    }
                }
            }
        }
        Ok(k)
    }
}

fn fill(k: &mut [f64], space: &QuasimetricSpace, kind: PotentialKind) -> Result<()> {
    kind.validate().map_err(|e| Error::Kernel(e.to_string()))?;
    let n = space.len();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                k[x * n + y] = kind.kernel(space, x, y);
            }
        }
    }
    Ok(())
}

/// The modulus of continuity `w` of the smoothness condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModulusSpec {
    /// `t^exponent`.
    Power { exponent: f64 },
    /// `ln(e / t)^(-exponent)` for `t <= 1`, `1` beyond.
    InverseLog { exponent: f64 },
    /// Piecewise linear in `t` through `(t, w)` knots, constant outside.
    Table { knots: Vec<(f64, f64)> },
}

impl Default for ModulusSpec {
    fn default() -> Self {
        ModulusSpec::Power { exponent: 1.0 }
    }
}

impl ModulusSpec {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ModulusSpec::Power { exponent } => t.powf(*exponent),
            ModulusSpec::InverseLog { .. } => self.eval_neglog(-t.ln()),
            ModulusSpec::Table { knots } => table(knots, t),
        }
    }

    /// `w(e^{-u})`, stable for very large `u`.
    pub fn eval_neglog(&self, u: f64) -> f64 {
        match self {
            ModulusSpec::Power { exponent } => (-exponent * u).exp(),
            ModulusSpec::InverseLog { exponent } => {
                if u <= 0.0 {
                    1.0
                } else {
                    (1.0 + u).powf(-exponent)
                }
            }
            ModulusSpec::Table { knots } => table(knots, (-u).exp()),
        }
    }
}

fn table(knots: &[(f64, f64)], t: f64) -> f64 {
    match knots {
        [] => 0.0,
        [(_, w)] => *w,
        _ => {
            if t <= knots[0].0 {
                return knots[0].1;
            }
            let last = knots[knots.len() - 1];
            if t >= last.0 {
                return last.1;
            }
            let k = knots.partition_point(|&(x, _)| x <= t);
            let (t0, w0) = knots[k - 1];
            let (t1, w1) = knots[k];
            w0 + (w1 - w0) * (t - t0) / (t1 - t0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiniReport {
    pub converged: bool,
    /// Estimate of `int_0^1 w(t) / t dt`, including a geometric tail.
    pub value: Option<f64>,
    /// Integrals over the blocks `u in [2^j - 1, 2^(j+1) - 1]`, `u = -ln t`.
    pub last_block_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub positive: bool,
    pub monotone: bool,
    /// `(t1, t2)` with `t1 < t2` and `w(t1) > w(t2)`.
    pub monotone_witness: Option<(f64, f64)>,
    /// `max w(2t) / w(t)` over a dyadic grid.
    pub delta2: f64,
    pub delta2_pass: bool,
    pub dini: DiniReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub filter_constant: f64,
    pub triples: usize,
    /// Minimal `C` with `|K(x1,y)-K(x2,y)| + |K(y,x1)-K(y,x2)| <= C w(d(x2,x1)/d(x2,y)) / mu B(x2, d(x2,y))`.
    pub constant: f64,
    pub witness: Option<(usize, usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    /// Minimal `C` with `|K(x, y)| <= C / mu B(x, d(x, y))`.
    pub size_constant: f64,
    pub size_witness: (usize, usize),
    pub smoothness: SmoothnessReport,
    pub modulus: ModulusReport,
    /// Operator norm on `L^2(mu)` by power iteration.
    pub l2_norm: f64,
    pub l2_iterations: usize,
    pub l2_converged: bool,
    pub passed: bool,
    pub failures: Vec<String>,
}

fn modulus_report(w: &ModulusSpec) -> ModulusReport {
    let ts: Vec<f64> = (-320..=80).map(|k| 2f64.powf(k as f64 / 8.0)).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| w.eval(t)).collect();
    let positive = vals.iter().all(|&v| v > 0.0 && v.is_finite());
    let mut monotone_witness = None;
    let mut running = (vals[0], ts[0]);
    for (&t, &v) in ts.iter().zip(&vals).skip(1) {
        if v < running.0 {
            monotone_witness = Some((running.1, t));
            break;
        }
        if v > running.0 {
            running = (v, t);
        }
    }
    let mut delta2 = 0.0f64;
    for k in -40..=10 {
        let t = 2f64.powi(k);
        let r = w.eval(2.0 * t) / w.eval(t);
        delta2 = delta2.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    ModulusReport {
        positive,
        monotone: monotone_witness.is_none(),
        monotone_witness,
        delta2,
        delta2_pass: delta2.is_finite() && delta2 <= DELTA2_CAP,
        dini: dini(w),
    }
}

/// `int_0^1 w(t)/t dt = int_0^inf w(e^{-u}) du` over dyadic `u`-blocks with a ratio test on the tail.
fn dini(w: &ModulusSpec) -> DiniReport {
    let mut total = 0.0;
    let mut blocks = Vec::with_capacity(DINI_BLOCKS);
    for j in 0..DINI_BLOCKS {
        let a = 2f64.powi(j as i32) - 1.0;
        let b = 2f64.powi(j as i32 + 1) - 1.0;
        let h = (b - a) / DINI_PANELS as f64;
        let mut s = w.eval_neglog(a) + w.eval_neglog(b);
        for i in 1..DINI_PANELS {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * w.eval_neglog(a + i as f64 * h);
        }
        let block = s * h / 3.0;
        total += block;
        blocks.push(block);
        if block <= 1e-15 * total {
            return DiniReport { converged: true, value: Some(total), last_block_ratio: 0.0 };
        }
    }
    let m = blocks.len();
    let ratio = blocks[m - 1] / blocks[m - 2];
    let stable = (blocks[m - 2] / blocks[m - 3] - ratio).abs() < 1e-3;
    if stable && ratio < 1.0 - 1e-3 {
        let tail = blocks[m - 1] * ratio / (1.0 - ratio);
        DiniReport { converged: true, value: Some(total + tail), last_block_ratio: ratio }
    } else {
        DiniReport { converged: false, value: None, last_block_ratio: ratio }
    }
}

fn smoothness(k: &[f64], space: &QuasimetricSpace, w: &ModulusSpec, c: f64) -> SmoothnessReport {
    let n = space.len();
    let mut best = 0.0f64;
    let mut witness = None;
    let mut triples = 0;
    for x2 in 0..n {
        for x1 in 0..n {
            if x1 == x2 {
                continue;
            }
            let d12 = space.dist(x2, x1);
            for y in 0..n {
                if y == x1 || y == x2 {
                    continue;
                }
                let d2y = space.dist(x2, y);
                if d2y < c * space.dist(x1, x2) {
                    continue;
                }
                triples += 1;
                let lhs = (k[x1 * n + y] - k[x2 * n + y]).abs() + (k[y * n + x1] - k[y * n + x2]).abs();
                let rhs = w.eval(d12 / d2y) / space.ball_measure(x2, d2y);
                let ratio = lhs / rhs;
                if ratio > best || ratio.is_nan() {
                    best = if ratio.is_nan() { f64::INFINITY } else { ratio };
                    witness = Some((x1, x2, y));
                }
            }
        }
    }
    SmoothnessReport { filter_constant: c, triples, constant: best, witness }
}

/// Spectral norm of `W^{1/2} K W^{1/2}` by power iteration on its Gram matrix.
fn l2_norm(k: &[f64], space: &QuasimetricSpace) -> (f64, usize, bool) {
    let n = space.len();
    let sw: Vec<f64> = space.weights().iter().map(|w| w.sqrt()).collect();
    let b: Vec<f64> = (0..n * n).map(|i| sw[i / n] * k[i] * sw[i % n]).collect();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 97) as f64).collect();
    let mut sigma2 = 0.0;
    let mut u = vec![0.0; n];
    for it in 1..=L2_MAX_ITER {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (0.0, it, true);
        }
        v.iter_mut().for_each(|x| *x /= norm);
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = (0..n).map(|j| b[i * n + j] * v[j]).sum();
        }
        let next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| b[i * n + j] * u[i]).sum()).collect();
        let est = next.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        if it > 1 && (est - sigma2).abs() <= L2_TOLERANCE * est.abs() {
            return (est.sqrt(), it, true);
        }
        sigma2 = est;
        v = next;
    }
    (sigma2.sqrt(), L2_MAX_ITER, false)
}

/// Checks every kernel hypothesis; never fails, failures are listed in the report.
pub fn validate_cz_kernel(
    kernel: &KernelSpec,
    modulus: &ModulusSpec,
    space: &QuasimetricSpace,
    filter_constant: f64,
) -> Result<KernelReport> {
    if !(filter_constant >= 1.0) {
        return Err(Error::InvalidParameter(format!("filter constant must be at least 1, got {filter_constant}")));
    }
    let k = kernel.matrix(space)?;
    Ok(report_for(&k, modulus, space, filter_constant))
}

fn report_for(k: &[f64], modulus: &ModulusSpec, space: &QuasimetricSpace, filter_constant: f64) -> KernelReport {
    let n = space.len();
    let mut size = (0.0f64, (0, 0));
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let v = k[x * n + y].abs() * space.ball_measure(x, space.dist(x, y));
                if v > size.0 {
                    size = (v, (x, y));
                }
            }
        }
    }
    let smooth = smoothness(k, space, modulus, filter_constant);
    let mrep = modulus_report(modulus);
    let (l2, iters, l2_ok) = l2_norm(k, space);

    let mut failures = Vec::new();
    if !mrep.positive {
        failures.push("modulus w is not positive and finite".into());
    }
    if let Some((a, b)) = mrep.monotone_witness {
        failures.push(format!("modulus w is not non-decreasing: w({a:e}) > w({b:e})"));
    }
    if !mrep.delta2_pass {
        failures.push(format!("modulus w fails the doubling (Delta_2) condition: sup w(2t)/w(t) = {}", mrep.delta2));
    }
    if !mrep.dini.converged {
        failures.push(format!(
            "Dini integral of w diverges (block ratio {})",
            mrep.dini.last_block_ratio
        ));
    }
    if !smooth.constant.is_finite() {
        failures.push("smoothness constant is infinite".into());
    }
    if !l2_ok {
        failures.push("L^2 power iteration did not converge".into());
    }
    KernelReport {
        size_constant: size.0,
        size_witness: size.1,
        smoothness: smooth,
        modulus: mrep,
        l2_norm: l2,
        l2_iterations: iters,
        l2_converged: l2_ok,
        passed: failures.is_empty(),
        failures,
    }
}

/// A kernel whose validation report passed, ready to apply on its space.
#[derive(Clone, Debug)]
pub struct ValidatedKernel {
    spec: KernelSpec,
    modulus: ModulusSpec,
    report: KernelReport,
    matrix: Vec<f64>,
    n: usize,
}

impl ValidatedKernel {
    pub fn new(kernel: KernelSpec, modulus: ModulusSpec, space: &QuasimetricSpace, filter_constant: f64) -> Result<Self> {
        let report = validate_cz_kernel(&kernel, &modulus, space, filter_constant)?;
        if !report.passed {
            return Err(Error::Kernel(report.failures.join("; ")));
        }
        let matrix = kernel.matrix(space)?;
        Ok(Self { spec: kernel, modulus, report, matrix, n: space.len() })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn modulus(&self) -> &ModulusSpec {
        &self.modulus
    }

    pub fn report(&self) -> &KernelReport {
        &self.report
    }
}

/// `Tf(x) = sum_{y != x} K(x, y) f(y) w_y`.
pub fn cz_apply(f: &GridFunction, space: &QuasimetricSpace, kernel: &ValidatedKernel) -> Result<GridFunction> {
    f.check_space(space)?;
    if kernel.n != space.len() {
        return Err(Error::Kernel(format!("kernel was validated on {} points, space has {}", kernel.n, space.len())));
    }
    let n = space.len();
    let v = f.values();
    let out = (0..n)
        .map(|x| (0..n).filter(|&y| y != x).map(|y| kernel.matrix[x * n + y] * v[y] * space.weight(y)).sum())
        .collect();
    GridFunction::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::presets;

    #[test]
    fn lipschitz_modulus_passes() {
        let r = modulus_report(&ModulusSpec::Power { exponent: 1.0 });
        assert!(r.monotone && r.positive);
        assert!((r.delta2 - 2.0).abs() < 1e-12);
        assert!((r.dini.value.unwrap() - 1.0).abs() < 1e-9, "{:?}", r.dini);
    }

    #[test]
    fn inverse_log_modulus_fails_dini() {
        let r = modulus_report(&ModulusSpec::InverseLog { exponent: 1.0 });
        assert!(r.delta2_pass);
        assert!(!r.dini.converged);
        let r = modulus_report(&ModulusSpec::InverseLog { exponent: 2.0 });
        assert!(r.dini.converged);
        assert!((r.dini.value.unwrap() - 1.0).abs() < 1e-6, "{:?}", r.dini);
    }

    #[test]
    fn non_monotone_modulus_has_witness() {
        let w = ModulusSpec::Table { knots: vec![(0.1, 0.1), (0.5, 0.5), (1.0, 0.2)] };
        let r = modulus_report(&w);
        let (a, b) = r.monotone_witness.unwrap();
        assert!(a < b && w.eval(a) > w.eval(b));
    }

    #[test]
    fn hilbert_cancels_at_the_midpoint() {
        let s = presets::uniform_grid(17);
        let k = ValidatedKernel::new(KernelSpec::Hilbert, ModulusSpec::default(), &s, DEFAULT_FILTER_CONSTANT).unwrap();
        let t = cz_apply(&GridFunction::constant(17, 1.0), &s, &k).unwrap();
        assert!(t.values()[8].abs() < 1e-14);
        let z = cz_apply(&GridFunction::zeros(17), &s, &k).unwrap();
        assert!(z.is_zero());
        let size = k.report().size_constant;
        assert!(size > 0.5 && size < 8.0, "{size}");
    }

    #[test]
    fn hilbert_needs_scalar_points() {
        let s = presets::squared_line3();
        assert!(KernelSpec::Hilbert.matrix(&s).is_err());
    }

    #[test]
    fn divergent_modulus_rejects_kernel() {
        let s = presets::uniform_grid(8);
        let err = ValidatedKernel::new(KernelSpec::Hilbert, ModulusSpec::InverseLog { exponent: 1.0 }, &s, 2.0).unwrap_err();
        assert!(err.to_string().contains("Dini"), "{err}");
    }
}
