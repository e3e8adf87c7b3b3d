//! Geometric constants of a finite quasimetric measure space, all computed by
//! exhaustive scans.

use serde::{Deserialize, Serialize};

use super::{BitSet, QuasimetricSpace, RadiusRange, DISTANCE_TIE_TOLERANCE};
use crate::error::{Error, Result};

/// Minimal quasi-triangle and quasi-symmetry constants with equality witnesses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasimetricConstants {
    pub c_t: f64,
    pub c_s: f64,
    /// `(x, y, z)` attaining `d(x,y) = c_t [d(x,z) + d(z,y)]`.
    pub triangle_witness: (usize, usize, usize),
    /// `(x, y)` attaining `d(x,y) = c_s d(y,x)`.
    pub symmetry_witness: (usize, usize),
    /// Dilation of the modified maximal operator, `c_t (1 + 2 c_s)`.
    pub n0: f64,
    /// Ball-chain constant `c_t (c_t (c_s + 1) + 1)`.
    pub a_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingReport {
    pub c_d: f64,
    pub witness_center: usize,
    pub witness_radius: f64,
    pub balls_scanned: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NestedBallReport {
    pub pass: bool,
    pub c_d: f64,
    pub pairs_checked: usize,
    /// Largest `lhs / rhs` over nested pairs; at most 1 on a pass.
    pub worst_ratio: f64,
    /// `((x, R), (y, r))` attaining the worst ratio.
    pub witness: ((usize, f64), (usize, f64)),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallChainReport {
    pub triples_checked: usize,
    pub failures: usize,
    pub first_failure: Option<(usize, f64, usize)>,
}

/// Radius window `[r_min, r_max)`; `r_max = None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhlforsWindow {
    pub r_min: f64,
    pub r_max: Option<f64>,
}

impl AhlforsWindow {
    pub fn new(r_min: f64, r_max: Option<f64>) -> Result<Self> {
        let empty = !(r_min >= 0.0) || r_max.is_some_and(|hi| !(hi > r_min));
        if empty {
            return Err(Error::InvalidParameter(format!(
                "empty radius window [{r_min}, {r_max:?})"
            )));
        }
        Ok(Self { r_min, r_max })
    }
}

/// One side of an Ahlfors-type bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityBound {
    pub exponent: f64,
    /// Extremal coefficient over representative radii in the window.
    pub coefficient: f64,
    /// Extremal coefficient over every radius in the window (left or right
    /// limits of the step function); `None` when it degenerates to 0 or infinity.
    pub envelope: Option<f64>,
    pub holds: bool,
    /// `(center, radius, measure)` attaining the representative coefficient,
    /// or exhibiting the failure.
    pub witness: (usize, f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AhlforsFit {
    pub window: AhlforsWindow,
    /// `mu B(x,r) >= c_low r^alpha`.
    pub lower: RegularityBound,
    /// `mu B(x,r) <= c_up r^beta`.
    pub upper: RegularityBound,
    /// Upper coefficient at exponent 1, representative radii.
    pub b_growth: f64,
    /// Upper coefficient at exponent 1 over every radius in the window.
    pub b_growth_sup: Option<f64>,
}

struct WindowPiece {
    center: usize,
    lo: f64,
    hi: f64,
    measure: f64,
    rep: f64,
}

impl QuasimetricSpace {
    pub fn quasimetric_constants(&self) -> QuasimetricConstants {
        let n = self.len();
        let mut c_t = 1.0;
        let mut tw = (0, 1, 0);
        let mut c_s = 1.0;
        let mut sw = (0, 1);
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let dxy = self.dist(x, y);
                let ratio = dxy / self.dist(y, x);
                if ratio > c_s {
                    c_s = ratio;
                    sw = (x, y);
                }
                for z in 0..n {
                    let r = dxy / (self.dist(x, z) + self.dist(z, y));
                    if r > c_t {
                        c_t = r;
                        tw = (x, y, z);
                    }
                }
            }
        }
        // rounding in sums of tied distances is not a triangle defect
        let snap = |c: f64| if c - 1.0 <= DISTANCE_TIE_TOLERANCE { 1.0 } else { c };
        let (c_t, c_s) = (snap(c_t), snap(c_s));
        QuasimetricConstants {
            c_t,
            c_s,
            triangle_witness: tw,
            symmetry_witness: sw,
            n0: c_t * (1.0 + 2.0 * c_s),
            a_bar: c_t * (c_t * (c_s + 1.0) + 1.0),
        }
    }

    /// Smallest `C_d >= 1` with `mu B(x, 2r) <= C_d mu B(x, r)` for all centers
    /// and all `0 < r < d_X`.
    pub fn doubling_constant(&self) -> DoublingReport {
        let mut best = DoublingReport { c_d: 1.0, witness_center: 0, witness_radius: 0.0, balls_scanned: 0 };
        for x in 0..self.len() {
            for r in self.representative_radii(x, 2.0, RadiusRange::Open) {
                best.balls_scanned += 1;
                let ratio = self.ball_measure(x, 2.0 * r) / self.ball_measure(x, r);
                if ratio > best.c_d {
                    best.c_d = ratio;
                    best.witness_center = x;
                    best.witness_radius = r;
                }
            }
        }
        best
    }

    /// Checks `mu B(x,R) / mu B(y,r) <= C_d (R/r)^{log2 C_d}` for every pair of
    /// representative balls with `B(y,r)` inside `B(x,R)` and `r <= R`.
    pub fn nested_ball_bound_check(&self, c_d: f64) -> NestedBallReport {
        let exponent = c_d.log2();
        let mut balls: Vec<(usize, f64, f64, BitSet)> = Vec::new();
        for x in 0..self.len() {
            for r in self.representative_radii(x, 1.0, RadiusRange::Open) {
                balls.push((x, r, self.ball_measure(x, r), self.ball_bits(x, r)));
            }
        }
        let mut report = NestedBallReport {
            pass: true,
            c_d,
            pairs_checked: 0,
            worst_ratio: 0.0,
            witness: ((0, 0.0), (0, 0.0)),
        };
        for (x, big_r, big_m, big_bits) in &balls {
            for (y, r, m, bits) in &balls {
                if r > big_r || !bits.is_subset(big_bits) {
                    continue;
                }
                report.pairs_checked += 1;
                let lhs = big_m / m;
                let rhs = c_d * (big_r / r).powf(exponent);
                let ratio = lhs / rhs;
                if ratio > report.worst_ratio {
                    report.worst_ratio = ratio;
                    report.witness = ((*x, *big_r), (*y, *r));
                }
            }
        }
        report.pass = report.worst_ratio <= 1.0 + 1e-12;
        report
    }

    /// Checks `B(x,r) ⊂ B(y, c_t(c_s+1) r) ⊂ B(x, a_bar r)` for every center,
    /// every representative radius and every `y` in `B(x, r)`.
    pub fn ball_chain_check(&self, constants: &QuasimetricConstants) -> BallChainReport {
        let mid = constants.c_t * (constants.c_s + 1.0);
        let mut report = BallChainReport { triples_checked: 0, failures: 0, first_failure: None };
        for x in 0..self.len() {
            for r in self.representative_radii(x, 1.0, RadiusRange::Open) {
                let inner = self.ball_bits(x, r);
                let outer = self.ball_bits(x, constants.a_bar * r);
                for y in inner.iter() {
                    report.triples_checked += 1;
                    let middle = self.ball_bits(y, mid * r);
                    if !(inner.is_subset(&middle) && middle.is_subset(&outer)) {
                        report.failures += 1;
                        report.first_failure.get_or_insert((x, r, y));
                    }
                }
            }
        }
        report
    }

    fn window_pieces(&self, window: &AhlforsWindow) -> Vec<WindowPiece> {
        let hi_cap = window.r_max.unwrap_or(f64::INFINITY);
        let mut pieces = Vec::new();
        for x in 0..self.len() {
            let mut knots: Vec<f64> = self.sorted_distances(x).iter().copied().filter(|&d| d > 0.0).collect();
            knots.dedup();
            knots.insert(0, 0.0);
            knots.push(f64::INFINITY);
            for w in knots.windows(2) {
                // mu B(x, r) is constant on (w[0], w[1]]
                let lo = w[0].max(window.r_min);
                let hi = w[1].min(hi_cap);
                if !(lo < hi) {
                    continue;
                }
                let rep = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo + 1.0 };
                pieces.push(WindowPiece {
                    center: x,
                    lo,
                    hi,
                    measure: self.closed_ball_measure(x, w[0]),
                    rep,
                });
            }
        }
        pieces
    }

    /// Least-squares slope of `log mu B` against `log r` over representative radii.
    fn fitted_exponent(pieces: &[WindowPiece]) -> f64 {
        let pts: Vec<(f64, f64)> = pieces.iter().map(|p| (p.rep.ln(), p.measure.ln())).collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (x, y) in &pts {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        if sxx > 0.0 { sxy / sxx } else { 0.0 }
    }

    /// Lower and upper Ahlfors coefficients on a radius window. When
    /// `exponents` is `None` both exponents are fitted by least squares.
    pub fn ahlfors_fit(&self, window: AhlforsWindow, exponents: Option<(f64, f64)>) -> Result<AhlforsFit> {
        let pieces = self.window_pieces(&window);
        if pieces.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "empty radius window [{}, {:?}) for this space",
                window.r_min, window.r_max
            )));
        }
        let (alpha, beta) = exponents.unwrap_or_else(|| {
            let s = Self::fitted_exponent(&pieces);
            (s, s)
        });
        let lower = lower_bound(&pieces, alpha);
        let upper = upper_bound(&pieces, beta);
        let growth = upper_bound(&pieces, 1.0);
        Ok(AhlforsFit { window, lower, upper, b_growth: growth.coefficient, b_growth_sup: growth.envelope })
    }

    /// Smallest `b` with `mu B(x,r) <= b r` for every center and every radius
    /// `r >= ` the smallest positive distance. Returns `b` and its witness.
    pub fn growth_constant(&self) -> (f64, (usize, f64, f64)) {
        let window = AhlforsWindow { r_min: self.min_positive_distance(), r_max: None };
        let b = upper_bound(&self.window_pieces(&window), 1.0);
        (b.envelope.expect("window bounded away from 0"), b.witness)
    }
}

fn upper_bound(pieces: &[WindowPiece], beta: f64) -> RegularityBound {
    let mut coef = 0.0;
    let mut witness = (0, 0.0, 0.0);
    let mut envelope: f64 = 0.0;
    let mut fail: Option<(usize, f64, f64)> = None;
    for p in pieces {
        let c = p.measure / p.rep.powf(beta);
        if c > coef {
            coef = c;
            witness = (p.center, p.rep, p.measure);
        }
        if p.lo > 0.0 {
            envelope = envelope.max(p.measure / p.lo.powf(beta));
        } else if fail.is_none_or(|f| p.measure > f.2) {
            // r -> 0 with a fixed atom: no finite coefficient
            fail = Some((p.center, p.rep, p.measure));
        }
    }
    match fail {
        Some(w) => RegularityBound { exponent: beta, coefficient: coef, envelope: None, holds: false, witness: w },
        None => RegularityBound { exponent: beta, coefficient: coef, envelope: Some(envelope), holds: true, witness },
    }
}

fn lower_bound(pieces: &[WindowPiece], alpha: f64) -> RegularityBound {
    let mut coef = f64::INFINITY;
    let mut witness = (0, 0.0, 0.0);
    let mut envelope = f64::INFINITY;
    for p in pieces {
        let c = p.measure / p.rep.powf(alpha);
        if c < coef {
            coef = c;
            witness = (p.center, p.rep, p.measure);
        }
        envelope = envelope.min(if p.hi.is_finite() { p.measure / p.hi.powf(alpha) } else { 0.0 });
    }
    let envelope = (envelope > 0.0).then_some(envelope);
    RegularityBound { exponent: alpha, coefficient: coef, envelope, holds: coef > 0.0, witness }
}

#[cfg(test)]
mod tests {
    use super::super::{presets, MetricSpec, PointSpec};
    use super::*;

    #[test]
    fn line_metric_constants_are_one() {
        let c = presets::uniform_grid(6).quasimetric_constants();
        assert_eq!(c.c_t, 1.0);
        assert_eq!(c.c_s, 1.0);
        assert_eq!(c.n0, 3.0);
        assert_eq!(c.a_bar, 3.0);
    }

    #[test]
    fn squared_distance_has_triangle_constant_two() {
        let s = presets::squared_line3();
        let c = s.quasimetric_constants();
        assert!((c.c_t - 2.0).abs() < 1e-15);
        assert_eq!(c.c_s, 1.0);
        let (x, y, z) = c.triangle_witness;
        assert_eq!((x.min(y), x.max(y), z), (0, 2, 1));
    }

    #[test]
    fn asymmetric_matrix_reports_symmetry_constant() {
        let pts = (0..3).map(|i| PointSpec::Label(format!("p{i}"))).collect();
        let m = MetricSpec::Matrix {
            entries: vec![vec![0.0, 2.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
        };
        let s = QuasimetricSpace::new(pts, m, vec![1.0; 3]).unwrap();
        let c = s.quasimetric_constants();
        assert!(c.c_s >= 2.0);
        assert_eq!(c.symmetry_witness, (0, 1));
    }

    #[test]
    fn two_atoms_double_to_eleven() {
        let s = presets::two_atoms(1.0, 10.0);
        let d = s.doubling_constant();
        assert!((d.c_d - 11.0).abs() < 1e-12);
        assert_eq!(d.witness_center, 0);
    }

    #[test]
    fn grid_doubling_is_three() {
        let d = presets::uniform_grid(16).doubling_constant();
        assert!((d.c_d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn growth_envelope_on_grid4() {
        let s = presets::uniform_grid(4);
        let fit = s.ahlfors_fit(AhlforsWindow::new(1.0 / 3.0, Some(1.0)).unwrap(), Some((1.0, 1.0))).unwrap();
        assert!((fit.b_growth - 1.5).abs() < 1e-12);
        assert!(fit.upper.holds);
    }

    #[test]
    fn window_reaching_zero_breaks_upper_regularity() {
        let s = presets::two_atoms(1.0, 10.0);
        let fit = s.ahlfors_fit(AhlforsWindow::new(0.0, Some(1.0)).unwrap(), Some((1.0, 1.0))).unwrap();
        assert!(!fit.upper.holds);
        assert_eq!(fit.upper.witness.2, 10.0);
        assert!(fit.upper.envelope.is_none());
    }

    #[test]
    fn empty_window_is_an_error() {
        assert!(AhlforsWindow::new(0.5, Some(0.5)).is_err());
        let s = presets::uniform_grid(4);
        assert!(s.ahlfors_fit(AhlforsWindow { r_min: 5.0, r_max: Some(6.0) }, None).is_ok());
        assert!(AhlforsWindow::new(-1.0, None).is_err());
    }
}
