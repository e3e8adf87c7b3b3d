//! Finite quasimetric measure spaces.
//!
//! A space is a finite point set with a (possibly asymmetric) quasimetric and
//! strictly positive point weights. Balls are open, `B(x, r) = {y : d(x, y) < r}`,
//! and always use the distance from the center in the order `d(center, y)`.
//!
//! Every ball-dependent quantity is a step function of the radius whose jumps
//! sit at the distances `d(x, y)` (or at `d(x, y) / a` for an `a`-dilated ball).
//! Suprema over radii are therefore evaluated exactly on one representative
//! radius per open interval between consecutive jump points, see
//! [`QuasimetricSpace::representative_radii`].

mod geometry;
pub mod presets;

pub use geometry::{
    AhlforsFit, AhlforsWindow, BallChainReport, DoublingReport, NestedBallReport,
    QuasimetricConstants, RegularityBound,
};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the metric of a space file is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSpec {
    /// Euclidean distance between point coordinates.
    Euclidean,
    /// `|x - y|^exponent` on coordinates.
    Snowflake { exponent: f64 },
    /// Row-major explicit matrix, `entries[i][j] = d(i, j)`.
    Matrix { entries: Vec<Vec<f64>> },
}

/// A point as written in a space file: a scalar coordinate, a coordinate
/// vector, or an opaque label (explicit-matrix spaces only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Coords(Vec<f64>),
    Label(String),
}

impl PointSpec {
    fn coords(&self) -> Option<Vec<f64>> {
        match self {
            PointSpec::Scalar(x) => Some(vec![*x]),
            PointSpec::Coords(c) => Some(c.clone()),
            PointSpec::Label(_) => None,
        }
    }
}

/// On-disk description of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub points: Vec<PointSpec>,
    pub metric: MetricSpec,
    pub weights: Vec<f64>,
}

/// Upper end of the radius range over which a supremum is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusRange {
    /// `0 < r < d_X`.
    Open,
    /// `0 < r < d_X` plus the single radius `d_X (1 + 1e-9)`.
    Closed,
    /// All `r > 0`.
    Unbounded,
}

/// Relative offset used to step just past the diameter for [`RadiusRange::Closed`].
pub const CLOSED_RADIUS_OFFSET: f64 = 1e-9;

/// An open ball with its members listed in increasing distance from the center.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
    pub measure: f64,
}

#[derive(Clone, Debug)]
pub struct QuasimetricSpace {
    file: SpaceFile,
    n: usize,
    dist: Vec<f64>,
    weights: Vec<f64>,
    diameter: f64,
    total: f64,
    min_positive: f64,
    // per center: points sorted by d(center, .), their distances, prefix measures (len n + 1)
    order: Vec<Vec<usize>>,
    sorted_dist: Vec<Vec<f64>>,
    prefix: Vec<Vec<f64>>,
}

impl QuasimetricSpace {
    pub fn new(points: Vec<PointSpec>, metric: MetricSpec, weights: Vec<f64>) -> Result<Self> {
        Self::from_file(SpaceFile { name: None, points, metric, weights })
    }

    pub fn from_file(file: SpaceFile) -> Result<Self> {
        let n = file.points.len();
        if n < 2 {
            return Err(Error::InvalidSpace(format!("need at least 2 points, got {n}")));
        }
        if file.weights.len() != n {
            return Err(Error::InvalidSpace(format!(
                "{} weights for {} points",
                file.weights.len(),
                n
            )));
        }
        for (i, &w) in file.weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidSpace(format!("nonpositive weight {w} at point {i}")));
            }
        }
        let mut dist = build_distances(&file.points, &file.metric)?;
        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                if !d.is_finite() {
                    return Err(Error::InvalidSpace(format!("non-finite distance d({i},{j})")));
                }
                if d < 0.0 {
                    return Err(Error::InvalidSpace(format!("negative distance d({i},{j}) = {d}")));
                }
                if i == j && d != 0.0 {
                    return Err(Error::InvalidSpace(format!("d({i},{i}) = {d} must be 0")));
                }
                if i != j && d == 0.0 {
                    return Err(Error::InvalidSpace(format!(
                        "zero distance between distinct points {i} and {j}"
                    )));
                }
            }
        }

        merge_ties(&mut dist);
        let weights = file.weights.clone();
        let diameter = dist.iter().cloned().fold(0.0, f64::max);
        let total = weights.iter().sum();
        let min_positive = dist.iter().cloned().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);

        let mut order = Vec::with_capacity(n);
        let mut sorted_dist = Vec::with_capacity(n);
        let mut prefix = Vec::with_capacity(n);
        for c in 0..n {
            let mut idx: Vec<usize> = (0..n).collect();
            // center first, ties broken by index so the layout is deterministic
            idx.sort_by(|&a, &b| {
                dist[c * n + a].total_cmp(&dist[c * n + b]).then(a.cmp(&b))
            });
            let ds: Vec<f64> = idx.iter().map(|&y| dist[c * n + y]).collect();
            let mut pm = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            pm.push(0.0);
            for &y in &idx {
                acc += weights[y];
                pm.push(acc);
            }
            order.push(idx);
            sorted_dist.push(ds);
            prefix.push(pm);
        }

        Ok(Self { file, n, dist, weights, diameter, total, min_positive, order, sorted_dist, prefix })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_file(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("space files always serialize")
    }

    pub fn file(&self) -> &SpaceFile {
        &self.file
    }

    pub fn name(&self) -> &str {
        self.file.name.as_deref().unwrap_or("unnamed")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.file.name = Some(name.into());
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    #[inline]
    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Maximum pairwise distance `d_X`.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn total_measure(&self) -> f64 {
        self.total
    }

    pub fn min_positive_distance(&self) -> f64 {
        self.min_positive
    }

    /// Coordinates of point `x`, when the space was built from coordinates.
    pub fn coordinates(&self, x: usize) -> Option<Vec<f64>> {
        self.file.points[x].coords()
    }

    /// Points ordered by increasing `d(center, .)`; the center comes first.
    pub fn neighbors(&self, center: usize) -> &[usize] {
        &self.order[center]
    }

    /// Distances matching [`neighbors`](Self::neighbors).
    pub fn sorted_distances(&self, center: usize) -> &[f64] {
        &self.sorted_dist[center]
    }

    /// `prefix_measures(c)[k]` is the measure of the first `k` neighbors of `c`.
    pub fn prefix_measures(&self, center: usize) -> &[f64] {
        &self.prefix[center]
    }

    /// Number of points in the open ball `B(center, r)`.
    #[inline]
    pub fn count_within(&self, center: usize, r: f64) -> usize {
        self.sorted_dist[center].partition_point(|&d| d < r)
    }

    /// Number of points in the closed ball `{y : d(center, y) <= r}`.
    #[inline]
    pub fn count_within_closed(&self, center: usize, r: f64) -> usize {
        self.sorted_dist[center].partition_point(|&d| d <= r)
    }

    #[inline]
    pub fn ball_measure(&self, center: usize, r: f64) -> f64 {
        self.prefix[center][self.count_within(center, r)]
    }

    #[inline]
    pub fn closed_ball_measure(&self, center: usize, r: f64) -> f64 {
        self.prefix[center][self.count_within_closed(center, r)]
    }

    pub fn ball(&self, center: usize, r: f64) -> Result<Ball> {
        if center >= self.n {
            return Err(Error::InvalidParameter(format!("center {center} is not a point of the space")));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
        }
        let k = self.count_within(center, r);
        Ok(Ball {
            center,
            radius: r,
            members: self.order[center][..k].to_vec(),
            measure: self.prefix[center][k],
        })
    }

    /// One radius per open interval between consecutive jump points of
    /// `r -> (mu B(center, r), mu B(center, dilation * r))`, restricted to `range`.
    ///
    /// Jump points are the distances from the center and, when `dilation != 1`,
    /// those distances divided by the dilation. Each representative is the
    /// interval midpoint. Open balls are left-continuous in `r`, so every value
    /// of the pair over the range is realised at some representative.
    pub fn representative_radii(&self, center: usize, dilation: f64, range: RadiusRange) -> Vec<f64> {
        let mut breaks: Vec<f64> = Vec::with_capacity(2 * self.n);
        for &d in &self.sorted_dist[center] {
            if d > 0.0 {
                breaks.push(d);
                if dilation != 1.0 {
                    breaks.push(d / dilation);
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut knots = vec![0.0];
        match range {
            RadiusRange::Open | RadiusRange::Closed => {
                knots.extend(breaks.iter().copied().filter(|&b| b < self.diameter));
                knots.push(self.diameter);
            }
            RadiusRange::Unbounded => {
                let top = breaks.last().copied().unwrap_or(self.diameter);
                knots.extend(breaks.iter().copied());
                knots.push(2.0 * top + 1.0);
            }
        }
        let mut radii: Vec<f64> = knots.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        if range == RadiusRange::Closed {
            radii.push(self.diameter * (1.0 + CLOSED_RADIUS_OFFSET));
        }
        radii
    }

    /// Membership bitset of the open ball `B(center, r)`.
    pub fn ball_bits(&self, center: usize, r: f64) -> BitSet {
        let mut bits = BitSet::new(self.n);
        for &y in &self.order[center][..self.count_within(center, r)] {
            bits.insert(y);
        }
        bits
    }
}

/// Relative gap below which two distances count as equal.
pub const DISTANCE_TIE_TOLERANCE: f64 = 1e-12;

/// Replaces each cluster of distances within [`DISTANCE_TIE_TOLERANCE`] of
/// its smallest member by that member, so rounding in coordinates does not
/// split one sphere into two.
fn merge_ties(dist: &mut [f64]) {
    let mut values: Vec<f64> = dist.iter().copied().filter(|&d| d > 0.0).collect();
    values.sort_by(f64::total_cmp);
    // runs of equal values with their multiplicities
    let mut runs: Vec<(f64, usize)> = Vec::new();
    for &v in &values {
        match runs.last_mut() {
            Some((u, k)) if *u == v => *k += 1,
            _ => runs.push((v, 1)),
        }
    }
    // clusters within relative tolerance, each replaced by its most frequent value
    let mut canon = vec![0.0; runs.len()];
    let mut start = 0;
    while start < runs.len() {
        let head = runs[start].0;
        let mut end = start + 1;
        while end < runs.len() && runs[end].0 - head <= DISTANCE_TIE_TOLERANCE * head {
            end += 1;
        }
        let mode = runs[start..end].iter().fold(runs[start], |best, &r| if r.1 > best.1 { r } else { best }).0;
        canon[start..end].fill(mode);
        start = end;
    }
    for d in dist.iter_mut().filter(|d| **d > 0.0) {
        let i = runs.binary_search_by(|r| r.0.total_cmp(d)).expect("value collected above");
        *d = canon[i];
    }
}

fn build_distances(points: &[PointSpec], metric: &MetricSpec) -> Result<Vec<f64>> {
    let n = points.len();
    match metric {
        MetricSpec::Matrix { entries } => {
            if entries.len() != n || entries.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidSpace(format!("distance matrix must be {n} x {n}")));
            }
            Ok(entries.iter().flatten().copied().collect())
        }
        MetricSpec::Euclidean | MetricSpec::Snowflake { .. } => {
            let exponent = match metric {
                MetricSpec::Snowflake { exponent } => {
                    if !(*exponent > 0.0) {
                        return Err(Error::InvalidSpace(format!(
                            "snowflake exponent must be positive, got {exponent}"
                        )));
                    }
                    *exponent
                }
                _ => 1.0,
            };
            let coords: Vec<Vec<f64>> = points
                .iter()
                .map(|p| {
                    p.coords().ok_or_else(|| {
                        Error::InvalidSpace("labelled points need an explicit matrix metric".into())
                    })
                })
                .collect::<Result<_>>()?;
            let dim = coords[0].len();
            if coords.iter().any(|c| c.len() != dim) {
                return Err(Error::InvalidSpace("points have mixed dimensions".into()));
            }
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let e: f64 = coords[i]
                            .iter()
                            .zip(&coords[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        dist[i * n + j] = if exponent == 1.0 { e } else { e.powf(exponent) };
                    }
                }
            }
            Ok(dist)
        }
    }
}

/// Fixed-size membership set over point indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(n: usize) -> Self {
        Self { words: vec![0; n.div_ceil(64)] }
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| k * 64 + b)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounded_equal_distances_are_merged() {
        let s = presets::uniform_grid(4);
        assert_eq!(s.dist(1, 0), s.dist(1, 2));
        assert_eq!(s.sorted_distances(1)[1], s.sorted_distances(1)[2]);
    }

    fn grid4() -> QuasimetricSpace {
        presets::uniform_grid(4)
    }

    #[test]
    fn grid4_has_unit_diameter_and_mass() {
        let s = grid4();
        assert_eq!(s.diameter(), 1.0);
        assert!((s.total_measure() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ball_membership_is_strict() {
        let s = grid4();
        let b = s.ball(0, 0.5).unwrap();
        assert_eq!(b.members, vec![0, 1]);
        assert!((b.measure - 0.5).abs() < 1e-15);

        let b = s.ball(1, 0.999).unwrap();
        assert_eq!(b.members.len(), 4);
        assert!((b.measure - 1.0).abs() < 1e-15);

        // radius exactly 1/3 excludes the neighbour at distance 1/3
        let third = s.dist(0, 1);
        assert_eq!(s.ball(0, third).unwrap().members, vec![0]);

        let b = s.ball(2, 1e-3).unwrap();
        assert_eq!(b.members, vec![2]);
        assert_eq!(b.measure, s.weight(2));
    }

    #[test]
    fn nonpositive_radius_is_rejected() {
        assert!(grid4().ball(0, 0.0).is_err());
        assert!(grid4().ball(0, -1.0).is_err());
    }

    #[test]
    fn zero_weight_is_rejected() {
        let err = QuasimetricSpace::new(
            vec![PointSpec::Scalar(0.0), PointSpec::Scalar(1.0)],
            MetricSpec::Euclidean,
            vec![0.5, 0.0],
        )
        .unwrap_err();
        assert!(err.to_string().contains("nonpositive weight"));
    }

    #[test]
    fn matrix_errors() {
        let pts = vec![PointSpec::Label("a".into()), PointSpec::Label("b".into())];
        let zero = MetricSpec::Matrix { entries: vec![vec![0.0, 0.0], vec![1.0, 0.0]] };
        assert!(QuasimetricSpace::new(pts.clone(), zero, vec![1.0, 1.0])
            .unwrap_err()
            .to_string()
            .contains("zero distance"));
        let neg = MetricSpec::Matrix { entries: vec![vec![0.0, -1.0], vec![1.0, 0.0]] };
        assert!(QuasimetricSpace::new(pts, neg, vec![1.0, 1.0])
            .unwrap_err()
            .to_string()
            .contains("negative distance"));
    }

    #[test]
    fn single_point_is_rejected() {
        assert!(QuasimetricSpace::new(vec![PointSpec::Scalar(0.0)], MetricSpec::Euclidean, vec![1.0])
            .is_err());
    }

    #[test]
    fn representative_radii_cover_each_interval_once() {
        let s = grid4();
        let r = s.representative_radii(0, 1.0, RadiusRange::Open);
        // thresholds 1/3, 2/3 below d_X = 1
        assert_eq!(r.len(), 3);
        let counts: Vec<usize> = r.iter().map(|&x| s.count_within(0, x)).collect();
        assert_eq!(counts, vec![1, 2, 3]);

        let r = s.representative_radii(0, 1.0, RadiusRange::Unbounded);
        let counts: Vec<usize> = r.iter().map(|&x| s.count_within(0, x)).collect();
        assert_eq!(counts, vec![1, 2, 3, 4]);

        let r = s.representative_radii(1, 1.0, RadiusRange::Open);
        let counts: Vec<usize> = r.iter().map(|&x| s.count_within(1, x)).collect();
        assert_eq!(counts, vec![1, 3, 4]);
    }

    #[test]
    fn space_file_round_trips() {
        let s = presets::snowflake_grid(7, 0.5);
        let text = s.to_json();
        let back = QuasimetricSpace::from_file(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.file(), s.file());
        assert_eq!(back.to_json(), text);
    }
}
