use serde::{Deserialize, Serialize};

use super::GridFunction;
use crate::scales::MorreyVariant;
use crate::space::{QuasimetricSpace, RadiusRange};

/// A ball realising a supremum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallRef {
    pub center: usize,
    pub radius: f64,
    /// `mu B(center, radius)`.
    pub measure: f64,
    /// Quantity raised to the Morrey exponent: a ball measure or `r^gamma`.
    pub denominator_base: f64,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    center: usize,
    /// The ball is the first `k` neighbors of `center`.
    k: usize,
    base: usize,
    radius: f64,
}

/// All distinct `(ball, denominator)` pairs of one Morrey variant over one
/// radius range, reusable across functions and exponents.
#[derive(Clone, Debug)]
pub struct MorreyTable {
    variant: MorreyVariant,
    range: RadiusRange,
    entries: Vec<Entry>,
    bases: Vec<f64>,
    /// Entry ranges per center, entries sorted by center.
    by_center: Vec<(usize, usize)>,
}

impl MorreyTable {
    pub fn new(space: &QuasimetricSpace, variant: MorreyVariant, range: RadiusRange) -> Self {
        let n = space.len();
        let dilation = variant.dilation();
        let mut raw: Vec<(usize, usize, f64, f64)> = Vec::new();
        for x in 0..n {
            for r in space.representative_radii(x, dilation, range) {
                let k = space.count_within(x, r);
                let base = match variant {
                    MorreyVariant::MeasurePower => space.prefix_measures(x)[k],
                    MorreyVariant::RadiusPower { gamma } => r.powf(gamma),
                    MorreyVariant::Modified { dilation } => space.ball_measure(x, dilation * r),
                };
                raw.push((x, k, base, r));
            }
        }
        // one entry per (center, ball, denominator); keep the first radius
        raw.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)).then(a.3.total_cmp(&b.3)));
        raw.dedup_by(|b, a| a.0 == b.0 && a.1 == b.1 && a.2 == b.2);

        let mut bases: Vec<f64> = raw.iter().map(|e| e.2).collect();
        bases.sort_by(f64::total_cmp);
        bases.dedup();
        let entries: Vec<Entry> = raw
            .iter()
            .map(|&(center, k, b, radius)| Entry {
                center,
                k,
                base: bases.binary_search_by(|v| v.total_cmp(&b)).expect("base present"),
                radius,
            })
            .collect();
        let mut by_center = vec![(0, 0); n];
        let mut i = 0;
        for (x, slot) in by_center.iter_mut().enumerate() {
            let start = i;
            while i < entries.len() && entries[i].center == x {
                i += 1;
            }
            *slot = (start, i);
        }
        Self { variant, range, entries, bases, by_center }
    }

    pub fn variant(&self) -> MorreyVariant {
        self.variant
    }

    pub fn range(&self) -> RadiusRange {
        self.range
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ball(&self, space: &QuasimetricSpace, entry: usize) -> BallRef {
        let e = self.entries[entry];
        BallRef {
            center: e.center,
            radius: e.radius,
            measure: space.prefix_measures(e.center)[e.k],
            denominator_base: self.bases[e.base],
        }
    }

    /// `(mu B, denominator base)` of every entry, in entry order.
    pub fn measures_and_bases(&self, space: &QuasimetricSpace) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (space.prefix_measures(e.center)[e.k], self.bases[e.base])).collect()
    }

    /// `sup_B base(B)^(-lambda) int_B |f|^exponent` (before the `1/exponent`
    /// root) and the maximizing entry. Ties keep the first entry.
    pub fn raw_sup(&self, space: &QuasimetricSpace, f: &GridFunction, exponent: f64, lambda: f64) -> (f64, usize) {
        let g: Vec<f64> = f.values().iter().zip(space.weights()).map(|(v, w)| v.abs().powf(exponent) * w).collect();
        let den: Vec<f64> = self.bases.iter().map(|b| b.powf(lambda)).collect();
        self.sup_with(space, &g, &den)
    }

    /// Per-ball integrals `int_B |f|^exponent`, in entry order.
    pub fn integrals(&self, space: &QuasimetricSpace, f: &GridFunction, exponent: f64) -> Vec<f64> {
        let g: Vec<f64> = f.values().iter().zip(space.weights()).map(|(v, w)| v.abs().powf(exponent) * w).collect();
        let mut out = vec![0.0; self.entries.len()];
        let mut prefix = vec![0.0; space.len() + 1];
        for (x, &(start, end)) in self.by_center.iter().enumerate() {
            if start == end {
                continue;
            }
            fill_prefix(&mut prefix, space.neighbors(x), &g);
            for (slot, e) in out[start..end].iter_mut().zip(&self.entries[start..end]) {
                *slot = prefix[e.k];
            }
        }
        out
    }

    fn sup_with(&self, space: &QuasimetricSpace, g: &[f64], den: &[f64]) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        let mut prefix = vec![0.0; space.len() + 1];
        for (x, &(start, end)) in self.by_center.iter().enumerate() {
            if start == end {
                continue;
            }
            fill_prefix(&mut prefix, space.neighbors(x), g);
            for (i, e) in self.entries[start..end].iter().enumerate() {
                let v = prefix[e.k] / den[e.base];
                if v > best {
                    best = v;
                    arg = start + i;
                }
            }
        }
        (best, arg)
    }

    /// Morrey norm at `(exponent, lambda)` and the maximizing entry.
    pub fn norm(&self, space: &QuasimetricSpace, f: &GridFunction, exponent: f64, lambda: f64) -> (f64, usize) {
        if f.is_zero() {
            return (0.0, 0);
        }
        let (s, arg) = self.raw_sup(space, f, exponent, lambda);
        (s.powf(1.0 / exponent), arg)
    }
}

fn fill_prefix(prefix: &mut [f64], order: &[usize], g: &[f64]) {
    let mut acc = 0.0;
    prefix[0] = 0.0;
    for (j, &y) in order.iter().enumerate() {
        acc += g[y];
        prefix[j + 1] = acc;
    }
}
