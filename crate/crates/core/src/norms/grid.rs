use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scales::EpsilonRange;

/// Lowest geometric node, relative to the upper end of the range.
pub const GEOMETRIC_FLOOR: f64 = 1e-6;
/// Offset of the top node below an open upper end.
pub const OPEN_END_OFFSET: f64 = 1e-9;
pub const DEFAULT_GEOMETRIC_NODES: usize = 64;

/// Shape of an epsilon grid, serialized in reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub upper: f64,
    pub closed: bool,
    pub geometric: usize,
    pub uniform: usize,
    pub nodes: usize,
}

/// Increasing nodes discretizing `sup_{0 < eps < upper}` (or `<= upper`).
///
/// Geometric nodes run from `upper * 1e-6` to `upper * (1 - 1e-9)`; uniform
/// nodes `upper * j / m` cover the far end. Refinement keeps every node, so
/// suprema over refined grids never decrease.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGrid {
    spec: GridSpec,
    nodes: Vec<f64>,
}

impl EpsilonGrid {
    pub fn new(range: EpsilonRange, geometric: usize) -> Result<Self> {
        Self::build(range, geometric, geometric / 2)
    }

    fn build(range: EpsilonRange, geometric: usize, uniform: usize) -> Result<Self> {
        let EpsilonRange { upper, closed } = range;
        if !(upper > 0.0) || !upper.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon range must have a positive finite end, got {upper}")));
        }
        if geometric < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 geometric nodes, got {geometric}")));
        }
        let lo = upper * GEOMETRIC_FLOOR;
        let span = ((1.0 - OPEN_END_OFFSET) / GEOMETRIC_FLOOR).ln();
        let last = (geometric - 1) as f64;
        let mut nodes: Vec<f64> = (0..geometric)
            .map(|i| if i == geometric - 1 { upper * (1.0 - OPEN_END_OFFSET) } else { lo * (span * (i as f64 / last)).exp() })
            .collect();
        nodes.extend((1..uniform).map(|j| upper * (j as f64 / uniform as f64)));
        if closed {
            nodes.push(upper);
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let spec = GridSpec { upper, closed, geometric, uniform, nodes: nodes.len() };
        Ok(Self { spec, nodes })
    }

    pub fn with_default(range: EpsilonRange) -> Result<Self> {
        Self::new(range, DEFAULT_GEOMETRIC_NODES)
    }

    /// The grid with `2k - 1` geometric and `2m` uniform nodes; contains `self`.
    pub fn refine(&self) -> Self {
        let range = EpsilonRange { upper: self.spec.upper, closed: self.spec.closed };
        Self::build(range, 2 * self.spec.geometric - 1, 2 * self.spec.uniform).expect("refinement of a valid grid")
    }

    /// The grid with `extra` nodes inserted; nodes outside the range are rejected.
    pub fn augmented(&self, extra: &[f64]) -> Result<Self> {
        let GridSpec { upper, closed, .. } = self.spec;
        let mut nodes = self.nodes.clone();
        for &e in extra {
            let inside = e > 0.0 && (e < upper || (closed && e == upper));
            if !inside {
                return Err(Error::InvalidParameter(format!("node {e} lies outside (0, {upper})")));
            }
            nodes.push(e);
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let spec = GridSpec { nodes: nodes.len(), ..self.spec };
        Ok(Self { spec, nodes })
    }

    /// Index of an exact node value.
    pub fn position(&self, eps: f64) -> Option<usize> {
        self.nodes.binary_search_by(|v| v.total_cmp(&eps)).ok()
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of leading nodes that belong to `sup_{0 < eps < s}`; at the
    /// closed upper end the end node itself is included.
    pub fn count_below(&self, s: f64) -> Result<usize> {
        if !(s > 0.0) || s > self.spec.upper {
            return Err(Error::InvalidParameter(format!("s must lie in (0, {}], got {s}", self.spec.upper)));
        }
        let k = if self.spec.closed && s == self.spec.upper {
            self.nodes.len()
        } else {
            self.nodes.partition_point(|&e| e < s)
        };
        if k == 0 {
            return Err(Error::InvalidParameter(format!("no grid node lies below s = {s}")));
        }
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(upper: f64) -> EpsilonRange {
        EpsilonRange { upper, closed: false }
    }

    #[test]
    fn nodes_are_increasing_and_inside_the_range() {
        let g = EpsilonGrid::with_default(open(0.3)).unwrap();
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!((g.nodes()[0] - 0.3e-6).abs() < 1e-18);
        assert_eq!(*g.nodes().last().unwrap(), 0.3 * (1.0 - 1e-9));
        assert_eq!(g.spec().geometric, 64);
        assert_eq!(g.len(), 64 + 31);
    }

    #[test]
    fn refinement_is_nested() {
        let g = EpsilonGrid::with_default(open(0.7)).unwrap();
        let r = g.refine().refine();
        for e in g.nodes() {
            assert!(r.nodes().contains(e), "{e} lost under refinement");
        }
    }

    #[test]
    fn closed_grid_contains_the_end() {
        let g = EpsilonGrid::new(EpsilonRange { upper: 1.0, closed: true }, 8).unwrap();
        assert_eq!(*g.nodes().last().unwrap(), 1.0);
        assert_eq!(g.count_below(1.0).unwrap(), g.len());
        assert_eq!(g.count_below(0.5).unwrap(), g.nodes().partition_point(|&e| e < 0.5));
    }

    #[test]
    fn augmentation_keeps_order() {
        let g = EpsilonGrid::new(open(0.5), 8).unwrap();
        let a = g.augmented(&[0.123, 0.4]).unwrap();
        assert_eq!(a.len(), g.len() + 2);
        assert!(a.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(a.position(0.123).is_some());
        assert!(g.augmented(&[0.5]).is_err());
    }

    #[test]
    fn s_outside_range_is_rejected() {
        let g = EpsilonGrid::with_default(open(0.3)).unwrap();
        assert!(g.count_below(0.0).is_err());
        assert!(g.count_below(0.31).is_err());
        assert!(g.count_below(1e-9).is_err());
    }
}
