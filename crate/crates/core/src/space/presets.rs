//! Small spaces used throughout the tests and examples.

use super::{MetricSpec, PointSpec, QuasimetricSpace, SpaceFile};

/// `n` equally spaced points on `[0, 1]` with weights `1/n`.
pub fn uniform_grid(n: usize) -> QuasimetricSpace {
    line_space(format!("grid{n}"), n, MetricSpec::Euclidean)
}

/// Uniform grid with the snowflake metric `|x - y|^exponent`.
pub fn snowflake_grid(n: usize, exponent: f64) -> QuasimetricSpace {
    line_space(format!("snowflake{n}"), n, MetricSpec::Snowflake { exponent })
}

fn line_space(name: String, n: usize, metric: MetricSpec) -> QuasimetricSpace {
    assert!(n >= 2);
    let points = (0..n).map(|i| PointSpec::Scalar(i as f64 / (n - 1) as f64)).collect();
    let weights = vec![1.0 / n as f64; n];
    QuasimetricSpace::from_file(SpaceFile { name: Some(name), points, metric, weights })
        .expect("grid presets are valid")
}

/// Two atoms at distance 1 with the given weights.
pub fn two_atoms(w0: f64, w1: f64) -> QuasimetricSpace {
    QuasimetricSpace::from_file(SpaceFile {
        name: Some("two-atoms".into()),
        points: vec![PointSpec::Scalar(0.0), PointSpec::Scalar(1.0)],
        metric: MetricSpec::Euclidean,
        weights: vec![w0, w1],
    })
    .expect("positive weights")
}

/// `{0, 1/2, 1}` with `d(x, y) = |x - y|^2`, given as an explicit matrix.
pub fn squared_line3() -> QuasimetricSpace {
    let xs = [0.0f64, 0.5, 1.0];
    let entries = xs.iter().map(|a| xs.iter().map(|b| (a - b) * (a - b)).collect()).collect();
    QuasimetricSpace::from_file(SpaceFile {
        name: Some("squared3".into()),
        points: vec![PointSpec::Label("0".into()), PointSpec::Label("1/2".into()), PointSpec::Label("1".into())],
        metric: MetricSpec::Matrix { entries },
        weights: vec![1.0 / 3.0; 3],
    })
    .expect("valid matrix")
}

/// Two points at distance 1 with weights 1/2: every representative ball
/// below the diameter has measure equal to its radius.
pub fn radius_calibrated_pair() -> QuasimetricSpace {
    two_atoms(0.5, 0.5).with_name("calibrated-pair")
}

/// The spaces shipped with the crate, by name.
pub fn shipped() -> Vec<QuasimetricSpace> {
    vec![
        uniform_grid(4),
        uniform_grid(16),
        uniform_grid(64),
        snowflake_grid(16, 0.5),
        two_atoms(1.0, 10.0),
    ]
}

/// Parses `grid<N>`, `snowflake<N>[:s]`, `two-atoms[:w0:w1]`, `squared3` or `calibrated-pair`.
pub fn by_name(name: &str) -> Option<QuasimetricSpace> {
    let mut parts = name.split(':');
    let head = parts.next()?;
    let args: Vec<f64> = parts.map(str::parse).collect::<std::result::Result<_, _>>().ok()?;
    let count = |prefix: &str| head.strip_prefix(prefix)?.parse::<usize>().ok().filter(|&n| (2..=4096).contains(&n));
    match (head, args.as_slice()) {
        ("two-atoms", []) => Some(two_atoms(1.0, 10.0)),
        ("two-atoms", &[w0, w1]) if w0 > 0.0 && w1 > 0.0 => Some(two_atoms(w0, w1)),
        ("squared3", []) => Some(squared_line3()),
        ("calibrated-pair", []) => Some(radius_calibrated_pair()),
        (h, []) if h.starts_with("grid") => count("grid").map(uniform_grid),
        (h, []) if h.starts_with("snowflake") => count("snowflake").map(|n| snowflake_grid(n, 0.5)),
        (h, &[s]) if h.starts_with("snowflake") && s > 0.0 => count("snowflake").map(|n| snowflake_grid(n, s)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for s in shipped() {
            assert_eq!(by_name(s.name()).unwrap().name(), s.name());
        }
        assert_eq!(by_name("snowflake8:0.25").unwrap().len(), 8);
        assert!(by_name("grid1").is_none());
        assert!(by_name("two-atoms:1").is_none());
        assert!(by_name("torus").is_none());
    }
}
