use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::GridFunction;
use crate::space::{BitSet, QuasimetricSpace, RadiusRange};

/// Exponents of the power profiles `d(., x0)^(-beta)`.
pub const POWER_BETAS: [f64; 3] = [0.25, 0.5, 1.0];
pub const DEFAULT_RANDOM_COUNT: usize = 32;
/// Balls summed into one random step function.
const RANDOM_STEP_BALLS: usize = 3;

/// Which test functions to generate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// One indicator per distinct ball `B(x, r)`, `0 < r < d_X`.
    BallIndicators,
    PointMasses,
    /// `d(., x0)^(-beta)` for every `x0` and every beta in [`POWER_BETAS`],
    /// with value `(d_min / 2)^(-beta)` at `x0`.
    PowerProfiles,
    /// Nonnegative combinations of random ball indicators.
    RandomStep { seed: u64, count: usize },
    /// `(-1)^floor(i / period)` for periods `1, 2, 4, ...`.
    Oscillating,
    Constant,
    /// All of the above.
    Mixed { seed: u64 },
}

impl FamilySpec {
    /// Parses a family name; randomized families need a seed.
    pub fn parse(name: &str, seed: Option<u64>) -> Result<Self> {
        let need_seed = || {
            seed.ok_or_else(|| Error::InvalidParameter(format!("family {name} is randomized and needs a seed")))
        };
        Ok(match name {
            "ball-indicators" => FamilySpec::BallIndicators,
            "point-masses" => FamilySpec::PointMasses,
            "power-profiles" => FamilySpec::PowerProfiles,
            "random-step" => FamilySpec::RandomStep { seed: need_seed()?, count: DEFAULT_RANDOM_COUNT },
            "oscillating" => FamilySpec::Oscillating,
            "constant" => FamilySpec::Constant,
            "mixed" => FamilySpec::Mixed { seed: need_seed()? },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown family {other}; expected ball-indicators, point-masses, power-profiles, random-step, \
                     oscillating, constant or mixed"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::BallIndicators => "ball-indicators",
            FamilySpec::PointMasses => "point-masses",
            FamilySpec::PowerProfiles => "power-profiles",
            FamilySpec::RandomStep { .. } => "random-step",
            FamilySpec::Oscillating => "oscillating",
            FamilySpec::Constant => "constant",
            FamilySpec::Mixed { .. } => "mixed",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            FamilySpec::RandomStep { seed, .. } | FamilySpec::Mixed { seed } => Some(*seed),
            _ => None,
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seed() {
            Some(seed) => write!(f, "{}(seed {seed})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilySpec::parse(s, None)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub id: String,
    pub f: GridFunction,
}

/// Test functions on one space.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionFamily {
    pub spec: FamilySpec,
    pub members: Vec<Member>,
}

impl FunctionFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members with no negative value.
    pub fn nonnegative(&self) -> impl Iterator<Item = &Member> {
        self.members.iter().filter(|m| m.f.values().iter().all(|&v| v >= 0.0))
    }
}

/// Deterministic family for `(space, spec)`; duplicates are dropped, first id wins.
pub fn generate_family(space: &QuasimetricSpace, spec: &FamilySpec) -> Result<FunctionFamily> {
    let mut out = Vec::new();
    push_members(space, spec, &mut out);
    let mut seen = HashSet::new();
    out.retain(|m| seen.insert(m.f.values().iter().map(|v| v.to_bits()).collect::<Vec<u64>>()));
    out.retain(|m| !m.f.is_zero());
    if out.is_empty() {
        return Err(Error::EmptyFamily(format!("family {spec} has no nonzero member on {}", space.name())));
    }
    Ok(FunctionFamily { spec: spec.clone(), members: out })
}

fn push_members(space: &QuasimetricSpace, spec: &FamilySpec, out: &mut Vec<Member>) {
    let n = space.len();
    match spec {
        FamilySpec::BallIndicators => {
            let mut seen: HashSet<BitSet> = HashSet::new();
            for x in 0..n {
                for r in space.representative_radii(x, 1.0, RadiusRange::Open) {
                    let bits = space.ball_bits(x, r);
                    if seen.insert(bits.clone()) {
                        let members: Vec<usize> = bits.iter().collect();
                        out.push(Member { id: format!("ball:x{x}:r{r}"), f: GridFunction::indicator(n, &members) });
                    }
                }
            }
        }
        FamilySpec::PointMasses => {
            for x in 0..n {
                out.push(Member { id: format!("point:x{x}"), f: GridFunction::indicator(n, &[x]) });
            }
        }
        FamilySpec::PowerProfiles => {
            let floor = 0.5 * space.min_positive_distance();
            for x0 in 0..n {
                for beta in POWER_BETAS {
                    let values = (0..n).map(|y| space.dist(y, x0).max(floor).powf(-beta)).collect();
                    out.push(Member {
                        id: format!("power:x{x0}:b{beta}"),
                        f: GridFunction::new(values).expect("positive distances"),
                    });
                }
            }
        }
        FamilySpec::RandomStep { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for k in 0..*count {
                let mut values = vec![0.0; n];
                for _ in 0..RANDOM_STEP_BALLS {
                    let x = rng.gen_range(0..n);
                    let radii = space.representative_radii(x, 1.0, RadiusRange::Open);
                    let r = radii[rng.gen_range(0..radii.len())];
                    let c: f64 = rng.gen_range(0.5..2.0);
                    for y in space.ball_bits(x, r).iter() {
                        values[y] += c;
                    }
                }
                out.push(Member { id: format!("random:{k}"), f: GridFunction::new(values).expect("finite") });
            }
        }
        FamilySpec::Oscillating => {
            let mut period = 1;
            while period < n {
                let values = (0..n).map(|i| if (i / period) % 2 == 0 { 1.0 } else { -1.0 }).collect();
                out.push(Member { id: format!("osc:{period}"), f: GridFunction::new(values).expect("finite") });
                period *= 2;
            }
        }
        FamilySpec::Constant => out.push(Member { id: "constant".into(), f: GridFunction::constant(n, 1.0) }),
        FamilySpec::Mixed { seed } => {
            for part in [
                FamilySpec::BallIndicators,
                FamilySpec::PointMasses,
                FamilySpec::PowerProfiles,
                FamilySpec::RandomStep { seed: *seed, count: DEFAULT_RANDOM_COUNT },
                FamilySpec::Oscillating,
                FamilySpec::Constant,
            ] {
                push_members(space, &part, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::presets;
    use std::collections::BTreeSet;

    #[test]
    fn ball_indicators_on_grid4() {
        let s = presets::uniform_grid(4);
        let fam = generate_family(&s, &FamilySpec::BallIndicators).unwrap();
        // oracle: all sets {y : |y - x| < r} for x on the grid and r between consecutive gaps below 1
        let mut oracle = BTreeSet::new();
        for x in 0..4i32 {
            for k in 0..3i32 {
                let set: Vec<usize> = (0..4i32).filter(|y| (y - x).abs() <= k).map(|y| y as usize).collect();
                oracle.insert(set);
            }
        }
        let got: BTreeSet<Vec<usize>> = fam
            .members
            .iter()
            .map(|m| m.f.values().iter().enumerate().filter(|(_, &v)| v == 1.0).map(|(i, _)| i).collect())
            .collect();
        assert_eq!(got, oracle);
        assert_eq!(fam.len(), 9);
    }

    #[test]
    fn point_masses_are_singletons() {
        let s = presets::uniform_grid(16);
        let fam = generate_family(&s, &FamilySpec::PointMasses).unwrap();
        assert_eq!(fam.len(), 16);
        assert!(fam.members.iter().all(|m| m.f.values().iter().filter(|&&v| v == 1.0).count() == 1));
    }

    #[test]
    fn random_step_is_reproducible() {
        let s = presets::uniform_grid(16);
        let spec = FamilySpec::parse("random-step", Some(7)).unwrap();
        let a = generate_family(&s, &spec).unwrap();
        let b = generate_family(&s, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.nonnegative().count() == a.len());
        assert!(FamilySpec::parse("random-step", None).is_err());
        assert!(FamilySpec::parse("mixed", None).is_err());
    }

    #[test]
    fn mixed_contains_every_kind() {
        let s = presets::uniform_grid(8);
        let fam = generate_family(&s, &FamilySpec::Mixed { seed: 1 }).unwrap();
        // singletons coincide with the smallest balls and keep their ball ids
        for prefix in ["ball:", "power:", "random:", "osc:"] {
            assert!(fam.members.iter().any(|m| m.id.starts_with(prefix)), "{prefix}");
        }
        assert!(fam.nonnegative().count() < fam.len());
    }

    #[test]
    fn power_profile_peak() {
        let s = presets::uniform_grid(4);
        let fam = generate_family(&s, &FamilySpec::PowerProfiles).unwrap();
        let m = fam.members.iter().find(|m| m.id == "power:x0:b1").unwrap();
        assert!((m.f.values()[0] - 6.0).abs() < 1e-12);
        assert!((m.f.values()[3] - 1.0).abs() < 1e-12);
    }
}
