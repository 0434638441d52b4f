use serde::Serialize;

use super::FunctionSpec;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    Smooth,
    Lipschitz,
    /// Jump discontinuity; finite total variation only.
    Discontinuous,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry<T> {
    pub name: String,
    pub regularity: Regularity,
    pub spec: FunctionSpec<T>,
}

fn entry<T>(name: &str, regularity: Regularity, spec: FunctionSpec<T>) -> CorpusEntry<T> {
    CorpusEntry {
        name: name.to_string(),
        regularity,
        spec,
    }
}

fn pattern<T: Scalar>(dim: usize, first: &[f64]) -> Vec<T> {
    (0..dim).map(|a| T::lit(first[a % first.len()])).collect()
}

/// Test functions for the unit cube `Q₁(0)` in `dim` dimensions, covering
/// constant, smooth, Lipschitz and jump regimes.
pub fn standard_corpus<T: Scalar>(dim: usize) -> Vec<CorpusEntry<T>> {
    use Regularity::*;
    let l = T::lit;
    let mut axis0 = vec![T::zero(); dim];
    axis0[0] = T::one();
    let oblique: Vec<T> = {
        let raw: Vec<T> = pattern(dim, &[1.0, 0.6, -0.3]);
        let norm = raw.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
        raw.into_iter().map(|x| x / norm).collect()
    };
    vec![
        entry("constant", Smooth, FunctionSpec::Constant { value: l(2.0) }),
        entry(
            "linear-axis",
            Lipschitz,
            FunctionSpec::Linear {
                coefficients: axis0.clone(),
                offset: T::zero(),
            },
        ),
        entry(
            "linear-oblique",
            Lipschitz,
            FunctionSpec::Linear {
                coefficients: pattern(dim, &[1.0, -0.5, 0.25]),
                offset: l(0.3),
            },
        ),
        entry(
            "bump-central",
            Smooth,
            FunctionSpec::Bump {
                center: vec![T::zero(); dim],
                width: l(0.45),
                height: l(2.0),
            },
        ),
        entry(
            "bump-offset",
            Smooth,
            FunctionSpec::Bump {
                center: pattern(dim, &[0.2, -0.1, 0.05]),
                width: l(0.3),
                height: l(1.5),
            },
        ),
        entry(
            "bump-wide",
            Smooth,
            FunctionSpec::Bump {
                center: pattern(dim, &[-0.15, 0.1, 0.0]),
                width: l(0.7),
                height: l(1.0),
            },
        ),
        entry(
            "bump-corner",
            Smooth,
            FunctionSpec::Bump {
                center: pattern(dim, &[0.3, 0.3]),
                width: l(0.35),
                height: l(4.0),
            },
        ),
        entry(
            "tanh-axis",
            Lipschitz,
            FunctionSpec::TanhPlateau {
                normal: axis0.clone(),
                offset: l(-0.1),
                steepness: l(8.0),
                height: l(2.0),
            },
        ),
        entry(
            "tanh-oblique",
            Lipschitz,
            FunctionSpec::TanhPlateau {
                normal: oblique,
                offset: l(0.05),
                steepness: l(6.0),
                height: l(1.0),
            },
        ),
        entry(
            "trig-7",
            Smooth,
            FunctionSpec::RandomTrig {
                seed: 7,
                terms: 4,
                amplitude: l(1.0),
            },
        ),
        entry(
            "trig-11",
            Smooth,
            FunctionSpec::RandomTrig {
                seed: 11,
                terms: 6,
                amplitude: l(1.5),
            },
        ),
        entry(
            "trig-23",
            Smooth,
            FunctionSpec::RandomTrig {
                seed: 23,
                terms: 3,
                amplitude: l(0.8),
            },
        ),
        entry(
            "halfspace-axis0",
            Discontinuous,
            FunctionSpec::IndicatorHalfspace {
                axis: 0,
                threshold: T::zero(),
                low: T::zero(),
                high: l(2.0),
            },
        ),
        entry(
            "halfspace-last",
            Discontinuous,
            FunctionSpec::IndicatorHalfspace {
                axis: dim - 1,
                threshold: l(0.2),
                low: l(-1.0),
                high: l(1.0),
            },
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample, Cube, GridSpec};

    #[test]
    fn every_entry_samples_in_two_and_three_dimensions() {
        for dim in [1, 2, 3] {
            let grid = GridSpec::new(Cube::<f64>::unit(dim).unwrap(), 6).unwrap();
            for e in standard_corpus::<f64>(dim) {
                let u = sample(&e.spec, &grid).unwrap();
                assert_eq!(u.values().len(), 6usize.pow(dim as u32), "{}", e.name);
            }
        }
    }

    #[test]
    fn names_are_unique() {
        let c = standard_corpus::<f64>(2);
        let mut names: Vec<_> = c.iter().map(|e| e.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), c.len());
    }
}
