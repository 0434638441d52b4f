//! Analytic test-function families and midpoint sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GridFunction, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A closed-form function on `ℝ^N`.
///
/// JSON form: `{"family": "<kebab-name>", "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub enum FunctionSpec<T> {
    Constant {
        value: T,
    },
    /// `coefficients · x + offset`.
    Linear {
        coefficients: Vec<T>,
        #[serde(default = "zero")]
        offset: T,
    },
    /// Compactly supported `C^∞` bump of radius `width`, equal to `height`
    /// at `center`: `height · exp(1 − 1/(1 − ρ²))`, `ρ = |x − center|/width`.
    Bump {
        center: Vec<T>,
        width: T,
        height: T,
    },
    /// `height · (1 + tanh(steepness · (normal · x − offset))) / 2`.
    TanhPlateau {
        normal: Vec<T>,
        offset: T,
        steepness: T,
        height: T,
    },
    /// `high` where `x[axis] > threshold`, `low` elsewhere.
    IndicatorHalfspace {
        axis: usize,
        threshold: T,
        low: T,
        high: T,
    },
    /// `amplitude/√terms · Σ_t a_t cos(π ω_t · x + φ_t)` with integer
    /// frequencies `ω_t ∈ [-3, 3]^N`, `a_t ∈ [-1, 1]`, `φ_t ∈ [0, 2π)` drawn
    /// from a ChaCha8 stream seeded with `seed`.
    RandomTrig {
        seed: u64,
        terms: usize,
        amplitude: T,
    },
}

fn zero<T: num_traits::Zero>() -> T {
    T::zero()
}

/// A [`FunctionSpec`] validated for a dimension, ready for evaluation.
#[derive(Clone, Debug)]
pub struct PreparedFunction<T> {
    dim: usize,
    kind: Prepared<T>,
}

#[derive(Clone, Debug)]
enum Prepared<T> {
    Constant(T),
    Linear(Vec<T>, T),
    Bump(Vec<T>, T, T),
    Tanh(Vec<T>, T, T, T),
    Halfspace(usize, T, T, T),
    Trig(Vec<TrigTerm<T>>, T),
}

#[derive(Clone, Debug)]
struct TrigTerm<T> {
    weight: T,
    freq: Vec<T>,
    phase: T,
}

fn finite<T: Scalar>(name: &str, xs: &[T]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite")))
    }
}

fn dim_matches<T>(name: &str, v: &[T], dim: usize) -> Result<()> {
    if v.len() == dim {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} has {} components, expected {dim}",
            v.len()
        )))
    }
}

impl<T: Scalar> FunctionSpec<T> {
    pub fn family(&self) -> &'static str {
        match self {
            FunctionSpec::Constant { .. } => "constant",
            FunctionSpec::Linear { .. } => "linear",
            FunctionSpec::Bump { .. } => "bump",
            FunctionSpec::TanhPlateau { .. } => "tanh-plateau",
            FunctionSpec::IndicatorHalfspace { .. } => "indicator-halfspace",
            FunctionSpec::RandomTrig { .. } => "random-trig",
        }
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        Ok(serde_json::from_str(text)?)
    }

    /// Replaces the seed of a random-trig spec; other families are unchanged.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let FunctionSpec::RandomTrig { seed, .. } = &mut self {
            *seed = new_seed;
        }
        self
    }

    pub fn prepare(&self, dim: usize) -> Result<PreparedFunction<T>> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let kind = match self {
            FunctionSpec::Constant { value } => {
                finite("constant value", &[*value])?;
                Prepared::Constant(*value)
            }
            FunctionSpec::Linear { coefficients, offset } => {
                dim_matches("linear coefficients", coefficients, dim)?;
                finite("linear coefficients", coefficients)?;
                finite("linear offset", &[*offset])?;
                Prepared::Linear(coefficients.clone(), *offset)
            }
            FunctionSpec::Bump { center, width, height } => {
                dim_matches("bump center", center, dim)?;
                finite("bump parameters", center)?;
                finite("bump parameters", &[*width, *height])?;
                if *width <= T::zero() {
                    return Err(Error::invalid("bump width must be positive"));
                }
                Prepared::Bump(center.clone(), *width, *height)
            }
            FunctionSpec::TanhPlateau {
                normal,
                offset,
                steepness,
                height,
            } => {
                dim_matches("plateau normal", normal, dim)?;
                finite("plateau parameters", normal)?;
                finite("plateau parameters", &[*offset, *steepness, *height])?;
                Prepared::Tanh(normal.clone(), *offset, *steepness, *height)
            }
            FunctionSpec::IndicatorHalfspace {
                axis,
                threshold,
                low,
                high,
            } => {
                if *axis >= dim {
                    return Err(Error::invalid(format!(
                        "halfspace axis {axis} out of range for dimension {dim}"
                    )));
                }
                finite("halfspace parameters", &[*threshold, *low, *high])?;
                Prepared::Halfspace(*axis, *threshold, *low, *high)
            }
            FunctionSpec::RandomTrig { seed, terms, amplitude } => {
                if *terms == 0 {
                    return Err(Error::invalid("random-trig needs at least one term"));
                }
                finite("random-trig amplitude", &[*amplitude])?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let list = (0..*terms)
                    .map(|_| {
                        let weight = T::lit(rng.gen_range(-1.0..=1.0));
                        let freq = (0..dim).map(|_| T::lit(rng.gen_range(-3i32..=3) as f64)).collect();
                        let phase = T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
                        TrigTerm { weight, freq, phase }
                    })
                    .collect();
                let scale = *amplitude / T::from_usize_exact(*terms).sqrt();
                Prepared::Trig(list, scale)
            }
        };
        Ok(PreparedFunction { dim, kind })
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

impl<T: Scalar> PreparedFunction<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Panics if `x.len() != self.dim()`.
    pub fn eval(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        match &self.kind {
            Prepared::Constant(v) => *v,
            Prepared::Linear(coef, offset) => dot(coef, x) + *offset,
            Prepared::Bump(center, width, height) => {
                let r2 = x
                    .iter()
                    .zip(center)
                    .fold(T::zero(), |acc, (&xi, &ci)| acc + (xi - ci) * (xi - ci))
                    / (*width * *width);
                if r2 < T::one() {
                    *height * (T::one() - T::one() / (T::one() - r2)).exp()
                } else {
                    T::zero()
                }
            }
            Prepared::Tanh(normal, offset, steep, height) => {
                let t = (*steep * (dot(normal, x) - *offset)).tanh();
                *height * (T::one() + t) / T::lit(2.0)
            }
            Prepared::Halfspace(axis, threshold, low, high) => {
                if x[*axis] > *threshold {
                    *high
                } else {
                    *low
                }
            }
            Prepared::Trig(list, scale) => {
                let pi = T::PI();
                let total = list.iter().fold(T::zero(), |acc, term| {
                    acc + term.weight * (pi * dot(&term.freq, x) + term.phase).cos()
                });
                *scale * total
            }
        }
    }
}

/// Samples `fspec` at every cell midpoint of `spec`.
pub fn sample<T: Scalar>(fspec: &FunctionSpec<T>, spec: &GridSpec<T>) -> Result<GridFunction<T>> {
    let f = fspec.prepare(spec.dim())?;
    let dim = spec.dim();
    let centers = spec.cell_centers();
    let mut values = Vec::with_capacity(spec.cell_count());
    for x in centers.chunks(dim) {
        let v = f.eval(x);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                point: x.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect(),
            });
        }
        values.push(v);
    }
    GridFunction::new(spec.clone(), values)
}
