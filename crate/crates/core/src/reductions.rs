//! Gradient and BV budgets turned into Gagliardo budgets, and the scaling
//! identities that make the conversion independent of the cube side.
//!
//! With `v(x) = u(r x)` on `Q₁`,
//!
//! ```text
//! [u]_{s,p,Q_r} = r^{(N−ps)/p} [v]_{s,p,Q₁}
//! ‖∇u‖_{p,Q_r} = r^{(N−p)/p} ‖∇v‖_{p,Q₁}
//! [u]_{BV(Q_r)} = r^{N−1} [v]_{BV(Q₁)}
//! ```
//!
//! and `[v]_{s,p,Q₁} ≤ C(N,s,p) ‖∇v‖_{p,Q₁}`. So `‖∇u‖_p ≤ γ′ c r^{(N−p)/p}`
//! implies `[u]_{s,p} ≤ C γ′ c r^{(N−ps)/p}`, and likewise for BV with `p = 1`.
//! No extension operator is involved because the cube is convex.
//!
//! The three discrete seminorms obey the identities exactly when the same
//! sample array is re-hosted on a cube of another side: midpoint distances
//! scale by `r`, cell volumes by `r^N`, difference quotients by `1/r`.

use serde::{Deserialize, Serialize};

use crate::clustering::{search_with_seminorm, ClusterCertificate, LevelQuery};
use crate::error::{Error, Result};
use crate::geometry::{Cube, GridFunction};
use crate::scalar::Scalar;
use crate::seminorms::{
    bv_seminorm, embedding_constant, gagliardo, grad_lp, ConstantMethod, EmbeddingConstant, FractionalParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionKind {
    /// Budget on `‖∇u‖_p`.
    W1p,
    /// Budget on the total variation, `p = 1`.
    Bv,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReductionInput<T> {
    pub kind: ReductionKind,
    /// `γ′` (gradient) or `γ″` (BV).
    pub gamma_prime: T,
    pub params: FractionalParams<T>,
    /// How `C(N,s,p)` is evaluated; `BallBound` gives the rigorous upper bound.
    pub method: ConstantMethod,
}

impl<T: Scalar> ReductionInput<T> {
    pub fn w1p(gamma_prime: T, params: FractionalParams<T>) -> Result<Self> {
        Self::new(ReductionKind::W1p, gamma_prime, params)
    }

    /// BV budget for the Gagliardo seminorm of order `s` with `p = 1`.
    pub fn bv(gamma_prime: T, s: T) -> Result<Self> {
        Self::new(ReductionKind::Bv, gamma_prime, FractionalParams::new(s, T::one())?)
    }

    pub fn new(kind: ReductionKind, gamma_prime: T, params: FractionalParams<T>) -> Result<Self> {
        let input = Self {
            kind,
            gamma_prime,
            params,
            method: ConstantMethod::Quadrature,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn with_method(mut self, method: ConstantMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_prime > T::zero() && self.gamma_prime.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma_prime must be positive and finite, got {}",
                self.gamma_prime
            )));
        }
        if self.kind == ReductionKind::Bv && self.params.p() != T::one() {
            return Err(Error::invalid("the BV reduction requires p = 1"));
        }
        Ok(())
    }
}

/// The Gagliardo budget `γ = C·γ′` and the constant used.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FractionalBudget<T> {
    pub constant: EmbeddingConstant<T>,
    pub gamma: T,
}

pub fn reduce_to_fractional<T: Scalar>(input: &ReductionInput<T>, dim: usize) -> Result<FractionalBudget<T>> {
    input.validate()?;
    let constant = embedding_constant(dim, &input.params, input.method)?;
    let gamma = constant.value * input.gamma_prime;
    Ok(FractionalBudget { constant, gamma })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeminormKind {
    Gagliardo,
    Grad,
    Bv,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport<T> {
    pub which: SeminormKind,
    pub side: T,
    pub exponent: T,
    /// Seminorm of `u` on its own cube.
    pub lhs: T,
    /// `side^exponent ·` seminorm of the same samples on `Q₁(0)`.
    pub rhs: T,
    pub relative_error: T,
}

/// Seminorm of `u` together with the exponent of `r` in its scaling law.
fn seminorm_and_exponent<T: Scalar>(
    u: &GridFunction<T>,
    which: SeminormKind,
    params: &FractionalParams<T>,
) -> Result<(T, T)> {
    let n = T::from_usize_exact(u.dim());
    Ok(match which {
        SeminormKind::Gagliardo => (gagliardo(u, params), params.gagliardo_scaling_exponent(u.dim())),
        SeminormKind::Grad => (grad_lp(u, params.p())?, (n - params.p()) / params.p()),
        SeminormKind::Bv => (bv_seminorm(u)?, n - T::one()),
    })
}

/// Compares the seminorm of `u` with `r^e` times that of the same sample
/// array re-hosted on the unit cube.
pub fn verify_scaling<T: Scalar>(
    u: &GridFunction<T>,
    which: SeminormKind,
    params: &FractionalParams<T>,
) -> Result<ScalingReport<T>> {
    let side = u.cube().side();
    let v = u.rehost(Cube::unit(u.dim())?)?;
    let (lhs, exponent) = seminorm_and_exponent(u, which, params)?;
    let (unit, _) = seminorm_and_exponent(&v, which, params)?;
    let rhs = side.powf(exponent) * unit;
    let relative_error = (lhs - rhs).abs() / lhs.max(T::min_positive_value());
    Ok(ScalingReport {
        which,
        side,
        exponent,
        lhs,
        rhs,
        relative_error,
    })
}

/// Which reduction produced a certificate's budget, and the measured
/// gradient/BV budget it started from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionRecord<T> {
    pub kind: ReductionKind,
    pub gamma_prime: T,
    #[serde(rename = "C")]
    pub constant: T,
    pub constant_method: ConstantMethod,
    pub gamma: T,
    /// `‖∇u‖_p / (c r^{(N−p)/p})` or `[u]_BV / (c r^{N−1})`.
    pub gamma_prime_measured: T,
    pub hypothesis_prime: bool,
}

/// Checks the gradient or BV budget, converts it into `γ = C·γ′`, and runs
/// [`crate::clustering::cluster_search`] with the completed query. The
/// returned certificate carries a [`ReductionRecord`].
pub fn corollary_pipeline<T: Scalar>(
    u: &GridFunction<T>,
    levels: &LevelQuery<T>,
    input: &ReductionInput<T>,
) -> Result<ClusterCertificate<T>> {
    levels.validate()?;
    let dim = u.dim();
    let (seminorm, exponent) = match input.kind {
        ReductionKind::W1p => seminorm_and_exponent(u, SeminormKind::Grad, &input.params)?,
        ReductionKind::Bv => seminorm_and_exponent(u, SeminormKind::Bv, &input.params)?,
    };
    let measured = seminorm / (levels.c * u.cube().side().powf(exponent));
    let budget = reduce_to_fractional(input, dim)?;
    let query = levels.with_budget(budget.gamma, input.params)?;
    let (mut cert, _) = search_with_seminorm(u, &query, gagliardo(u, &query.params))?;
    cert.reduction = Some(ReductionRecord {
        kind: input.kind,
        gamma_prime: input.gamma_prime,
        constant: budget.constant.value,
        constant_method: input.method,
        gamma: budget.gamma,
        gamma_prime_measured: measured,
        hypothesis_prime: measured <= input.gamma_prime,
    });
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::cluster_search;
    use crate::geometry::{sample, FunctionSpec, GridSpec};

    fn grid(dim: usize, side: f64, m: usize) -> GridSpec<f64> {
        GridSpec::new(Cube::centered(dim, side).unwrap(), m).unwrap()
    }

    fn params(s: f64, p: f64) -> FractionalParams<f64> {
        FractionalParams::new(s, p).unwrap()
    }

    fn quad(dim: usize, s: f64, p: f64) -> f64 {
        embedding_constant(dim, &params(s, p), ConstantMethod::Quadrature)
            .unwrap()
            .value
    }

    #[test]
    fn reduction_multiplies_by_constant() {
        let prm = params(0.5, 2.0);
        let c = quad(2, 0.5, 2.0);
        let one = reduce_to_fractional(&ReductionInput::w1p(1.0, prm).unwrap(), 2).unwrap();
        assert_eq!(one.gamma, c);
        let two = reduce_to_fractional(&ReductionInput::w1p(2.0, prm).unwrap(), 2).unwrap();
        assert_eq!(two.gamma, 2.0 * c);
        let bv = reduce_to_fractional(&ReductionInput::bv(1.0, 0.5).unwrap(), 2).unwrap();
        assert_eq!(bv.constant.sigma, 1.5);
        assert_eq!(bv.gamma, quad(2, 0.5, 1.0));
    }

    #[test]
    fn rigorous_mode_uses_ball_bound() {
        let input = ReductionInput::w1p(1.0, params(0.5, 2.0))
            .unwrap()
            .with_method(ConstantMethod::BallBound);
        let b = reduce_to_fractional(&input, 2).unwrap();
        assert!((b.gamma - (2.0 * std::f64::consts::PI * 2f64.sqrt()).sqrt()).abs() < 1e-14);
        assert!(b.gamma >= quad(2, 0.5, 2.0));
    }

    #[test]
    fn input_validation() {
        assert!(ReductionInput::w1p(0.0, params(0.5, 2.0)).is_err());
        assert!(ReductionInput::new(ReductionKind::Bv, 1.0, params(0.5, 2.0)).is_err());
        assert!(ReductionInput::bv(1.0, 1.5).is_err());
    }

    #[test]
    fn scaling_identities_hold_on_rehosted_samples() {
        let f = FunctionSpec::Bump {
            center: vec![0.1, 0.0],
            width: 0.6,
            height: 1.0,
        };
        for side in [0.5, 2.0, 3.0] {
            let base = sample(&f, &grid(2, 1.0, 10)).unwrap();
            let u = base.rehost(Cube::new(vec![0.7, -2.0], side).unwrap()).unwrap();
            for which in [SeminormKind::Gagliardo, SeminormKind::Grad, SeminormKind::Bv] {
                let r = verify_scaling(&u, which, &params(0.3, 1.5)).unwrap();
                assert!(
                    r.relative_error <= 1e-12,
                    "{which:?} at r = {side}: {}",
                    r.relative_error
                );
            }
        }
    }

    #[test]
    fn bv_scaling_of_halfspace_on_side_three() {
        let f = FunctionSpec::IndicatorHalfspace {
            axis: 0,
            threshold: 0.0,
            low: 0.0,
            high: 1.0,
        };
        let u = sample(&f, &grid(2, 3.0, 6)).unwrap();
        let r = verify_scaling(&u, SeminormKind::Bv, &params(0.5, 1.0)).unwrap();
        assert!((r.lhs - 3.0).abs() < 1e-14);
        assert!((r.rhs - 3.0).abs() < 1e-14);
    }

    #[test]
    fn grad_scaling_of_coordinate_function() {
        let u = GridFunction::from_fn(grid(2, 2.0, 8), |x| x[0]).unwrap();
        let r = verify_scaling(&u, SeminormKind::Grad, &params(0.5, 2.0)).unwrap();
        assert!((r.lhs / r.rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pipeline_on_constant_function() {
        let u = GridFunction::constant(grid(2, 1.0, 12), 2.0).unwrap();
        let levels = LevelQuery::new(1.0, 0.5, 0.5, 0.5).unwrap();
        for input in [
            ReductionInput::w1p(1.0, params(0.5, 2.0)).unwrap(),
            ReductionInput::bv(1.0, 0.5).unwrap(),
        ] {
            let cert = corollary_pipeline(&u, &levels, &input).unwrap();
            assert!(cert.found);
            assert_eq!(cert.k, Some(2));
            let red = cert.reduction.unwrap();
            assert_eq!(red.gamma_prime_measured, 0.0);
            assert_eq!(cert.gamma_measured, 0.0);
            assert!(red.hypothesis_prime);
        }
    }

    #[test]
    fn pipeline_matches_direct_search_on_halfspace() {
        let f = FunctionSpec::IndicatorHalfspace {
            axis: 0,
            threshold: 0.0,
            low: 0.0,
            high: 2.0,
        };
        let u = sample(&f, &grid(2, 1.0, 24)).unwrap();
        let levels = LevelQuery::new(1.0, 0.4, 0.25, 0.5).unwrap();
        let input = ReductionInput::bv(1.0, 0.5).unwrap();
        let cert = corollary_pipeline(&u, &levels, &input).unwrap();
        let red = cert.reduction.clone().unwrap();
        // Jump of 2 across a unit segment, normalized by c = 1.
        assert!((red.gamma_prime_measured - 2.0).abs() < 1e-13);
        assert!(!red.hypothesis_prime);
        let direct = cluster_search(&u, &levels.with_budget(red.gamma, input.params).unwrap()).unwrap();
        assert_eq!(
            ClusterCertificate {
                reduction: None,
                ..cert
            },
            direct
        );
    }
}
