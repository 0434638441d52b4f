//! The constant `C(N,s,p) = (∫_{Q₂} |z|^{-σ} dz)^{1/p}`, `σ = N + ps − p`,
//! for which `[v]_{s,p,Q₁} ≤ C ‖∇v‖_{p,Q₁}`.
//!
//! Three evaluations are provided:
//!
//! * `Quadrature` uses the homogeneity of `|z|^{-σ}`. The positive orthant
//!   `(0,1)^N` is the disjoint union of the dyadic shells `2^{-j} S`,
//!   `S = (0,1)^N \ (0,½]^N`, so `∫_{(0,1)^N} = I_S / (1 − 2^{σ−N})`. The
//!   integrand is smooth on `S`, which is covered by `2^N − 1` boxes of
//!   side ½ integrated with tensor Gauss–Legendre rules under uniform
//!   refinement until two successive levels agree.
//! * `BallBound` integrates over `B_{√N} ⊃ Q₂` in closed form,
//!   `N ω_N (√N)^{N−σ} / (N−σ)`. It is an upper bound.
//! * `MonteCarlo` is the independent cross-check. The unit ball is split
//!   off and integrated in closed form; the remainder of `Q₂`, where the
//!   integrand is bounded by 1, is sampled uniformly. Sampling the whole of
//!   `Q₂` would give an estimator with infinite variance whenever `2σ ≥ N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FractionalParams;
use crate::error::{Error, Result};
use crate::geometry::next_multi_index;
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ConstantMethod {
    #[default]
    Quadrature,
    BallBound,
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingConstant<T> {
    pub dim: usize,
    pub params: FractionalParams<T>,
    /// `N + ps − p`, always `< N`.
    pub sigma: T,
    /// `∫_{Q₂} |z|^{-σ} dz` (or its bound / estimate), i.e. `value^p`.
    pub integral: T,
    pub value: T,
    pub method: ConstantMethod,
    /// Standard error of `integral` (Monte Carlo only).
    pub standard_error: Option<T>,
}

/// Volume `ω_N = π^{N/2} / Γ(N/2 + 1)` of the unit ball in `ℝ^N`.
pub fn unit_ball_volume<T: Scalar>(dim: usize) -> T {
    // ω_N = 2π/N · ω_{N−2}
    let (mut omega, start) = if dim % 2 == 0 { (T::one(), 2) } else { (T::lit(2.0), 3) };
    let mut n = start;
    while n <= dim {
        omega = omega * T::lit(2.0) * T::PI() / T::from_usize_exact(n);
        n += 2;
    }
    omega
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre<T: Scalar>(order: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); order];
    let mut weights = vec![T::zero(); order];
    let nf = T::from_usize_exact(order);
    for i in 0..order.div_ceil(2) {
        let mut x = (T::PI() * (T::from_usize_exact(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence.
            let (mut p0, mut p1) = (T::one(), x);
            for k in 2..=order {
                let kf = T::from_usize_exact(k);
                let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if order == 0 { T::one() } else { p1 };
            dp = nf * (x * pn - p0) / (x * x - T::one());
            let dx = pn / dp;
            x -= dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = x;
        nodes[order - 1 - i] = -x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

const GL_ORDER: usize = 10;
const QUADRATURE_RTOL: f64 = 1e-11;
const QUADRATURE_MIN_RTOL: f64 = 1e-6;
const QUADRATURE_EVAL_BUDGET: usize = 40_000_000;

/// `∫_S |z|^{-σ}` with every half-box split into `2^level` pieces per axis.
fn shell_integral<T: Scalar>(dim: usize, sigma: T, level: u32, rule: &(Vec<T>, Vec<T>)) -> T {
    let (nodes, weights) = rule;
    let pieces = 1usize << level;
    let piece_side = T::lit(0.5) / T::from_usize_exact(pieces);
    let half_side = piece_side / T::lit(2.0);
    let jac = half_side.powi(dim as i32);
    let mut total = CompensatedSum::new();
    // Which half (lower/upper) of (0,1) each axis uses; all-lower is excluded.
    let mut halves = vec![0usize; dim];
    while next_multi_index(&mut halves, 2) {
        let mut piece = vec![0usize; dim];
        loop {
            let lower: Vec<T> = (0..dim)
                .map(|a| T::lit(0.5) * T::from_usize_exact(halves[a]) + piece_side * T::from_usize_exact(piece[a]))
                .collect();
            let mut q = vec![0usize; dim];
            let mut acc = T::zero();
            loop {
                let mut r2 = T::zero();
                let mut w = T::one();
                for a in 0..dim {
                    let z = lower[a] + half_side * (nodes[q[a]] + T::one());
                    r2 += z * z;
                    w *= weights[q[a]];
                }
                acc += w * r2.powf(-sigma / T::lit(2.0));
                if !next_multi_index(&mut q, nodes.len()) {
                    break;
                }
            }
            total.add(acc * jac);
            if !next_multi_index(&mut piece, pieces) {
                break;
            }
        }
    }
    total.value()
}

fn quadrature_integral<T: Scalar>(dim: usize, sigma: T) -> Result<T> {
    let rule = gauss_legendre::<T>(GL_ORDER);
    let n = T::from_usize_exact(dim);
    let shells = T::one() / (T::one() - T::lit(2.0).powf(sigma - n));
    let orthants = T::lit(2.0).powi(dim as i32);
    let per_level = |level: u32| ((1usize << level) * GL_ORDER).pow(dim as u32) * ((1 << dim) - 1);
    let mut previous = shell_integral(dim, sigma, 0, &rule);
    let mut level = 1;
    loop {
        let current = shell_integral(dim, sigma, level, &rule);
        let gap = (current - previous).abs() / current.abs();
        if gap <= T::lit(QUADRATURE_RTOL).max(T::epsilon() * T::lit(64.0)) {
            return Ok(orthants * shells * current);
        }
        if per_level(level + 1) > QUADRATURE_EVAL_BUDGET {
            if gap <= T::lit(QUADRATURE_MIN_RTOL) {
                return Ok(orthants * shells * current);
            }
            return Err(Error::invalid(format!(
                "embedding quadrature did not converge in dimension {dim} (relative gap {gap})"
            )));
        }
        previous = current;
        level += 1;
    }
}

fn ball_integral<T: Scalar>(dim: usize, sigma: T, radius: T) -> T {
    let n = T::from_usize_exact(dim);
    n * unit_ball_volume::<T>(dim) * radius.powf(n - sigma) / (n - sigma)
}

fn monte_carlo_integral<T: Scalar>(dim: usize, sigma: T, samples: usize, seed: u64) -> Result<(T, T)> {
    if samples < 2 {
        return Err(Error::invalid("Monte Carlo needs at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    let mut z = vec![T::zero(); dim];
    for _ in 0..samples {
        for zi in z.iter_mut() {
            *zi = T::lit(rng.gen_range(-1.0..1.0));
        }
        let r2 = z.iter().fold(T::zero(), |a, &x| a + x * x);
        let f = if r2 >= T::one() {
            r2.powf(-sigma / T::lit(2.0))
        } else {
            T::zero()
        };
        sum.add(f);
        sum_sq.add(f * f);
    }
    let count = T::from_usize_exact(samples);
    let mean = sum.value() / count;
    let var = ((sum_sq.value() - count * mean * mean) / (count - T::one())).max(T::zero());
    let volume = T::lit(2.0).powi(dim as i32);
    let estimate = volume * mean + ball_integral(dim, sigma, T::one());
    let std_err = volume * (var / count).sqrt();
    Ok((estimate, std_err))
}

/// `C(N,s,p)` by the requested method.
pub fn embedding_constant<T: Scalar>(
    dim: usize,
    params: &FractionalParams<T>,
    method: ConstantMethod,
) -> Result<EmbeddingConstant<T>> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let n = T::from_usize_exact(dim);
    let sigma = n + params.ps() - params.p();
    let (integral, standard_error) = match method {
        ConstantMethod::Quadrature => (quadrature_integral(dim, sigma)?, None),
        ConstantMethod::BallBound => (ball_integral(dim, sigma, n.sqrt()), None),
        ConstantMethod::MonteCarlo { samples, seed } => {
            let (est, se) = monte_carlo_integral(dim, sigma, samples, seed)?;
            (est, Some(se))
        }
    };
    Ok(EmbeddingConstant {
        dim,
        params: *params,
        sigma,
        integral,
        value: integral.powf(T::one() / params.p()),
        method,
        standard_error,
    })
}
