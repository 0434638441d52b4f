//! Discrete seminorms of grid functions.
//!
//! * Gagliardo: midpoint rule for `∬ |u(x)−u(y)|^p / |x−y|^{N+ps}` over the
//!   cube squared, diagonal cells excluded. Near-diagonal mass is therefore
//!   underestimated; the bias shrinks under refinement.
//! * Gradient: Euclidean norm of the forward-difference gradient, with the
//!   difference along an axis taken as zero on the last cell of that axis.
//! * BV: anisotropic total variation, `Σ_a Σ |u_{i+e_a} − u_i| · h^{N−1}`.
//!
//! For a gradient pointing along one axis the last two agree at `p = 1`;
//! in general `grad_lp(u, 1) ≤ bv_seminorm(u) ≤ √N · grad_lp(u, 1)`.

mod embedding;
mod kernel;

pub use embedding::{embedding_constant, unit_ball_volume, ConstantMethod, EmbeddingConstant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{multi_index, GridFunction};
use crate::scalar::{CompensatedSum, Scalar};
use kernel::{unordered_pair_sum, BoxView, OffsetWeights, Power};

/// Smoothness order `s ∈ (0,1)` and integrability `p ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsFile<T>")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct FractionalParams<T> {
    s: T,
    p: T,
}

#[derive(Deserialize)]
struct ParamsFile<T> {
    s: T,
    p: T,
}

impl<T: Scalar> TryFrom<ParamsFile<T>> for FractionalParams<T> {
    type Error = Error;
    fn try_from(f: ParamsFile<T>) -> Result<Self> {
        FractionalParams::new(f.s, f.p)
    }
}

impl<T: Scalar> FractionalParams<T> {
    pub fn new(s: T, p: T) -> Result<Self> {
        if !(s > T::zero() && s < T::one()) {
            return Err(Error::invalid(format!("s must lie in (0, 1), got {s}")));
        }
        if !(p >= T::one() && p.is_finite()) {
            return Err(Error::invalid(format!("p must be finite and >= 1, got {p}")));
        }
        Ok(Self { s, p })
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// `p·s`.
    pub fn ps(&self) -> T {
        self.p * self.s
    }

    /// Exponent `N + ps` of the Gagliardo kernel.
    pub fn kernel_exponent(&self, dim: usize) -> T {
        T::from_usize_exact(dim) + self.ps()
    }

    /// Exponent `(N − ps)/p` in `[u]_{s,p,Q_r} = r^{(N−ps)/p} [v]_{s,p,Q_1}`.
    pub fn gagliardo_scaling_exponent(&self, dim: usize) -> T {
        (T::from_usize_exact(dim) - self.ps()) / self.p
    }
}

/// Reference double loop over all ordered pairs of distinct cells, with
/// physical midpoints and distances. Quadratic in the cell count and single
/// threaded.
pub fn gagliardo_naive<T: Scalar>(u: &GridFunction<T>, params: &FractionalParams<T>) -> T {
    let spec = u.spec();
    let dim = spec.dim();
    let centers = spec.cell_centers();
    let values = u.values();
    let exponent = params.kernel_exponent(dim);
    let weight = spec.cell_volume() * spec.cell_volume();
    let mut total = CompensatedSum::new();
    for (i, xi) in centers.chunks(dim).enumerate() {
        let mut row = CompensatedSum::new();
        for (j, xj) in centers.chunks(dim).enumerate() {
            if i == j {
                continue;
            }
            let dist = xi
                .iter()
                .zip(xj)
                .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
                .sqrt();
            let diff = (values[i] - values[j]).abs().powf(params.p());
            row.add(diff / dist.powf(exponent) * weight);
        }
        total.add(row.value());
    }
    total.value().powf(T::one() / params.p())
}

fn finish<T: Scalar>(pair_sum: T, h: T, dim: usize, params: &FractionalParams<T>) -> T {
    // Σ_{ordered} h^{2N} / (h|d|)^{N+ps} = 2 h^{N−ps} Σ_{unordered} |d|^{-(N+ps)}
    let scale = h.powf(T::from_usize_exact(dim) - params.ps());
    (T::lit(2.0) * pair_sum * scale).powf(T::one() / params.p())
}

fn whole_view<T: Scalar>(u: &GridFunction<T>) -> BoxView<'_, T> {
    BoxView {
        values: u.values(),
        parent_m: u.m(),
        origin: vec![0; u.dim()],
        n: u.m(),
    }
}

/// Gagliardo seminorm by symmetric pair enumeration on the current rayon
/// pool. Bit-identical for any number of worker threads.
pub fn gagliardo<T: Scalar>(u: &GridFunction<T>, params: &FractionalParams<T>) -> T {
    let dim = u.dim();
    let table = OffsetWeights::new(dim, u.m(), params.kernel_exponent(dim));
    let sum = unordered_pair_sum(&whole_view(u), &table, Power::new(params.p()), true);
    finish(sum, u.spec().cell_side(), dim, params)
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Err(Error::invalid("worker count must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// [`gagliardo`] on a dedicated pool of `workers` threads.
pub fn gagliardo_with_workers<T: Scalar>(
    u: &GridFunction<T>,
    params: &FractionalParams<T>,
    workers: usize,
) -> Result<T> {
    with_workers(workers, || gagliardo(u, params))
}

/// `gagliardo(restrict(u, k, j))` for every `j ∈ [0,k)^N` in lexicographic
/// order, read in place from the parent array.
pub fn gagliardo_subcube_batch<T: Scalar>(
    u: &GridFunction<T>,
    params: &FractionalParams<T>,
    k: usize,
) -> Result<Vec<T>> {
    let m = u.m();
    if k == 0 || m % k != 0 {
        return Err(Error::Alignment { m, k });
    }
    let dim = u.dim();
    let n = m / k;
    let table = OffsetWeights::new(dim, n, params.kernel_exponent(dim));
    let power = Power::new(params.p());
    let h = u.spec().cell_side();
    let count = k.pow(dim as u32);
    Ok((0..count)
        .into_par_iter()
        .map(|lin| {
            let origin = multi_index(lin, k, dim).into_iter().map(|j| j * n).collect();
            let view = BoxView {
                values: u.values(),
                parent_m: m,
                origin,
                n,
            };
            finish(unordered_pair_sum(&view, &table, power, false), h, dim, params)
        })
        .collect())
}

fn require_resolution<T: Scalar>(u: &GridFunction<T>) -> Result<()> {
    if u.m() < 2 {
        return Err(Error::Resolution { m: u.m() });
    }
    Ok(())
}

fn strides(m: usize, dim: usize) -> Vec<usize> {
    (0..dim).map(|a| m.pow((dim - 1 - a) as u32)).collect()
}

/// `‖∇u‖_p` with forward differences.
pub fn grad_lp<T: Scalar>(u: &GridFunction<T>, p: T) -> Result<T> {
    if !(p >= T::one() && p.is_finite()) {
        return Err(Error::invalid(format!("p must be finite and >= 1, got {p}")));
    }
    require_resolution(u)?;
    let (m, dim) = (u.m(), u.dim());
    let h = u.spec().cell_side();
    let stride = strides(m, dim);
    let values = u.values();
    let power = Power::new(p);
    let mut total = CompensatedSum::new();
    let mut idx = vec![0usize; dim];
    for (i, &ui) in values.iter().enumerate() {
        let mut norm2 = T::zero();
        for a in 0..dim {
            if idx[a] + 1 < m {
                let g = (values[i + stride[a]] - ui) / h;
                norm2 += g * g;
            }
        }
        total.add(match power {
            Power::One => norm2.sqrt(),
            Power::Two => norm2,
            Power::General(p) => norm2.sqrt().powf(p),
        });
        crate::geometry::next_multi_index(&mut idx, m);
    }
    Ok((total.value() * u.spec().cell_volume()).powf(T::one() / p))
}

/// Anisotropic discrete total variation.
pub fn bv_seminorm<T: Scalar>(u: &GridFunction<T>) -> Result<T> {
    require_resolution(u)?;
    let (m, dim) = (u.m(), u.dim());
    let stride = strides(m, dim);
    let values = u.values();
    let mut total = CompensatedSum::new();
    let mut idx = vec![0usize; dim];
    for (i, &ui) in values.iter().enumerate() {
        for a in 0..dim {
            if idx[a] + 1 < m {
                total.add((values[i + stride[a]] - ui).abs());
            }
        }
        crate::geometry::next_multi_index(&mut idx, m);
    }
    Ok(total.value() * u.spec().cell_side().powi(dim as i32 - 1))
}
