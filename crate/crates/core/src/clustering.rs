//! Superlevel-set hypotheses, the subcube classifier and the clustering
//! certificate search.
//!
//! Setting: `u` on `Q_r(x₀)` with `|{u > c}| > α rᴺ` (hypothesis A) and
//! `[u]_{s,p} ≤ γ c r^{(N−ps)/p}` (hypothesis B). Split the cube into `k^N`
//! subcubes of side `r/k` and call a subcube *plus* when at least `α/2` of it
//! lies above `c`. Counting alone forces more than `α/(2−α)·k^N` plus
//! subcubes. If no plus subcube at any depth `k ≥ 2` were more than `1−δ`
//! full above `λc`, summing the per-subcube Gagliardo lower bound over plus
//! subcubes would give
//!
//! ```text
//! k^{ps} ≤ B = 4^p (2−α) N^{(N+ps)/2} γ^p / (α^{p+1} (1−λ)^p δ),
//! ```
//!
//! which fails for `k ≥ k★`. The search therefore scans depths `2 ≤ k ≤ k★`
//! for a plus subcube more than `1−δ` full above `λc`.
//!
//! On a grid, measures are cell counts times `h^N`. Depths are restricted to
//! divisors of `m` so that every subcube is an exact union of cells. Level
//! comparisons are strict (`u > c`); the plus classification is `≥`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{multi_index, GridFunction};
use crate::reductions::ReductionRecord;
use crate::scalar::Scalar;
use crate::seminorms::{gagliardo, FractionalParams};

fn in_unit_interval<T: Scalar>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x < T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (0, 1), got {x}")))
    }
}

fn positive<T: Scalar>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Level `c`, mass fraction `α`, defect `δ` and level reduction `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelQuery<T> {
    pub c: T,
    pub alpha: T,
    pub delta: T,
    pub lambda: T,
}

impl<T: Scalar> LevelQuery<T> {
    pub fn new(c: T, alpha: T, delta: T, lambda: T) -> Result<Self> {
        let q = Self {
            c,
            alpha,
            delta,
            lambda,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        positive("c", self.c)?;
        in_unit_interval("alpha", self.alpha)?;
        in_unit_interval("delta", self.delta)?;
        in_unit_interval("lambda", self.lambda)
    }

    pub fn with_budget(self, gamma: T, params: FractionalParams<T>) -> Result<ClusterQuery<T>> {
        ClusterQuery::new(self.c, self.alpha, gamma, self.delta, self.lambda, params)
    }
}

/// A full search request: levels plus the Gagliardo budget `γ` for `(s, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ClusterQuery<T> {
    pub c: T,
    pub alpha: T,
    pub gamma: T,
    pub delta: T,
    pub lambda: T,
    pub params: FractionalParams<T>,
}

impl<T: Scalar> ClusterQuery<T> {
    pub fn new(c: T, alpha: T, gamma: T, delta: T, lambda: T, params: FractionalParams<T>) -> Result<Self> {
        let q = Self {
            c,
            alpha,
            gamma,
            delta,
            lambda,
            params,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        self.levels().validate()?;
        positive("gamma", self.gamma)
    }

    pub fn levels(&self) -> LevelQuery<T> {
        LevelQuery {
            c: self.c,
            alpha: self.alpha,
            delta: self.delta,
            lambda: self.lambda,
        }
    }
}

pub(crate) fn count_above<T: Scalar>(values: &[T], level: T) -> usize {
    values.iter().filter(|&&v| v > level).count()
}

/// `|{u > c}|` as (cells strictly above `c`) · `h^N`.
pub fn superlevel_measure<T: Scalar>(u: &GridFunction<T>, c: T) -> T {
    T::from_usize_exact(count_above(u.values(), c)) * u.spec().cell_volume()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HypothesisA<T> {
    pub passed: bool,
    /// `|{u > c}| / rᴺ`.
    pub fraction: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HypothesisB<T> {
    pub passed: bool,
    pub seminorm: T,
    /// `[u]_{s,p} / (c r^{(N−ps)/p})`.
    pub gamma_measured: T,
}

/// `|{u > c}| > α rᴺ`, evaluated on cell counts: `#{u > c} > α mᴺ`.
pub fn check_hypothesis_a<T: Scalar>(u: &GridFunction<T>, c: T, alpha: T) -> HypothesisA<T> {
    let count = count_above(u.values(), c);
    let total = T::from_usize_exact(u.values().len());
    let count_t = T::from_usize_exact(count);
    HypothesisA {
        passed: count_t > alpha * total,
        fraction: count_t / total,
    }
}

/// `γ_measured ≤ γ` with `γ_measured = [u]_{s,p} / (c r^{(N−ps)/p})`.
pub fn check_hypothesis_b<T: Scalar>(u: &GridFunction<T>, query: &ClusterQuery<T>) -> HypothesisB<T> {
    let seminorm = gagliardo(u, &query.params);
    budget_check(u, query, seminorm)
}

fn budget_check<T: Scalar>(u: &GridFunction<T>, query: &ClusterQuery<T>, seminorm: T) -> HypothesisB<T> {
    let exponent = query.params.gagliardo_scaling_exponent(u.dim());
    let gamma_measured = seminorm / (query.c * u.cube().side().powf(exponent));
    HypothesisB {
        passed: gamma_measured <= query.gamma,
        seminorm,
        gamma_measured,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubcubeClass {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubcubeRow {
    pub index: Vec<usize>,
    /// Cells strictly above `c`.
    pub count_c: usize,
    /// Cells strictly above `λc`, when a second level was requested.
    pub count_lambda: Option<usize>,
    pub class: SubcubeClass,
}

/// Classification of the depth-`k` partition at level `c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport<T> {
    pub k: usize,
    pub cells_per_subcube: usize,
    pub plus_indices: Vec<Vec<usize>>,
    pub plus_count: usize,
    /// `#𝓕_k^+`.
    pub clu1_lhs: T,
    /// `α/(2−α)·k^N`.
    pub clu1_rhs: T,
    pub clu1_holds: bool,
    pub subcubes: Vec<SubcubeRow>,
}

/// Per-subcube counts of cells strictly above `level`, lexicographic in `j`.
fn subcube_counts<T: Scalar>(u: &GridFunction<T>, k: usize, level: T) -> Vec<usize> {
    let (m, dim) = (u.m(), u.dim());
    let n = m / k;
    let mut counts = vec![0usize; k.pow(dim as u32)];
    let mut idx = vec![0usize; dim];
    for &v in u.values() {
        if v > level {
            let sub = idx.iter().fold(0usize, |acc, &i| acc * k + i / n);
            counts[sub] += 1;
        }
        crate::geometry::next_multi_index(&mut idx, m);
    }
    counts
}

fn check_depth(m: usize, k: usize) -> Result<()> {
    if k == 0 || m % k != 0 {
        return Err(Error::Alignment { m, k });
    }
    Ok(())
}

/// Splits the cube into `k^N` subcubes and marks those with
/// `#{u > c} ≥ (α/2)(m/k)^N` as plus.
pub fn classify_partition<T: Scalar>(u: &GridFunction<T>, c: T, alpha: T, k: usize) -> Result<PartitionReport<T>> {
    classify_with_levels(u, c, None, alpha, k)
}

fn classify_with_levels<T: Scalar>(
    u: &GridFunction<T>,
    c: T,
    lambda_level: Option<T>,
    alpha: T,
    k: usize,
) -> Result<PartitionReport<T>> {
    check_depth(u.m(), k)?;
    let dim = u.dim();
    let n = u.m() / k;
    let cells = n.pow(dim as u32);
    let threshold = alpha / T::lit(2.0) * T::from_usize_exact(cells);
    let at_c = subcube_counts(u, k, c);
    let at_lambda = lambda_level.map(|l| subcube_counts(u, k, l));
    let mut subcubes = Vec::with_capacity(at_c.len());
    let mut plus_indices = Vec::new();
    for (lin, &count_c) in at_c.iter().enumerate() {
        let index = multi_index(lin, k, dim);
        let class = if T::from_usize_exact(count_c) >= threshold {
            plus_indices.push(index.clone());
            SubcubeClass::Plus
        } else {
            SubcubeClass::Minus
        };
        subcubes.push(SubcubeRow {
            index,
            count_c,
            count_lambda: at_lambda.as_ref().map(|v| v[lin]),
            class,
        });
    }
    let plus_count = plus_indices.len();
    let clu1_lhs = T::from_usize_exact(plus_count);
    let clu1_rhs = alpha / (T::lit(2.0) - alpha) * T::from_usize_exact(at_c.len());
    Ok(PartitionReport {
        k,
        cells_per_subcube: cells,
        plus_indices,
        plus_count,
        clu1_lhs,
        clu1_rhs,
        clu1_holds: clu1_lhs > clu1_rhs,
        subcubes,
    })
}

impl<T: Scalar> PartitionReport<T> {
    /// One row per subcube: `k, index, count_c, count_lambda, class`.
    /// The index is written as `i0;i1;…`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "index", "count_c", "count_lambda", "class"])?;
        for row in &self.subcubes {
            let index = row.index.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";");
            let lambda = row.count_lambda.map(|c| c.to_string()).unwrap_or_default();
            let class = match row.class {
                SubcubeClass::Plus => "plus",
                SubcubeClass::Minus => "minus",
            };
            w.write_record([
                self.k.to_string(),
                index,
                row.count_c.to_string(),
                lambda,
                class.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Itemized terminal bound `B` and the depth `k★` past which it fails.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DepthBound<T> {
    /// `4^p`
    pub four_pow_p: T,
    /// `2 − α`
    pub two_minus_alpha: T,
    /// `N^{(N+ps)/2}`
    pub dim_factor: T,
    /// `γ^p`
    pub gamma_pow_p: T,
    /// `α^{p+1}`
    pub alpha_pow: T,
    /// `(1 − λ)^p`
    pub one_minus_lambda_pow: T,
    pub delta: T,
    /// `ps`
    pub exponent: T,
    pub b: T,
    pub k_star: u64,
    /// `1/k★`
    pub eta_lower_bound: T,
}

/// `k★ = max(2, ⌊B^{1/(ps)}⌋ + 1)`, saturating at `u64::MAX`.
pub fn k_star<T: Scalar>(query: &ClusterQuery<T>, dim: usize) -> Result<DepthBound<T>> {
    query.validate()?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let p = query.params.p();
    let ps = query.params.ps();
    let n = T::from_usize_exact(dim);
    let two = T::lit(2.0);
    let four_pow_p = T::lit(4.0).powf(p);
    let two_minus_alpha = two - query.alpha;
    let dim_factor = n.powf((n + ps) / two);
    let gamma_pow_p = query.gamma.powf(p);
    let alpha_pow = query.alpha.powf(p + T::one());
    let one_minus_lambda_pow = (T::one() - query.lambda).powf(p);
    let b = four_pow_p * two_minus_alpha * dim_factor * gamma_pow_p / (alpha_pow * one_minus_lambda_pow * query.delta);
    let root = b.powf(T::one() / ps).floor();
    let k = match root.to_u64() {
        Some(r) if root.is_finite() => r.saturating_add(1).max(2),
        _ => u64::MAX,
    };
    Ok(DepthBound {
        four_pow_p,
        two_minus_alpha,
        dim_factor,
        gamma_pow_p,
        alpha_pow,
        one_minus_lambda_pow,
        delta: query.delta,
        exponent: ps,
        b,
        k_star: k,
        eta_lower_bound: T::one() / T::lit(k as f64),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DepthSummary {
    pub k: usize,
    pub plus_count: usize,
    pub clu1_holds: bool,
}

/// Outcome of [`cluster_search`].
///
/// When `found`, `k`, `eta`, `subcube_index`, `x1` and `fraction` describe the
/// witness: the subcube `Q_{ηr}(x₁)` has `fraction > 1 − δ` of its cells
/// strictly above `λc`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterCertificate<T> {
    pub found: bool,
    pub k: Option<usize>,
    pub eta: Option<T>,
    pub subcube_index: Option<Vec<usize>>,
    pub x1: Option<Vec<T>>,
    pub fraction: Option<T>,
    /// Largest `λc`-fraction over all plus subcubes inspected.
    pub best_fraction: Option<T>,
    pub checked_ks: Vec<usize>,
    /// Depths in `[2, min(k★, m)]` that do not divide `m`.
    pub skipped_ks: Vec<usize>,
    pub k_star: u64,
    pub eta_lower_bound: T,
    pub alpha_measured: T,
    pub gamma_measured: T,
    pub hypothesis_a: bool,
    pub hypothesis_b: bool,
    pub per_k: Vec<DepthSummary>,
    pub query: ClusterQuery<T>,
    pub reduction: Option<ReductionRecord<T>>,
}

/// Searches depths `k | m`, `2 ≤ k ≤ k★`, in increasing order, and within
/// each depth the plus subcubes in lexicographic order, for the first
/// subcube more than `1 − δ` full above `λc`. Hypotheses are evaluated and
/// recorded but do not gate the search.
pub fn cluster_search<T: Scalar>(u: &GridFunction<T>, query: &ClusterQuery<T>) -> Result<ClusterCertificate<T>> {
    cluster_search_with_reports(u, query).map(|(cert, _)| cert)
}

/// [`cluster_search`] that also returns the partition report of every depth
/// inspected, with counts at both `c` and `λc`.
pub fn cluster_search_with_reports<T: Scalar>(
    u: &GridFunction<T>,
    query: &ClusterQuery<T>,
) -> Result<(ClusterCertificate<T>, Vec<PartitionReport<T>>)> {
    query.validate()?;
    let seminorm = gagliardo(u, &query.params);
    search_with_seminorm(u, query, seminorm)
}

pub(crate) fn search_with_seminorm<T: Scalar>(
    u: &GridFunction<T>,
    query: &ClusterQuery<T>,
    seminorm: T,
) -> Result<(ClusterCertificate<T>, Vec<PartitionReport<T>>)> {
    let m = u.m();
    let dim = u.dim();
    let bound = k_star(query, dim)?;
    let hyp_a = check_hypothesis_a(u, query.c, query.alpha);
    let hyp_b = budget_check(u, query, seminorm);

    let upper = usize::try_from(bound.k_star).unwrap_or(usize::MAX).min(m);
    let (depths, skipped): (Vec<usize>, Vec<usize>) = (2..=upper).partition(|k| m % k == 0);
    if depths.is_empty() {
        return Err(Error::SearchInfeasible {
            m,
            k_star: bound.k_star,
        });
    }

    let lambda_level = query.lambda * query.c;
    let target = T::one() - query.delta;
    let mut cert = ClusterCertificate {
        found: false,
        k: None,
        eta: None,
        subcube_index: None,
        x1: None,
        fraction: None,
        best_fraction: None,
        checked_ks: Vec::new(),
        skipped_ks: skipped,
        k_star: bound.k_star,
        eta_lower_bound: bound.eta_lower_bound,
        alpha_measured: hyp_a.fraction,
        gamma_measured: hyp_b.gamma_measured,
        hypothesis_a: hyp_a.passed,
        hypothesis_b: hyp_b.passed,
        per_k: Vec::new(),
        query: *query,
        reduction: None,
    };
    let mut reports = Vec::new();

    for k in depths {
        let report = classify_with_levels(u, query.c, Some(lambda_level), query.alpha, k)?;
        cert.checked_ks.push(k);
        cert.per_k.push(DepthSummary {
            k,
            plus_count: report.plus_count,
            clu1_holds: report.clu1_holds,
        });
        let cells = T::from_usize_exact(report.cells_per_subcube);
        let witness = report
            .subcubes
            .iter()
            .filter(|row| row.class == SubcubeClass::Plus)
            .map(|row| {
                let above = row.count_lambda.expect("λc counts requested");
                (row, T::from_usize_exact(above) / cells)
            })
            .inspect(|&(_, f)| {
                if cert.best_fraction.is_none_or(|b| f > b) {
                    cert.best_fraction = Some(f);
                }
            })
            .find(|&(_, f)| f > target)
            .map(|(row, f)| (row.index.clone(), f));
        reports.push(report);
        if let Some((index, fraction)) = witness {
            let sub = u.cube().subcube(k, &index)?;
            cert.found = true;
            cert.k = Some(k);
            cert.eta = Some(T::one() / T::from_usize_exact(k));
            cert.x1 = Some(sub.center().to_vec());
            cert.subcube_index = Some(index);
            cert.fraction = Some(fraction);
            break;
        }
    }
    Ok((cert, reports))
}
