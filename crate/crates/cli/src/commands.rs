use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clustercert::clustering::{
    cluster_search, k_star, superlevel_measure, ClusterCertificate, ClusterQuery, DepthBound, LevelQuery,
};
use clustercert::geometry::{sample, standard_corpus, Cube, GridFunction, GridSpec, Regularity};
use clustercert::reductions::{corollary_pipeline, verify_scaling, ReductionInput, SeminormKind};
use clustercert::seminorms::{
    bv_seminorm, embedding_constant, gagliardo, gagliardo_naive, grad_lp, ConstantMethod, FractionalParams,
};
use serde::Serialize;

use crate::config::{Corollary, Params, Suite, Which};

/// How a command finished when it did not error.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Search ran to `k★` without a certificate.
    Exhausted,
    /// Some verification rows failed.
    Failed,
}

pub const SCALING_TOL: f64 = 1e-12;
pub const EMBEDDING_SLACK: f64 = 1.05;
/// Resolutions for the embedding-ratio refinement diagnostic.
pub const REFINEMENT_LEVELS: [usize; 4] = [12, 24, 48, 96];

fn emit<S: Serialize>(value: &S, output: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(path) = output {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn warn_one_dimensional(dim: usize, what: &str) {
    if dim == 1 {
        eprintln!("warning: N = 1; {what} is computed, but the clustering theorem is only claimed for N >= 2");
    }
}

fn constant_method(params: &Params) -> ConstantMethod {
    if params.rigorous {
        ConstantMethod::BallBound
    } else {
        ConstantMethod::Quadrature
    }
}

#[derive(Serialize)]
struct LevelFraction {
    c: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct SampleSummary {
    dim: usize,
    m: usize,
    cells: usize,
    min: f64,
    max: f64,
    levels: Vec<LevelFraction>,
}

pub fn sample_cmd(params: &Params) -> Result<Outcome> {
    let spec = params.function_spec()?.context("--function is required")?;
    let grid = params.grid_spec()?.context("--grid is required")?;
    warn_one_dimensional(grid.dim(), "sampling");
    let u = sample(&spec, &grid)?;
    let volume = u.cube().volume();
    let summary = SampleSummary {
        dim: u.dim(),
        m: u.m(),
        cells: u.values().len(),
        min: u.min(),
        max: u.max(),
        levels: params
            .c
            .iter()
            .flatten()
            .map(|&c| LevelFraction {
                c,
                fraction: superlevel_measure(&u, c) / volume,
            })
            .collect(),
    };
    match &params.output {
        Some(path) => {
            let mut text = serde_json::to_string(&u)?;
            text.push('\n');
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            emit(&summary, None)?;
        }
        None => {
            emit(&u, None)?;
            eprintln!("{}", serde_json::to_string(&summary)?);
        }
    }
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct OracleCheck {
    naive: f64,
    relative_gap: f64,
}

#[derive(Serialize, Default)]
struct SeminormReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    gagliardo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grad_lp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
}

pub fn seminorm_cmd(params: &Params) -> Result<Outcome> {
    let u = params.grid_function()?;
    warn_one_dimensional(u.dim(), "the seminorm");
    let which = params
        .which
        .clone()
        .unwrap_or_else(|| vec![Which::Gagliardo, Which::Grad, Which::Bv]);
    let mut report = SeminormReport::default();
    for w in which {
        match w {
            Which::Gagliardo => {
                let fp = FractionalParams::new(params.first_s()?, params.first_p()?)?;
                let fast = gagliardo(&u, &fp);
                report.gagliardo = Some(fast);
                if params.oracle {
                    let naive = gagliardo_naive(&u, &fp);
                    let relative_gap = if fast == naive {
                        0.0
                    } else {
                        (fast - naive).abs() / fast.abs().max(naive.abs())
                    };
                    report.oracle = Some(OracleCheck { naive, relative_gap });
                }
            }
            Which::Grad => report.grad_lp = Some(grad_lp(&u, params.first_p()?)?),
            Which::Bv => report.bv = Some(bv_seminorm(&u)?),
        }
    }
    if params.oracle && report.oracle.is_none() {
        bail!("--oracle needs the gagliardo seminorm in --which");
    }
    emit(&report, params.output.as_deref())?;
    Ok(Outcome::Success)
}

fn level_query(params: &Params) -> Result<LevelQuery<f64>> {
    let need = |v: Option<f64>, flag: &str| v.with_context(|| format!("{flag} is required"));
    Ok(LevelQuery::new(
        params.first_c()?,
        need(params.alpha, "--alpha")?,
        need(params.delta, "--delta")?,
        need(params.lambda, "--lambda")?,
    )?)
}

fn cluster_query(params: &Params, c_default: Option<f64>) -> Result<ClusterQuery<f64>> {
    let need = |v: Option<f64>, flag: &str| v.with_context(|| format!("{flag} is required"));
    let c = match (&params.c, c_default) {
        (Some(_), _) | (None, None) => params.first_c()?,
        (None, Some(c)) => c,
    };
    Ok(ClusterQuery::new(
        c,
        need(params.alpha, "--alpha")?,
        need(params.gamma, "--gamma")?,
        need(params.delta, "--delta")?,
        need(params.lambda, "--lambda")?,
        FractionalParams::new(params.first_s()?, params.first_p()?)?,
    )?)
}

fn write_per_k(cert: &ClusterCertificate<f64>, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["k", "plus_count", "clu1_holds"])?;
    for row in &cert.per_k {
        w.write_record([
            row.k.to_string(),
            row.plus_count.to_string(),
            row.clu1_holds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn search_cmd(params: &Params) -> Result<Outcome> {
    let u = params.grid_function()?;
    warn_one_dimensional(u.dim(), "the search");
    let cert = match params.corollary {
        None => {
            if params.gamma_prime.is_some() {
                bail!("--gamma-prime only applies with --corollary");
            }
            cluster_search(&u, &cluster_query(params, None)?)?
        }
        Some(kind) => {
            if params.gamma.is_some() {
                bail!("--gamma cannot be combined with --corollary; give --gamma-prime");
            }
            let gamma_prime = params
                .gamma_prime
                .context("--gamma-prime is required with --corollary")?;
            let s = params.first_s()?;
            let input = match kind {
                Corollary::W1p => ReductionInput::w1p(gamma_prime, FractionalParams::new(s, params.first_p()?)?)?,
                Corollary::Bv => {
                    let p = params.p.as_ref().map_or(Ok(1.0), |_| params.first_p())?;
                    if p != 1.0 {
                        bail!("--corollary bv requires p = 1, got {p}");
                    }
                    ReductionInput::bv(gamma_prime, s)?
                }
            };
            corollary_pipeline(&u, &level_query(params)?, &input.with_method(constant_method(params)))?
        }
    };
    emit(&cert, params.output.as_deref())?;
    if let Some(path) = &params.plot_data {
        write_per_k(&cert, path)?;
    }
    if cert.found {
        Ok(Outcome::Success)
    } else {
        let mut failed = Vec::new();
        if !cert.hypothesis_a {
            failed.push("(a) superlevel mass");
        }
        if !cert.hypothesis_b {
            failed.push("(b) seminorm budget");
        }
        let detail = if failed.is_empty() {
            "both hypotheses hold".to_string()
        } else {
            format!("failed hypotheses: {}", failed.join(", "))
        };
        eprintln!(
            "search exhausted: depths {:?} checked up to k* = {}; {detail}",
            cert.checked_ks, cert.k_star
        );
        Ok(Outcome::Exhausted)
    }
}

#[derive(Serialize)]
struct BoundReport {
    dim: usize,
    s: f64,
    p: f64,
    alpha: f64,
    gamma: f64,
    delta: f64,
    lambda: f64,
    k_star: u64,
    eta_lower_bound: f64,
    #[serde(rename = "B")]
    b: f64,
    factors: DepthBound<f64>,
}

pub fn bound_cmd(params: &Params) -> Result<Outcome> {
    let dim = match (&params.dim, params.grid_spec()?) {
        (Some(d), _) if d.len() == 1 => d[0],
        (Some(_), _) => bail!("--dim takes a single value for bound"),
        (None, Some(g)) => g.dim(),
        (None, None) => bail!("--dim is required"),
    };
    warn_one_dimensional(dim, "the bound");
    // The level c does not enter the bound.
    let query = cluster_query(params, Some(1.0))?;
    let bound = k_star(&query, dim)?;
    let report = BoundReport {
        dim,
        s: query.params.s(),
        p: query.params.p(),
        alpha: query.alpha,
        gamma: query.gamma,
        delta: query.delta,
        lambda: query.lambda,
        k_star: bound.k_star,
        eta_lower_bound: bound.eta_lower_bound,
        b: bound.b,
        factors: bound,
    };
    emit(&report, params.output.as_deref())?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
pub struct VerifyRow {
    pub function: String,
    pub dim: usize,
    pub m: usize,
    pub which: SeminormKind,
    /// Cube side (scaling suite only).
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub p: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Relative error (scaling) or `C(N,s,p)` (embedding).
    pub detail: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    suite: Suite,
    rows: Vec<VerifyRow>,
    passed: usize,
    failed: usize,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        1.0
    } else {
        lhs / rhs
    }
}

fn select_corpus(params: &Params, dim: usize, m: usize) -> Result<Vec<(String, Regularity, GridFunction<f64>)>> {
    let grid = GridSpec::new(Cube::unit(dim)?, m)?;
    let mut out = Vec::new();
    for entry in standard_corpus::<f64>(dim) {
        if let Some(names) = &params.corpus {
            if !names.iter().any(|n| n == &entry.name) {
                continue;
            }
        }
        let spec = match params.seed {
            Some(seed) => entry.spec.with_seed(seed),
            None => entry.spec,
        };
        out.push((entry.name, entry.regularity, sample(&spec, &grid)?));
    }
    Ok(out)
}

fn scaling_rows(params: &Params) -> Result<Vec<VerifyRow>> {
    let dims = params.dim.clone().unwrap_or_else(|| vec![2, 3]);
    let radii = params.radii.clone().unwrap_or_else(|| vec![0.5, 2.0, 3.0]);
    let ss = params.s.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
    let ps = params.p.clone().unwrap_or_else(|| vec![1.0, 2.0]);
    let which = params
        .which
        .clone()
        .unwrap_or_else(|| vec![Which::Gagliardo, Which::Grad, Which::Bv]);
    let mut rows = Vec::new();
    for &dim in &dims {
        warn_one_dimensional(dim, "the scaling sweep");
        for (name, _, unit) in select_corpus(params, dim, params.m.unwrap_or(24))? {
            for &r in &radii {
                let u = unit.rehost(Cube::centered(dim, r)?)?;
                let mut push = |kind, s: Option<f64>, p: Option<f64>| -> Result<()> {
                    let fp = FractionalParams::new(s.unwrap_or(0.5), p.unwrap_or(1.0))?;
                    let rep = verify_scaling(&u, kind, &fp)?;
                    rows.push(VerifyRow {
                        function: name.clone(),
                        dim,
                        m: u.m(),
                        which: kind,
                        r: Some(r),
                        s,
                        p,
                        lhs: rep.lhs,
                        rhs: rep.rhs,
                        ratio: ratio(rep.lhs, rep.rhs),
                        detail: rep.relative_error,
                        pass: rep.relative_error <= SCALING_TOL,
                    });
                    Ok(())
                };
                for w in &which {
                    match w {
                        Which::Gagliardo => {
                            for &s in &ss {
                                for &p in &ps {
                                    push(SeminormKind::Gagliardo, Some(s), Some(p))?;
                                }
                            }
                        }
                        Which::Grad => {
                            for &p in &ps {
                                push(SeminormKind::Grad, None, Some(p))?;
                            }
                        }
                        Which::Bv => push(SeminormKind::Bv, None, None)?,
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn embedding_rows(params: &Params, resolutions: &[usize]) -> Result<Vec<VerifyRow>> {
    let dims = params.dim.clone().unwrap_or_else(|| vec![2]);
    let ss = params.s.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
    let ps = params.p.clone().unwrap_or_else(|| vec![1.0, 2.0]);
    let method = constant_method(params);
    let mut rows = Vec::new();
    for &dim in &dims {
        warn_one_dimensional(dim, "the embedding sweep");
        let mut constants = BTreeMap::new();
        let mut constant = |s: f64, p: f64| -> Result<f64> {
            let key = (s.to_bits(), p.to_bits());
            if let Some(&c) = constants.get(&key) {
                return Ok(c);
            }
            let c = embedding_constant(dim, &FractionalParams::new(s, p)?, method)?.value;
            constants.insert(key, c);
            Ok(c)
        };
        let corpora = resolutions
            .iter()
            .map(|&m| select_corpus(params, dim, m))
            .collect::<Result<Vec<_>>>()?;
        for (name, regularity, u) in corpora.into_iter().flatten() {
            let mut cases = Vec::new();
            if regularity == Regularity::Discontinuous {
                for &s in &ss {
                    cases.push((SeminormKind::Bv, s, 1.0, bv_seminorm(&u)?));
                }
            } else {
                for &s in &ss {
                    for &p in &ps {
                        cases.push((SeminormKind::Grad, s, p, grad_lp(&u, p)?));
                    }
                }
            }
            for (kind, s, p, weak) in cases {
                let c = constant(s, p)?;
                let lhs = gagliardo(&u, &FractionalParams::new(s, p)?);
                let rhs = c * weak;
                rows.push(VerifyRow {
                    function: name.clone(),
                    dim,
                    m: u.m(),
                    which: kind,
                    r: None,
                    s: Some(s),
                    p: Some(p),
                    lhs,
                    rhs,
                    ratio: if lhs == 0.0 { 0.0 } else { lhs / rhs },
                    detail: c,
                    pass: lhs <= EMBEDDING_SLACK * rhs,
                });
            }
        }
    }
    Ok(rows)
}

fn write_rows(rows: &[VerifyRow], path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record([
        "function", "dim", "m", "which", "r", "s", "p", "lhs", "rhs", "ratio", "detail", "pass",
    ])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for row in rows {
        let which = serde_json::to_value(row.which)?;
        w.write_record([
            row.function.clone(),
            row.dim.to_string(),
            row.m.to_string(),
            which.as_str().unwrap_or_default().to_string(),
            opt(row.r),
            opt(row.s),
            opt(row.p),
            row.lhs.to_string(),
            row.rhs.to_string(),
            row.ratio.to_string(),
            row.detail.to_string(),
            row.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn verify_cmd(params: &Params) -> Result<Outcome> {
    let suite = params.suite.unwrap_or(Suite::Scaling);
    let rows = match suite {
        Suite::Scaling => scaling_rows(params)?,
        Suite::Embedding => embedding_rows(params, &[params.m.unwrap_or(48)])?,
        Suite::Refinement => embedding_rows(params, &REFINEMENT_LEVELS)?,
    };
    if rows.is_empty() {
        bail!("the corpus selection is empty");
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let report = VerifyReport {
        suite,
        passed: rows.len() - failed,
        failed,
        rows,
    };
    emit(&report, params.output.as_deref())?;
    if let Some(path) = &params.plot_data {
        write_rows(&report.rows, path)?;
    }
    Ok(if failed == 0 { Outcome::Success } else { Outcome::Failed })
}
