//! Robustness of contraction to affine parameter uncertainty.
//!
//! With the metric held fixed the certified set of parameters is found by
//! bisecting outward along one or more directions. With the metric free, a
//! single template has to work at every corner of an interval or box.

use rayon::prelude::*;

use crate::poly::{PolyMatrix, Polynomial};
use crate::sos::{instantiate, lift, ParamPolyMatrix, SosProgram};

use super::bisect::{bisect_outward, BisectResult, ProbeRecord};
use super::{
    rate_matrix, solve_program, ContractionError, DynSystem, MetricCertificate, MetricOptions, SolveSummary,
    BRACKET_CAP,
};

/// First upper bracket for uncertainty bisections.
const BRACKET_START: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertaintyKind {
    AsymmetricRange,
    SymmetricInterval,
    Box,
    Polytope,
}

impl UncertaintyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            UncertaintyKind::AsymmetricRange => "asymmetric-range",
            UncertaintyKind::SymmetricInterval => "symmetric-interval",
            UncertaintyKind::Box => "box",
            UncertaintyKind::Polytope => "polytope",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyValues {
    /// Certified `[δ_min, δ_max]`.
    Range { min: f64, max: f64 },
    /// Half-width around the nominal value.
    Symmetric { nominal: f64, gamma: f64 },
    /// Half-width of a square centred at the nominal pair.
    Box { nominal: (f64, f64), gamma: f64 },
    /// Vertices along `(+,+), (+,-), (-,+), (-,-)`.
    Polytope { vertices: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyResult {
    pub kind: UncertaintyKind,
    pub values: UncertaintyValues,
    /// One flag per bisection; set when it stopped at the bracket cap.
    pub capped: Vec<bool>,
    pub certificate: MetricCertificate,
    pub trace: Vec<ProbeRecord>,
}

/// `R(δ) = R₀ + Σ δ_k R_k`, with `βM` folded into `R₀`.
struct RateSplit<C> {
    r0: PolyMatrix<C>,
    rk: Vec<PolyMatrix<C>>,
}

impl<C: crate::poly::Coefficient> RateSplit<C> {
    fn new(sys: &DynSystem, m: &PolyMatrix<C>, beta: f64, params: &[&str]) -> Result<Self, ContractionError> {
        let (f0, fk) = sys.affine_decomposition(params)?;
        let mut r0 = rate_matrix(m, &f0)?;
        if beta != 0.0 {
            r0 = r0.checked_add(&m.scale(beta))?;
        }
        let rk = fk.iter().map(|f| rate_matrix(m, f)).collect::<Result<_, _>>()?;
        Ok(RateSplit { r0, rk })
    }

    fn at(&self, delta: &[f64]) -> Result<PolyMatrix<C>, ContractionError> {
        let mut r = self.r0.clone();
        for (rk, &d) in self.rk.iter().zip(delta) {
            if d != 0.0 {
                r = r.checked_add(&rk.scale(d))?;
            }
        }
        Ok(r)
    }
}

fn nominal_of(sys: &DynSystem, params: &[&str]) -> Result<Vec<f64>, ContractionError> {
    let nominal = sys.nominal_values();
    params.iter().map(|p| Ok(nominal[sys.param_index(p)?])).collect()
}

/// Is `-R(δ) - εI` SOS for the fixed metric?
fn fixed_probe(
    split: &RateSplit<f64>,
    delta: &[f64],
    opts: &MetricOptions,
    eps: f64,
) -> Result<SolveSummary, ContractionError> {
    let r = split.at(delta)?;
    let mut prog = SosProgram::new(r.nvars());
    prog.add_sos_matrix("-R", lift(&r.scale(-1.0)), eps)?;
    Ok(match solve_program(&prog, false, &opts.settings, opts.degree_cap)? {
        Ok(p) => p.summary(),
        Err(s) => s,
    })
}

/// Bisects outward from the nominal point along each direction with the
/// metric fixed. Directions are independent and run in parallel.
fn fixed_metric_rays(
    split: &RateSplit<f64>,
    nominal: &[f64],
    directions: &[Vec<f64>],
    opts: &MetricOptions,
    eps: f64,
    tol: f64,
) -> Result<Vec<BisectResult<()>>, ContractionError> {
    directions
        .par_iter()
        .map(|dir| {
            let mut err = None;
            let point = |t: f64| -> Vec<f64> { nominal.iter().zip(dir).map(|(n, d)| n + t * d).collect() };
            let res = bisect_outward(BRACKET_START, BRACKET_CAP, tol, |t| {
                let delta = point(t);
                let value = if dir.len() == 1 { delta[0] } else { t };
                match fixed_probe(split, &delta, opts, eps) {
                    Ok(s) => (ProbeRecord::from_summary(value, &s), Some(())),
                    Err(e) => {
                        err.get_or_insert(e);
                        (ProbeRecord::failed(value), None)
                    }
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(res),
            }
        })
        .collect()
}

/// Rejects a certificate that does not match the system or does not certify
/// contraction at the nominal parameters.
fn check_nominal(
    sys: &DynSystem,
    cert: &MetricCertificate,
    split: &RateSplit<f64>,
    nominal: &[f64],
    opts: &MetricOptions,
) -> Result<(), ContractionError> {
    if cert.m.rows() != sys.n() || cert.m.nvars() != sys.n() {
        return Err(ContractionError::InvalidCertificate(
            "metric dimension does not match the system".into(),
        ));
    }
    let mismatch = cert.rate_mismatch(&sys.nominal_field())?;
    if mismatch > 1e-7 * (1.0 + cert.r.max_coeff_diff(&PolyMatrix::zeros(sys.n(), sys.n(), sys.n()))) {
        return Err(ContractionError::InvalidCertificate(format!(
            "stored R differs from the recomputed rate matrix by {:.3e}",
            mismatch
        )));
    }
    let s = fixed_probe(split, nominal, opts, cert.eps)?;
    if !s.is_feasible() {
        return Err(ContractionError::InvalidCertificate(format!(
            "-R - eps*I is not SOS at nominal parameters ({})",
            s.status
        )));
    }
    Ok(())
}

/// Largest interval around the nominal value of `param` on which the metric
/// of `cert` still certifies contraction.
pub fn nominal_uncertainty_range(
    sys: &DynSystem,
    cert: &MetricCertificate,
    param: &str,
    opts: &MetricOptions,
    tol: f64,
) -> Result<UncertaintyResult, ContractionError> {
    let split = RateSplit::new(sys, &cert.m, cert.beta, &[param])?;
    let nominal = nominal_of(sys, &[param])?;
    check_nominal(sys, cert, &split, &nominal, opts)?;
    let rays = fixed_metric_rays(&split, &nominal, &[vec![-1.0], vec![1.0]], opts, cert.eps, tol)?;
    let n = nominal[0];
    Ok(UncertaintyResult {
        kind: UncertaintyKind::AsymmetricRange,
        values: UncertaintyValues::Range {
            min: n - rays[0].best,
            max: n + rays[1].best,
        },
        capped: rays.iter().map(|r| r.capped).collect(),
        certificate: cert.clone(),
        trace: rays.into_iter().flat_map(|r| r.trace).collect(),
    })
}

/// Four signed diagonal directions in the plane of two parameters, with the
/// nominal metric fixed.
pub fn polytope_inner_approx(
    sys: &DynSystem,
    cert: &MetricCertificate,
    params: (&str, &str),
    opts: &MetricOptions,
    tol: f64,
) -> Result<UncertaintyResult, ContractionError> {
    let names = [params.0, params.1];
    let split = RateSplit::new(sys, &cert.m, cert.beta, &names)?;
    let nominal = nominal_of(sys, &names)?;
    check_nominal(sys, cert, &split, &nominal, opts)?;
    let dirs: Vec<Vec<f64>> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .map(|&(a, b)| vec![a, b])
        .collect();
    let rays = fixed_metric_rays(&split, &nominal, &dirs, opts, cert.eps, tol)?;
    let vertices = rays
        .iter()
        .zip(&dirs)
        .map(|(r, d)| (nominal[0] + r.best * d[0], nominal[1] + r.best * d[1]))
        .collect();
    Ok(UncertaintyResult {
        kind: UncertaintyKind::Polytope,
        values: UncertaintyValues::Polytope { vertices },
        capped: rays.iter().map(|r| r.capped).collect(),
        certificate: cert.clone(),
        trace: rays.into_iter().flat_map(|r| r.trace).collect(),
    })
}

/// Searches one metric template that works at every corner `nominal + γ·s`.
fn joint_probe(
    sys: &DynSystem,
    opts: &MetricOptions,
    params: &[&str],
    nominal: &[f64],
    signs: &[Vec<f64>],
    gamma: f64,
) -> Result<Result<MetricCertificate, SolveSummary>, ContractionError> {
    let n = sys.n();
    let mut prog = SosProgram::new(n);
    let structure = opts.structure(sys);
    let m: ParamPolyMatrix = prog.metric_template(n, opts.degree, structure.as_deref())?;
    let split = RateSplit::new(sys, &m, opts.beta, params)?;
    prog.add_sos_matrix("M", m.clone(), opts.eps)?;
    let corners: Vec<Vec<f64>> = if gamma == 0.0 {
        vec![nominal.to_vec()]
    } else {
        signs
            .iter()
            .map(|s| nominal.iter().zip(s).map(|(n, s)| n + gamma * s).collect())
            .collect()
    };
    for (c, delta) in corners.iter().enumerate() {
        prog.add_sos_matrix(format!("-R{}", c + 1), split.at(delta)?.scale(-1.0), opts.eps)?;
    }
    let probe = match solve_program(&prog, false, &opts.settings, opts.degree_cap)? {
        Ok(p) => p,
        Err(s) => return Ok(Err(s)),
    };
    let summary = probe.summary();
    if !summary.is_feasible() {
        return Ok(Err(summary));
    }
    let m = instantiate(&m, &probe.values());
    let mut r = rate_matrix(&m, &sys.nominal_field())?;
    if opts.beta != 0.0 {
        r = r.checked_add(&m.scale(opts.beta))?;
    }
    Ok(Ok(MetricCertificate {
        system: sys.name.clone(),
        var_names: sys.states.clone(),
        m,
        r,
        grams: probe.grams()?,
        eps: opts.eps,
        beta: opts.beta,
        degree: opts.degree,
        semi: false,
        diagnostics: summary,
    }))
}

fn joint_bisection(
    sys: &DynSystem,
    opts: &MetricOptions,
    params: &[&str],
    signs: &[Vec<f64>],
    tol: f64,
) -> Result<(f64, Vec<f64>, BisectResult<MetricCertificate>, MetricCertificate), ContractionError> {
    let nominal = nominal_of(sys, params)?;
    let first = match joint_probe(sys, opts, params, &nominal, signs, 0.0)? {
        Ok(c) => c,
        Err(s) => return Err(ContractionError::NoMetric(s)),
    };
    let mut err = None;
    let mut res = bisect_outward(BRACKET_START, BRACKET_CAP, tol, |g| {
        match joint_probe(sys, opts, params, &nominal, signs, g) {
            Ok(Ok(c)) => (ProbeRecord::from_summary(g, &c.diagnostics), Some(c)),
            Ok(Err(s)) => (ProbeRecord::from_summary(g, &s), None),
            Err(e) => {
                err.get_or_insert(e);
                (ProbeRecord::failed(g), None)
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    res.trace.insert(0, ProbeRecord::from_summary(0.0, &first.diagnostics));
    let cert = res.payload.take().unwrap_or(first);
    Ok((res.best, nominal, res, cert))
}

/// Largest `γ` such that one metric of the requested degree certifies
/// contraction at both `nominal ± γ`.
pub fn optimize_symmetric_range(
    sys: &DynSystem,
    opts: &MetricOptions,
    param: &str,
    tol: f64,
) -> Result<UncertaintyResult, ContractionError> {
    let signs = vec![vec![1.0], vec![-1.0]];
    let (gamma, nominal, res, cert) = joint_bisection(sys, opts, &[param], &signs, tol)?;
    Ok(UncertaintyResult {
        kind: UncertaintyKind::SymmetricInterval,
        values: UncertaintyValues::Symmetric {
            nominal: nominal[0],
            gamma,
        },
        capped: vec![res.capped],
        certificate: cert,
        trace: res.trace,
    })
}

/// Largest square half-width `γ` such that one metric certifies contraction
/// at all four corners.
pub fn optimize_box(
    sys: &DynSystem,
    opts: &MetricOptions,
    params: (&str, &str),
    tol: f64,
) -> Result<UncertaintyResult, ContractionError> {
    let signs: Vec<Vec<f64>> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .iter()
        .map(|&(a, b)| vec![a, b])
        .collect();
    let (gamma, nominal, res, cert) = joint_bisection(sys, opts, &[params.0, params.1], &signs, tol)?;
    Ok(UncertaintyResult {
        kind: UncertaintyKind::Box,
        values: UncertaintyValues::Box {
            nominal: (nominal[0], nominal[1]),
            gamma,
        },
        capped: vec![res.capped],
        certificate: cert,
        trace: res.trace,
    })
}

/// Field of `sys` with the named parameters set and the rest nominal.
pub fn field_at(sys: &DynSystem, values: &[(&str, f64)]) -> Result<Vec<Polynomial>, ContractionError> {
    let owned: Vec<(String, f64)> = values.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Ok(sys.field_with(&sys.values_with(&owned)?))
}
