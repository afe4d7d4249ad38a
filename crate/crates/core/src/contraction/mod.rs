//! Contraction-metric search and the robustness workflows built on it.
//!
//! The central object is the rate matrix `R = JᵀM + MJ + Ṁ + βM` of a metric
//! `M(x)` for the field `f`. A metric certifies contraction when `M - εI` and
//! `-R - εI` are SOS matrices; in semi mode only `-R` is required to be SOS.

mod bisect;
mod system;
mod uncertainty;

pub use bisect::ProbeRecord;
pub use system::{eval_field, DynSystem, Param, ParamKind};
pub use uncertainty::{
    nominal_uncertainty_range, optimize_box, optimize_symmetric_range, polytope_inner_approx,
    field_at, UncertaintyKind, UncertaintyResult, UncertaintyValues,
};

use thiserror::Error;

use crate::poly::{jacobian, lie_derivative_matrix, Coefficient, Monomial, PolyError, PolyMatrix, Polynomial};
use crate::sdp::{self, Residuals, SdpSolution, SdpStatus, Settings};
use crate::sos::{
    instantiate, CertificateFile, CompileOptions, LinExpr, Compiled, GramCertificate, GramSection, ParamPolyMatrix,
    SosError, SosProgram, DEFAULT_DEGREE_CAP,
};

/// Strictness margin applied to `M` and `-R` unless overridden.
pub const DEFAULT_EPS: f64 = 1e-4;
/// Bisection resolution in parameter units.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-3;
/// Upper limit for outward bracketing.
pub const BRACKET_CAP: f64 = 64.0;
/// Allowable additive perturbation quoted for a classical
/// equilibrium-perturbation bound on the jet-engine model; kept only as a
/// comparison constant.
pub const CLASSICAL_ADDITIVE_BOUND: f64 = 5.1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractionError {
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error("parameter `{0}` does not enter the dynamics affinely")]
    NotAffine(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("no metric exists at the starting point ({})", .0.status)]
    NoMetric(SolveSummary),
    #[error("certificate rejected: {0}")]
    InvalidCertificate(String),
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Solver diagnostics kept with every search result.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub status: SdpStatus,
    pub feasibility_ratio: f64,
    pub iterations: usize,
    pub solve_time: f64,
    pub residuals: Residuals,
    /// An `Inaccurate` first attempt was retried with a looser tolerance.
    pub retried: bool,
    pub note: Option<String>,
}

impl SolveSummary {
    fn from_solution(sol: &SdpSolution, retried: bool) -> Self {
        SolveSummary {
            status: sol.status,
            feasibility_ratio: sol.feasibility_ratio,
            iterations: sol.iterations,
            solve_time: sol.solve_time,
            residuals: sol.residuals,
            retried,
            note: None,
        }
    }

    fn presolve_infeasible(err: &SosError) -> Self {
        SolveSummary {
            status: SdpStatus::PrimalInfeasible,
            feasibility_ratio: -1.0,
            iterations: 0,
            solve_time: 0.0,
            residuals: Residuals::default(),
            retried: false,
            note: Some(err.to_string()),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == SdpStatus::Feasible
    }

    /// Certified infeasible, as opposed to a numerical failure.
    pub fn is_certified_infeasible(&self) -> bool {
        self.status == SdpStatus::PrimalInfeasible
    }
}

/// A contraction metric together with everything needed to re-check it.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCertificate {
    pub system: String,
    pub var_names: Vec<String>,
    pub m: PolyMatrix<f64>,
    /// `JᵀM + MJ + Ṁ + βM` at nominal parameters.
    pub r: PolyMatrix<f64>,
    pub grams: Vec<GramCertificate>,
    pub eps: f64,
    pub beta: f64,
    pub degree: u32,
    pub semi: bool,
    pub diagnostics: SolveSummary,
}

/// Result of a single metric search.
#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found(Box<MetricCertificate>),
    /// The solver returned a certificate of infeasibility.
    Infeasible(SolveSummary),
    /// Neither a solution nor a certificate.
    Numerical(SolveSummary),
}

impl SearchOutcome {
    pub fn certificate(&self) -> Option<&MetricCertificate> {
        match self {
            SearchOutcome::Found(c) => Some(c),
            _ => None,
        }
    }

    pub fn summary(&self) -> &SolveSummary {
        match self {
            SearchOutcome::Found(c) => &c.diagnostics,
            SearchOutcome::Infeasible(s) | SearchOutcome::Numerical(s) => s,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricOptions {
    pub degree: u32,
    pub beta: f64,
    pub eps: f64,
    /// Restrict `M` to depend on these states only.
    pub structure_vars: Option<Vec<usize>>,
    /// Require `-R` SOS with zero margin instead of `-R - εI`.
    pub semi: bool,
    /// Entries of `R` pinned to zero (0-based).
    pub zero_entries: Vec<(usize, usize)>,
    /// Eliminate variables fixed by the pins. `None` presolves exactly when
    /// there are pins.
    pub presolve: Option<bool>,
    pub settings: Settings,
    pub degree_cap: u32,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            degree: 4,
            beta: 0.0,
            eps: DEFAULT_EPS,
            structure_vars: None,
            semi: false,
            zero_entries: Vec::new(),
            presolve: None,
            settings: Settings::default(),
            degree_cap: DEFAULT_DEGREE_CAP,
        }
    }
}

impl MetricOptions {
    pub fn with_degree(degree: u32) -> Self {
        MetricOptions {
            degree,
            ..Default::default()
        }
    }

    /// Structure from the system's input split when none is given explicitly.
    fn structure(&self, sys: &DynSystem) -> Option<Vec<usize>> {
        self.structure_vars
            .clone()
            .or_else(|| sys.input_split.map(|k| (0..k).collect()))
    }
}

/// `JᵀM + MJ + Ṁ` for a (possibly parametrized) symmetric `M`.
pub fn rate_matrix<C: Coefficient>(m: &PolyMatrix<C>, field: &[Polynomial]) -> Result<PolyMatrix<C>, PolyError> {
    let j = jacobian(field)?;
    let mj = m.mul_real(&j)?;
    mj.symmetrize_sum()?.checked_add(&lie_derivative_matrix(m, field)?)
}

/// Solver output plus the compiled program it belongs to.
pub(crate) struct ProbeSolve {
    pub compiled: Compiled,
    pub program: SosProgram,
    pub back_map: Option<crate::sos::BackMap>,
    pub sol: SdpSolution,
    pub retried: bool,
}

impl ProbeSolve {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary::from_solution(&self.sol, self.retried)
    }

    /// Decision values of the original (un-presolved) program.
    pub fn values(&self) -> Vec<f64> {
        let reduced = self.compiled.decision_values(&self.sol);
        match &self.back_map {
            Some(b) => b.apply(&reduced),
            None => reduced,
        }
    }

    pub fn grams(&self) -> Result<Vec<GramCertificate>, SosError> {
        Ok(self.compiled.recover(&self.program, &self.sol)?.grams)
    }
}

/// Compiles and solves `prog`, retrying an `Inaccurate` exit once at ten
/// times the tolerance.
pub(crate) fn solve_program(
    prog: &SosProgram,
    presolve: bool,
    settings: &Settings,
    degree_cap: u32,
) -> Result<Result<ProbeSolve, SolveSummary>, SosError> {
    let (program, back_map) = if presolve {
        match prog.presolve() {
            Ok(p) => (p.program, Some(p.back_map)),
            Err(e @ SosError::InfeasibleByPresolve(_)) => return Ok(Err(SolveSummary::presolve_infeasible(&e))),
            Err(e) => return Err(e),
        }
    } else {
        (prog.clone(), None)
    };
    let opts = CompileOptions {
        degree_cap,
        prune_basis: presolve,
    };
    let compiled = program.compile(&opts)?;
    let mut sol = sdp::solve(&compiled.sdp, settings)?;
    let mut retried = false;
    if sol.status == SdpStatus::Inaccurate {
        let loose = Settings {
            tol: settings.tol * 10.0,
            ..*settings
        };
        sol = sdp::solve(&compiled.sdp, &loose)?;
        retried = true;
    }
    Ok(Ok(ProbeSolve {
        compiled,
        program,
        back_map,
        sol,
        retried,
    }))
}

fn classify(summary: SolveSummary) -> SearchOutcome {
    if summary.is_certified_infeasible() {
        SearchOutcome::Infeasible(summary)
    } else {
        SearchOutcome::Numerical(summary)
    }
}

/// Builds the SOS program for `M` on the nominal field and returns it with the
/// `M` and `R` templates.
fn metric_program(
    sys: &DynSystem,
    opts: &MetricOptions,
) -> Result<(SosProgram, ParamPolyMatrix, ParamPolyMatrix), ContractionError> {
    let field = sys.nominal_field();
    let n = sys.n();
    let mut prog = SosProgram::new(n);
    let structure = opts.structure(sys);
    let m = prog.metric_template(n, opts.degree, structure.as_deref())?;
    let mut r = rate_matrix(&m, &field)?;
    if opts.beta != 0.0 {
        r = r.checked_add(&m.scale(opts.beta))?;
    }
    if opts.semi {
        // M - εI cannot stay SOS when R is pinned singular (the pinned metric
        // family loses uniform definiteness), so fix the scale instead and
        // leave positivity on a region to the verifier.
        prog.add_sos_matrix("M", m.clone(), 0.0)?;
        let mut trace = LinExpr::constant(-(n as f64));
        let one = Monomial::one(n);
        for i in 0..n {
            if let Some(c) = m.get(i, i).coeff(&one) {
                trace.constant += c.constant;
                for (v, a) in c.terms() {
                    trace.add_term(v, a);
                }
            }
        }
        prog.add_equality(trace)?;
    } else {
        prog.add_sos_matrix("M", m.clone(), opts.eps)?;
    }
    for &(i, j) in &opts.zero_entries {
        prog.pin_zero(&r, i, j)?;
    }
    let r_eps = if opts.semi { 0.0 } else { opts.eps };
    prog.add_sos_matrix("-R", r.scale(-1.0), r_eps)?;
    Ok((prog, m, r))
}

/// Searches for a metric of the given degree at nominal parameters.
pub fn find_metric(sys: &DynSystem, opts: &MetricOptions) -> Result<SearchOutcome, ContractionError> {
    let (prog, m_tmpl, _) = metric_program(sys, opts)?;
    let presolve = opts.presolve.unwrap_or(!opts.zero_entries.is_empty());
    let probe = match solve_program(&prog, presolve, &opts.settings, opts.degree_cap)? {
        Ok(p) => p,
        Err(summary) => return Ok(SearchOutcome::Infeasible(summary)),
    };
    let summary = probe.summary();
    if !summary.is_feasible() {
        return Ok(classify(summary));
    }
    let values = probe.values();
    let m = instantiate(&m_tmpl, &values);
    let mut r = rate_matrix(&m, &sys.nominal_field())?;
    if opts.beta != 0.0 {
        r = r.checked_add(&m.scale(opts.beta))?;
    }
    Ok(SearchOutcome::Found(Box::new(MetricCertificate {
        system: sys.name.clone(),
        var_names: sys.states.clone(),
        m,
        r,
        grams: probe.grams()?,
        eps: if opts.semi { 0.0 } else { opts.eps },
        beta: opts.beta,
        degree: opts.degree,
        semi: opts.semi,
        diagnostics: summary,
    })))
}

/// Largest convergence rate found by bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub beta: f64,
    pub certificate: MetricCertificate,
    pub capped: bool,
    pub trace: Vec<ProbeRecord>,
}

/// Bisection on `β` over `[0, β_hi]`, `β_hi` doubled from 1 until infeasible.
pub fn max_rate(sys: &DynSystem, base: &MetricOptions, tol: f64) -> Result<RateResult, ContractionError> {
    let at = |beta: f64| -> Result<SearchOutcome, ContractionError> {
        find_metric(
            sys,
            &MetricOptions {
                beta,
                ..base.clone()
            },
        )
    };
    let start = at(0.0)?;
    let first = match start {
        SearchOutcome::Found(c) => *c,
        other => return Err(ContractionError::NoMetric(other.summary().clone())),
    };
    let mut err = None;
    let result = bisect::bisect_outward(1.0, BRACKET_CAP, tol, |beta| match at(beta) {
        Ok(outcome) => {
            let rec = ProbeRecord::from_summary(beta, outcome.summary());
            (rec, outcome.certificate().cloned())
        }
        Err(e) => {
            err = Some(e);
            (ProbeRecord::failed(beta), None)
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut trace = vec![ProbeRecord::from_summary(0.0, &first.diagnostics)];
    trace.extend(result.trace);
    Ok(RateResult {
        beta: result.best,
        certificate: result.payload.unwrap_or(first),
        capped: result.capped,
        trace,
    })
}

/// `V = fᵀ M f` at nominal parameters.
pub fn lyapunov_from_metric(sys: &DynSystem, cert: &MetricCertificate) -> Result<Polynomial, ContractionError> {
    let f = sys.nominal_field();
    let n = f.len();
    if cert.m.rows() != n {
        return Err(ContractionError::InvalidCertificate(format!(
            "metric is {}x{} but the system has {} states",
            cert.m.rows(),
            cert.m.cols(),
            n
        )));
    }
    let mut v = Polynomial::zero(n);
    for i in 0..n {
        for j in 0..n {
            let t = f[i].checked_mul(cert.m.get(i, j))?.checked_mul(&f[j])?;
            v = v.checked_add(&t)?;
        }
    }
    Ok(v)
}

impl MetricCertificate {
    /// Largest coefficient mismatch between the stored `R` and
    /// `JᵀM + MJ + Ṁ + βM` recomputed for `field`.
    pub fn rate_mismatch(&self, field: &[Polynomial]) -> Result<f64, PolyError> {
        let r = rate_matrix(&self.m, field)?.checked_add(&self.m.scale(self.beta))?;
        Ok(r.max_coeff_diff(&self.r))
    }

    /// Same certificate with `M`, `R`, every Gram matrix and `ε` scaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> MetricCertificate {
        MetricCertificate {
            m: self.m.scale(c),
            r: self.r.scale(c),
            grams: self.grams.iter().map(|g| g.scaled(c)).collect(),
            eps: self.eps * c,
            ..self.clone()
        }
    }

    pub fn to_file(&self) -> CertificateFile {
        let mut f = CertificateFile {
            var_names: self.var_names.clone(),
            matrices: vec![("M".into(), self.m.clone()), ("R".into(), self.r.clone())],
            grams: self
                .grams
                .iter()
                .map(|g| GramSection {
                    name: g.label.clone(),
                    cert: g.clone(),
                })
                .collect(),
            ..Default::default()
        };
        f.set("system", &self.system);
        f.set("degree", self.degree);
        f.set("eps", self.eps);
        f.set("beta", self.beta);
        f.set("semi", self.semi);
        f.set("status", self.diagnostics.status);
        f.set("feasibility_ratio", format!("{:.6}", self.diagnostics.feasibility_ratio));
        f.set("iterations", self.diagnostics.iterations);
        f.set("retried", self.diagnostics.retried);
        f
    }

    pub fn from_file(f: &CertificateFile) -> Result<Self, ContractionError> {
        let bad = |what: &str| ContractionError::InvalidCertificate(format!("missing or invalid `{}`", what));
        let num = |key: &str| -> Result<f64, ContractionError> {
            f.get(key).and_then(|v| v.parse().ok()).ok_or_else(|| bad(key))
        };
        let m = f.matrix("M").ok_or_else(|| bad("matrix M"))?.clone();
        let r = f.matrix("R").ok_or_else(|| bad("matrix R"))?.clone();
        Ok(MetricCertificate {
            system: f.get("system").unwrap_or("").to_string(),
            var_names: f.var_names.clone(),
            m,
            r,
            grams: f.grams.iter().map(|g| g.cert.clone()).collect(),
            eps: num("eps")?,
            beta: num("beta")?,
            degree: num("degree")? as u32,
            semi: f.get("semi") == Some("true"),
            diagnostics: SolveSummary {
                status: f
                    .get("status")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("status"))?,
                feasibility_ratio: num("feasibility_ratio").unwrap_or(f64::NAN),
                iterations: num("iterations").unwrap_or(0.0) as usize,
                solve_time: 0.0,
                residuals: Residuals::default(),
                retried: f.get("retried") == Some("true"),
                note: None,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn scalar_decay() -> DynSystem {
        let names = vec!["x".to_string()];
        DynSystem::autonomous("decay", names.clone(), vec![parse_polynomial("-x", &names).unwrap()]).unwrap()
    }

    #[test]
    fn scalar_rate_is_two() {
        let sys = scalar_decay();
        let res = max_rate(&sys, &MetricOptions::with_degree(0), 1e-3).unwrap();
        assert!((res.beta - 2.0).abs() <= 2e-3, "beta = {}", res.beta);
        assert!(!res.capped);
    }

    #[test]
    fn scalar_lyapunov() {
        let sys = scalar_decay();
        let cert = find_metric(&sys, &MetricOptions::with_degree(0)).unwrap();
        let cert = cert.certificate().unwrap().clone();
        let unit = MetricCertificate {
            m: PolyMatrix::identity(1, 1),
            ..cert
        };
        let v = lyapunov_from_metric(&sys, &unit).unwrap();
        assert_eq!(v, parse_polynomial("x^2", &["x".to_string()]).unwrap());
    }
}
