//! Numerical sanity checks for metric certificates.
//!
//! Nothing here is a proof. The SOS certificate is the proof; these routines
//! sample `M`, `R` and `V = fᵀMf` on boxes of state space and replay the
//! differential identity along simulated trajectory pairs.

use std::cmp::Ordering;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::contraction::{eval_field, rate_matrix, DynSystem, MetricCertificate};
use crate::poly::{jacobian, PolyError, PolyMatrix};
use crate::simulate::rk4_step;

pub const DEFAULT_SEED: u64 = 20240101;
pub const DEFAULT_GRID: usize = 21;
pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_HALF_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("invalid region: {0}")]
    Region(String),
    #[error("certificate has {cert} states, expected {expected}")]
    Dimension { cert: usize, expected: usize },
    #[error("displacement collapsed to {0:.3e} at t = {1}; use a larger displacement or a shorter horizon")]
    Collapse(f64, f64),
    #[error("invalid integration parameters: {0}")]
    Integration(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Axis-aligned box with a tensor grid and optional random samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub bounds: Vec<(f64, f64)>,
    pub grid: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
}

impl Region {
    /// `[lo, hi]ⁿ` with the default grid, sample count and seed.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Region {
            bounds: vec![(lo, hi); n],
            grid: vec![DEFAULT_GRID; n],
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }

    /// The default verification box `[-2, 2]ⁿ`.
    pub fn default_for(n: usize) -> Self {
        Self::cube(n, -DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.grid.len() != self.bounds.len() {
            return Err(VerifyError::Region(format!(
                "{} grid counts for {} axes",
                self.grid.len(),
                self.bounds.len()
            )));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(VerifyError::Region(format!("axis {}: [{}, {}]", i + 1, lo, hi)));
            }
        }
        if let Some(g) = self.grid.iter().find(|&&g| g < 2) {
            return Err(VerifyError::Region(format!("grid count {} is below 2", g)));
        }
        Ok(())
    }

    /// Grid points in lexicographic order followed by the random samples.
    pub fn points(&self) -> Result<Vec<Vec<f64>>, VerifyError> {
        self.validate()?;
        let n = self.dim();
        let total: usize = self.grid.iter().product();
        let mut pts = Vec::with_capacity(total + self.samples);
        for mut idx in 0..total {
            let mut p = vec![0.0; n];
            for axis in (0..n).rev() {
                let g = self.grid[axis];
                let (lo, hi) = self.bounds[axis];
                let t = (idx % g) as f64 / (g - 1) as f64;
                p[axis] = (lo * (1.0 - t) + hi * t).clamp(lo, hi);
                idx /= g;
            }
            pts.push(p);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.samples {
            pts.push(
                self.bounds
                    .iter()
                    .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                    .collect(),
            );
        }
        Ok(pts)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Index of the largest `key`, ties to the lexicographically smallest point.
fn argmax(points: &[Vec<f64>], key: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    for i in 1..points.len() {
        match key(i).total_cmp(&key(best)) {
            Ordering::Greater => best = i,
            Ordering::Equal if lex_cmp(&points[i], &points[best]) == Ordering::Less => best = i,
            _ => {}
        }
    }
    best
}

fn eigenvalues(m: DMatrix<f64>) -> (f64, f64) {
    let e = m.symmetric_eigen().eigenvalues;
    (e.min(), e.max())
}

/// Eigenvalue extremes of `M` and `R` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSample {
    pub point: Vec<f64>,
    pub min_m: f64,
    pub max_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBounds {
    pub min_m: f64,
    pub min_m_at: Vec<f64>,
    pub max_r: f64,
    pub max_r_at: Vec<f64>,
    pub points: usize,
}

impl EigenBounds {
    /// The bounds expected of an accepted certificate: `λ_min(M) ≥ ε/2` and
    /// `λ_max(R) ≤ -ε/2`, or `λ_max(R) ≤ 1e-7` in semi mode.
    pub fn passes(&self, cert: &MetricCertificate) -> bool {
        if cert.semi {
            self.min_m > 0.0 && self.max_r <= 1e-7
        } else {
            self.min_m >= cert.eps / 2.0 && self.max_r <= -cert.eps / 2.0
        }
    }
}

fn check_dim(cert: &MetricCertificate, n: usize) -> Result<(), VerifyError> {
    if cert.m.rows() != n || cert.m.nvars() != n || cert.r.rows() != n {
        return Err(VerifyError::Dimension {
            cert: cert.m.rows(),
            expected: n,
        });
    }
    Ok(())
}

/// Evaluates `M` and `R` at every grid and random point of `region`.
pub fn eigen_samples(cert: &MetricCertificate, region: &Region) -> Result<Vec<EigenSample>, VerifyError> {
    check_dim(cert, region.dim())?;
    let pts = region.points()?;
    pts.into_par_iter()
        .map(|p| {
            let (min_m, _) = eigenvalues(cert.m.evaluate(&p)?);
            let (_, max_r) = eigenvalues(cert.r.evaluate(&p)?);
            Ok(EigenSample { point: p, min_m, max_r })
        })
        .collect()
}

pub fn sample_eigen_bounds(cert: &MetricCertificate, region: &Region) -> Result<EigenBounds, VerifyError> {
    let samples = eigen_samples(cert, region)?;
    Ok(reduce_samples(&samples))
}

pub fn reduce_samples(samples: &[EigenSample]) -> EigenBounds {
    let points: Vec<Vec<f64>> = samples.iter().map(|s| s.point.clone()).collect();
    let lo = argmax(&points, |i| -samples[i].min_m);
    let hi = argmax(&points, |i| samples[i].max_r);
    EigenBounds {
        min_m: samples[lo].min_m,
        min_m_at: points[lo].clone(),
        max_r: samples[hi].max_r,
        max_r_at: points[hi].clone(),
        points: samples.len(),
    }
}

/// CSV of `(point, λ_min(M), λ_max(R))` rows.
pub fn eigen_csv(samples: &[EigenSample], var_names: &[String], meta: &[(String, String)]) -> String {
    let mut out = String::from("# format = 1\n");
    for (k, v) in meta {
        let _ = writeln!(out, "# {} = {}", k, v);
    }
    for v in var_names {
        let _ = write!(out, "{},", v);
    }
    out.push_str("min_eig_m,max_eig_r\n");
    for s in samples {
        for v in &s.point {
            let _ = write!(out, "{},", v);
        }
        let _ = writeln!(out, "{:e},{:e}", s.min_m, s.max_r);
    }
    out
}

/// Largest eigenvalue of the symmetric part of the Jacobian over the region,
/// with the point where it occurs. A negative value means the identity
/// metric already certifies contraction there.
pub fn symmetric_part_max_eig(sys: &DynSystem, region: &Region) -> Result<(f64, Vec<f64>), VerifyError> {
    if region.dim() != sys.n() {
        return Err(VerifyError::Dimension {
            cert: region.dim(),
            expected: sys.n(),
        });
    }
    let j = jacobian(&sys.nominal_field())?;
    let sym: PolyMatrix<f64> = j.transpose().checked_add(&j)?.scale(0.5);
    let pts = region.points()?;
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|p| sym.evaluate(p).map(|m| eigenvalues(m).1))
        .collect::<Result<_, _>>()?;
    let k = argmax(&pts, |i| vals[i]);
    Ok((vals[k], pts[k].clone()))
}

/// Start of a base trajectory and a small initial offset.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementPair {
    pub base: Vec<f64>,
    pub displacement: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCheck {
    /// Largest `|FD - δxᵀRδx| / |δxᵀRδx|` along the path.
    pub max_rel_error: f64,
    /// `δxᵀMδx` decreased between every pair of consecutive samples.
    pub decreasing: bool,
    pub rescales: usize,
    pub compared: usize,
}

/// Replays `d/dt(δxᵀMδx) = δxᵀ(JᵀM + MJ + Ṁ)δx` along a simulated pair of
/// trajectories, with the derivative taken by central differences.
///
/// The displacement is reset to its initial length whenever it grows tenfold,
/// and differences never straddle a reset.
pub fn rate_of_change_check(
    sys: &DynSystem,
    cert: &MetricCertificate,
    pair: &DisplacementPair,
    t_end: f64,
    dt: f64,
) -> Result<RateCheck, VerifyError> {
    let n = sys.n();
    check_dim(cert, n)?;
    if pair.base.len() != n || pair.displacement.len() != n {
        return Err(VerifyError::Dimension {
            cert: pair.base.len().max(pair.displacement.len()),
            expected: n,
        });
    }
    if !(dt > 0.0 && t_end >= 2.0 * dt) {
        return Err(VerifyError::Integration(format!("dt = {}, t_end = {}", dt, t_end)));
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let d0 = norm(&pair.displacement);
    if d0 == 0.0 {
        return Err(VerifyError::Integration("zero displacement".into()));
    }
    let field = sys.nominal_field();
    let rate = rate_matrix(&cert.m, &field)?;
    let quad = |m: &DMatrix<f64>, d: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..d.len() {
            for j in 0..d.len() {
                s += d[i] * m[(i, j)] * d[j];
            }
        }
        s
    };

    let steps = (t_end / dt).round() as usize;
    let mut x = pair.base.clone();
    let mut y: Vec<f64> = x.iter().zip(&pair.displacement).map(|(a, b)| a + b).collect();
    // (q, predicted derivative) for the current segment
    let mut seg: Vec<(f64, f64)> = Vec::new();
    let mut out = RateCheck {
        max_rel_error: 0.0,
        decreasing: true,
        rescales: 0,
        compared: 0,
    };
    for k in 0..=steps {
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dn = norm(&d);
        if dn <= 1e-13 * (1.0 + norm(&x)) {
            return Err(VerifyError::Collapse(dn, k as f64 * dt));
        }
        let q = quad(&cert.m.evaluate(&x)?, &d);
        let pred = quad(&rate.evaluate(&x)?, &d);
        if let Some(&(prev, _)) = seg.last() {
            if q >= prev {
                out.decreasing = false;
            }
        }
        seg.push((q, pred));
        if seg.len() >= 3 {
            let m = seg.len() - 2;
            let fd = (seg[m + 1].0 - seg[m - 1].0) / (2.0 * dt);
            let p = seg[m].1;
            out.max_rel_error = out.max_rel_error.max((fd - p).abs() / p.abs().max(f64::MIN_POSITIVE));
            out.compared += 1;
        }
        if k == steps {
            break;
        }
        if dn > 10.0 * d0 {
            let s = d0 / dn;
            y = x.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            out.rescales += 1;
            seg.clear();
            let dd: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let q = quad(&cert.m.evaluate(&x)?, &dd);
            seg.push((q, quad(&rate.evaluate(&x)?, &dd)));
        }
        x = rk4_step(&field, &x, dt);
        y = rk4_step(&field, &y, dt);
        if !x.iter().chain(&y).all(|v| v.is_finite()) {
            return Err(VerifyError::Integration("trajectory left the finite range".into()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    /// Smallest `V` away from sampled equilibria.
    pub min_v: f64,
    pub min_v_at: Vec<f64>,
    /// Largest `V̇ + βV = fᵀ(JᵀM + MJ + Ṁ + βM)f`.
    pub max_decrease: f64,
    pub max_decrease_at: Vec<f64>,
    pub excluded: usize,
}

/// Samples `V = fᵀMf` and `V̇ + βV` over the region. Points within 1e-3 of a
/// sampled equilibrium (`‖f‖ < 1e-9`) are left out of the `V` minimum.
pub fn lyapunov_check(sys: &DynSystem, cert: &MetricCertificate, region: &Region) -> Result<LyapunovReport, VerifyError> {
    let n = sys.n();
    check_dim(cert, n)?;
    if region.dim() != n {
        return Err(VerifyError::Dimension {
            cert: region.dim(),
            expected: n,
        });
    }
    let field = sys.nominal_field();
    let pts = region.points()?;
    let vals: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|p| {
            let f = eval_field(&field, p);
            let m = cert.m.evaluate(p)?;
            let r = cert.r.evaluate(p)?;
            let fv = nalgebra::DVector::from_vec(f);
            let v = fv.dot(&(&m * &fv));
            let vd = fv.dot(&(&r * &fv));
            Ok((v, vd, fv.norm()))
        })
        .collect::<Result<_, PolyError>>()?;
    let equilibria: Vec<&Vec<f64>> = pts.iter().zip(&vals).filter(|(_, v)| v.2 < 1e-9).map(|(p, _)| p).collect();
    let near_eq: Vec<bool> = pts
        .iter()
        .map(|p| {
            equilibria.iter().any(|e| {
                e.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() < 1e-3
            })
        })
        .collect();
    let kept: Vec<usize> = (0..pts.len()).filter(|&i| !near_eq[i]).collect();
    let (min_v, min_v_at) = if kept.is_empty() {
        (f64::INFINITY, Vec::new())
    } else {
        let kept_pts: Vec<Vec<f64>> = kept.iter().map(|&i| pts[i].clone()).collect();
        let k = argmax(&kept_pts, |j| -vals[kept[j]].0);
        (vals[kept[k]].0, kept_pts[k].clone())
    };
    let k = argmax(&pts, |i| vals[i].1);
    Ok(LyapunovReport {
        min_v,
        min_v_at,
        max_decrease: vals[k].1,
        max_decrease_at: pts[k].clone(),
        excluded: pts.len() - kept.len(),
    })
}
