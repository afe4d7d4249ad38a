//! Fixed-step RK4 trajectories and the coupled-oscillator scenarios.

mod output;

pub use output::{trajectory_csv, trajectory_svg};

use thiserror::Error;

use crate::contraction::{eval_field, ContractionError, DynSystem, Param, ParamKind};
use crate::poly::{parse_polynomial, Polynomial};

/// States with a norm above this are treated as a blow-up.
pub const BLOW_UP: f64 = 1e6;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("step must be positive and no longer than the horizon (dt = {dt}, t_end = {t_end})")]
    BadStep { dt: f64, t_end: f64 },
    #[error("initial state has {got} entries, the field has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("settle window {window} exceeds the trajectory span {span}")]
    Window { window: f64, span: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// The path was cut short by a non-finite or huge state.
    pub blew_up: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// State at the sample closest to `t`.
    pub fn at(&self, t: f64) -> &[f64] {
        let dt = if self.times.len() > 1 { self.times[1] - self.times[0] } else { 1.0 };
        let k = ((t - self.times[0]) / dt).round().clamp(0.0, (self.len() - 1) as f64) as usize;
        &self.states[k]
    }
}

pub fn rk4_step(field: &[Polynomial], x: &[f64], dt: f64) -> Vec<f64> {
    let axpy = |a: &[f64], h: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + h * b).collect() };
    let k1 = eval_field(field, x);
    let k2 = eval_field(field, &axpy(x, 0.5 * dt, &k1));
    let k3 = eval_field(field, &axpy(x, 0.5 * dt, &k2));
    let k4 = eval_field(field, &axpy(x, dt, &k3));
    (0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates `ẋ = field(x)` from `x0` over `[0, t_end]`. A negative `dt`
/// runs backwards in time.
pub fn integrate(field: &[Polynomial], x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory, SimError> {
    if dt == 0.0 || !dt.is_finite() || t_end.abs() < dt.abs() || t_end * dt < 0.0 {
        return Err(SimError::BadStep { dt, t_end });
    }
    if x0.len() != field.len() {
        return Err(SimError::Dimension {
            expected: field.len(),
            got: x0.len(),
        });
    }
    let steps = (t_end / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for k in 1..=steps {
        x = rk4_step(field, &x, dt);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > BLOW_UP {
            return Ok(Trajectory {
                times,
                states,
                blew_up: true,
            });
        }
        times.push(k as f64 * dt);
        states.push(x.clone());
    }
    Ok(Trajectory {
        times,
        states,
        blew_up: false,
    })
}

/// Simulates `sys` with the named parameters and inputs overridden.
pub fn simulate(
    sys: &DynSystem,
    overrides: &[(String, f64)],
    x0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, crate::Error> {
    let field = sys.field_with(&sys.values_with(overrides)?);
    Ok(integrate(&field, x0, t_end, dt)?)
}

/// Van der Pol-type oscillator constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub alpha: f64,
    pub omega: f64,
    pub k: f64,
}

impl Oscillator {
    /// `ẋ₁ = x₂, ẋ₂ = -α(x₁² + k)x₂ - ω²x₁`.
    pub fn system(&self) -> DynSystem {
        let names = vec!["x1".to_string(), "x2".to_string()];
        let f2 = format!(
            "-({a})*x1^2*x2 - ({ak})*x2 - ({w2})*x1",
            a = self.alpha,
            ak = self.alpha * self.k,
            w2 = self.omega * self.omega
        );
        let field = vec![
            parse_polynomial("x2", &names).expect("static expression"),
            parse_polynomial(&f2, &names).expect("generated expression"),
        ];
        DynSystem::autonomous("van-der-pol", names, field).expect("well-formed oscillator")
    }

    /// Oscillator driven through `αηu` with the damping raised by `η`; the
    /// first state is input-free.
    pub fn driven(&self, eta: f64) -> DynSystem {
        let names: Vec<String> = ["y1", "y2", "u"].iter().map(|s| s.to_string()).collect();
        let f2 = format!(
            "-({a})*y1^2*y2 - ({akn})*y2 - ({w2})*y1 + ({ae})*u",
            a = self.alpha,
            akn = self.alpha * (self.k + eta),
            w2 = self.omega * self.omega,
            ae = self.alpha * eta
        );
        let field = vec![
            parse_polynomial("y2", &names).expect("static expression"),
            parse_polynomial(&f2, &names).expect("generated expression"),
        ];
        let input = Param {
            name: "u".into(),
            nominal: 0.0,
            bounds: None,
            kind: ParamKind::Input,
        };
        DynSystem::new("driven-oscillator", names[..2].to_vec(), vec![input], field, Some(1))
            .expect("well-formed driven oscillator")
    }
}

/// Master oscillator `x` driving a copy `y` through `αηx₂`.
pub fn build_unidirectional_coupling(osc: Oscillator, eta: f64) -> Result<DynSystem, ContractionError> {
    if !(osc.alpha > 0.0 && osc.omega > 0.0) {
        return Err(ContractionError::Invalid(format!(
            "coupling needs alpha > 0 and omega > 0, got {} and {}",
            osc.alpha, osc.omega
        )));
    }
    let names: Vec<String> = ["x1", "x2", "y1", "y2"].iter().map(|s| s.to_string()).collect();
    let a = osc.alpha;
    let w2 = osc.omega * osc.omega;
    let eqs = [
        "x2".to_string(),
        format!("-({a})*x1^2*x2 - ({})*x2 - ({w2})*x1", a * osc.k),
        "y2".to_string(),
        format!("-({a})*y1^2*y2 - ({})*y2 - ({w2})*y1 + ({})*x2", a * (osc.k + eta), a * eta),
    ];
    let field = eqs
        .iter()
        .map(|e| parse_polynomial(e, &names))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ContractionError::Invalid(e.to_string()))?;
    DynSystem::autonomous("coupled-oscillators", names, field)
}

/// `‖(x₁, x₂) - (y₁, y₂)‖` at every sample of a coupled trajectory.
pub fn sync_distance(traj: &Trajectory) -> Result<Vec<f64>, SimError> {
    if let Some(s) = traj.states.first() {
        if s.len() != 4 {
            return Err(SimError::Dimension {
                expected: 4,
                got: s.len(),
            });
        }
    }
    Ok(traj
        .states
        .iter()
        .map(|s| ((s[0] - s[2]).powi(2) + (s[1] - s[3]).powi(2)).sqrt())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settle {
    pub settled: bool,
    /// Largest peak-to-peak variation of any state over the window.
    pub drift: f64,
}

/// Has the trajectory come to rest over its final `window` seconds?
pub fn settle_check(traj: &Trajectory, window: f64, tol: f64) -> Result<Settle, SimError> {
    let span = match (traj.times.first(), traj.times.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    if window > span {
        return Err(SimError::Window { window, span });
    }
    let t0 = traj.times.last().copied().unwrap_or(0.0) - window;
    let start = traj.times.partition_point(|&t| t < t0 - 1e-12);
    let n = traj.states.first().map_or(0, Vec::len);
    let mut drift: f64 = 0.0;
    for i in 0..n {
        let (lo, hi) = traj.states[start..]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[i]), hi.max(s[i])));
        drift = drift.max(hi - lo);
    }
    Ok(Settle {
        settled: !traj.blew_up && drift <= tol,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> Vec<Polynomial> {
        vec![parse_polynomial("-x", &["x".to_string()]).unwrap()]
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate(&decay(), &[1.0], 1.0, 1e-3).unwrap();
        assert!((tr.last()[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(tr.len(), 1001);
    }

    #[test]
    fn blow_up_truncates() {
        let f = vec![parse_polynomial("x^2", &["x".to_string()]).unwrap()];
        let tr = integrate(&f, &[1.0], 5.0, 1e-3).unwrap();
        assert!(tr.blew_up);
        assert!(tr.times.last().unwrap() < &1.01);
    }

    #[test]
    fn coupling_without_eta_decouples() {
        let sys = build_unidirectional_coupling(
            Oscillator {
                alpha: 1.0,
                omega: 1.0,
                k: -1.0,
            },
            0.0,
        )
        .unwrap();
        assert_eq!(sys.field[3].remap_vars(4, &[2, 3, 0, 1]).unwrap(), sys.field[1]);
    }

    #[test]
    fn constant_system_is_settled() {
        let f = vec![Polynomial::zero(1)];
        let tr = integrate(&f, &[2.0], 1.0, 0.1).unwrap();
        let s = settle_check(&tr, 0.5, 1e-12).unwrap();
        assert!(s.settled);
        assert_eq!(s.drift, 0.0);
    }
}
