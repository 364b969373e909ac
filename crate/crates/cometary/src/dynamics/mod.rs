//! McGehee-coordinate flow near infinity, the Duffing reduction, the numerical
//! Poincare map and an ODE-side evaluation of the Melnikov line integral.

pub mod ode;

use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

use crate::config::CentralConfiguration;
use crate::harmonics::{harmonic_table, HarmonicTable, HarmonicsError};
pub use ode::{integrate, integrate_with, locate_crossing, DenseStep, OdeError, Stats, Trajectory};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("theta0 must be nonzero")]
    ThetaZero,
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("truncation order must be 3, 7 or 9, got {0}")]
    Truncation(u32),
    #[error("negative radicand {0} in the Jacobi inversion")]
    Radicand(f64),
    #[error("outside the convergence region: eps^2 max|a_k| x^2 = {0} >= 1")]
    Convergence(f64),
    #[error("no return to the section within 3 pi (stopped at t = {0})")]
    NoReturn(f64),
    #[error("jacobi constant required")]
    MissingJacobi,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
}

impl From<DynamicsError> for OdeError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Ode(o) => o,
            other => OdeError::Rhs {
                t: f64::NAN,
                msg: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McGeheeState {
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub theta: f64,
}

impl McGeheeState {
    pub fn new(x: f64, y: f64, s: f64, theta: f64) -> Self {
        McGeheeState { x, y, s, theta }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.s, self.theta]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        McGeheeState::new(a[0], a[1], a[2], a[3])
    }

    /// Same state with s in [0, 2 pi).
    pub fn reduced(self) -> Self {
        McGeheeState {
            s: self.s.rem_euclid(2.0 * PI),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarState {
    pub r: f64,
    pub theta_angle: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(rename = "Theta")]
    pub big_theta: f64,
}

impl PolarState {
    /// r = x^-2, R = -sqrt2 y, theta = t - s.
    pub fn from_mcgehee(m: &McGeheeState, t: f64) -> Result<Self, DynamicsError> {
        if !(m.x > 0.0) {
            return Err(DynamicsError::Invalid("x must be positive for a finite radius".into()));
        }
        Ok(PolarState {
            r: m.x.powi(-2),
            theta_angle: t - m.s,
            big_r: -SQRT_2 * m.y,
            big_theta: m.theta,
        })
    }

    pub fn to_mcgehee(&self, t: f64) -> Result<McGeheeState, DynamicsError> {
        if !(self.r > 0.0) {
            return Err(DynamicsError::Invalid("r must be positive".into()));
        }
        Ok(McGeheeState::new(
            self.r.powf(-0.5),
            -self.big_r / SQRT_2,
            t - self.theta_angle,
            self.big_theta,
        ))
    }
}

/// Flow parameters with the harmonic tables of the retained orders precomputed.
#[derive(Debug, Clone)]
pub struct FlowParams {
    pub epsilon: f64,
    pub jacobi_c: Option<f64>,
    pub truncation_order: u32,
    pub config: CentralConfiguration,
    tables: Vec<HarmonicTable>,
    max_radius: f64,
}

impl FlowParams {
    pub fn new(
        epsilon: f64,
        truncation_order: u32,
        config: CentralConfiguration,
    ) -> Result<Self, DynamicsError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(DynamicsError::Epsilon(epsilon));
        }
        if ![3, 7, 9].contains(&truncation_order) {
            return Err(DynamicsError::Truncation(truncation_order));
        }
        let tables = (2..)
            .take_while(|j| 2 * j + 3 <= truncation_order as usize)
            .map(|j| harmonic_table(&config, j))
            .collect::<Result<Vec<_>, _>>()?;
        let max_radius = config.max_radius();
        Ok(FlowParams {
            epsilon,
            jacobi_c: None,
            truncation_order,
            config,
            tables,
            max_radius,
        })
    }

    pub fn with_jacobi(mut self, c: f64) -> Self {
        self.jacobi_c = Some(c);
        self
    }

    pub fn tables(&self) -> &[HarmonicTable] {
        &self.tables
    }

    fn check_region(&self, x: f64) -> Result<(), DynamicsError> {
        let q = self.epsilon.powi(2) * self.max_radius * x * x;
        if q >= 1.0 || !q.is_finite() {
            return Err(DynamicsError::Convergence(q));
        }
        Ok(())
    }

    /// (sum (j+1) eps^2j x^(2j+1) f_j, sqrt2 sum eps^2j x^(2j-1) torque_j): the perturbing
    /// parts of y' and Theta' in tau-time.
    fn perturbation_tau(&self, x: f64, s: f64) -> (f64, f64) {
        let mut fy = 0.0;
        let mut ft = 0.0;
        for t in &self.tables {
            let j = t.j as i32;
            let e = self.epsilon.powi(2 * j);
            fy += (j + 1) as f64 * e * x.powi(2 * j + 1) * t.eval(s);
            ft += SQRT_2 * e * x.powi(2 * j - 1) * t.torque(s);
        }
        (fy, ft)
    }
}

fn check_theta(theta0: f64) -> Result<(), DynamicsError> {
    if theta0 == 0.0 || !theta0.is_finite() {
        return Err(DynamicsError::ThetaZero);
    }
    Ok(())
}

/// Unperturbed homoclinic loop of the Duffing equation.
pub fn homoclinic(tau: f64, theta0: f64) -> Result<(f64, f64), DynamicsError> {
    check_theta(theta0)?;
    let k = SQRT_2 / theta0.abs();
    let sech = 1.0 / tau.cosh();
    Ok((k * sech, -k * tau.tanh() * sech))
}

pub fn duffing_rhs(x: f64, y: f64, theta0: f64) -> (f64, f64) {
    (y, x - theta0 * theta0 * x.powi(3))
}

pub fn hd_value(x: f64, y: f64, theta0: f64) -> f64 {
    0.5 * y * y - 0.5 * x * x + 0.25 * theta0 * theta0 * x.powi(4)
}

/// s(tau) along the homoclinic with s(0) = s0, not reduced mod 2 pi.
pub fn s_closed_form(tau: f64, s0: f64, theta0: f64, epsilon: f64) -> Result<f64, DynamicsError> {
    check_theta(theta0)?;
    let sg = theta0.signum();
    Ok(s0 - sg * 4.0 * (tau / 2.0).tanh().atan()
        + sg * theta0.powi(3) / (24.0 * epsilon.powi(3)) * (9.0 * tau.sinh() + (3.0 * tau).sinh()))
}

/// Time derivative of the state in physical time t.
pub fn rhs_mcgehee_t(state: &McGeheeState, params: &FlowParams) -> Result<McGeheeState, DynamicsError> {
    let McGeheeState { x, y, s, theta } = *state;
    params.check_region(x)?;
    let e = params.epsilon;
    let e3 = e.powi(3);
    let x4 = x.powi(4);
    let mut dy = e3 * (1.0 - theta * theta * x * x) * x4 / SQRT_2;
    let mut dth = 0.0;
    for t in &params.tables {
        let j = t.j as i32;
        let ej = e.powi(2 * j + 3);
        dy += (j + 1) as f64 / SQRT_2 * ej * x.powi(2 * j + 4) * t.eval(s);
        dth += ej * x.powi(2 * j + 2) * t.torque(s);
    }
    Ok(McGeheeState {
        x: e3 * x.powi(3) * y / SQRT_2,
        y: dy,
        s: 1.0 - e3 * theta * x4,
        theta: dth,
    })
}

/// Derivative in the rescaled time d tau/dt = eps^3 x^3/sqrt2 (x > 0).
pub fn rhs_mcgehee_tau(state: &McGeheeState, params: &FlowParams) -> Result<McGeheeState, DynamicsError> {
    let McGeheeState { x, y, s, theta } = *state;
    if !(x > 0.0) {
        return Err(DynamicsError::Invalid("tau-time needs x > 0".into()));
    }
    params.check_region(x)?;
    let (fy, ft) = params.perturbation_tau(x, s);
    Ok(McGeheeState {
        x: y,
        y: (1.0 - theta * theta * x * x) * x + fy,
        s: SQRT_2 * (params.epsilon.powi(-3) - theta * x.powi(4)) / x.powi(3),
        theta: ft,
    })
}

/// C = H_eps - Theta in McGehee variables with the retained orders.
pub fn jacobi_value(state: &McGeheeState, params: &FlowParams) -> f64 {
    let McGeheeState { x, y, s, theta } = *state;
    let e = params.epsilon;
    let mut h = e.powi(3) * (y * y - x * x + 0.5 * theta * theta * x.powi(4));
    for t in &params.tables {
        let j = t.j as i32;
        h -= e.powi(2 * j + 3) * x.powi(2 * j + 2) * t.eval(s);
    }
    h - theta
}

/// Negative branch of the Jacobi inversion, Kepler part only. The rationalized form
/// -2w/(1 + sqrt(1 + 2uw)) equals (1 - sqrt(1 + 2uw))/u without the cancellation at small u.
pub fn theta_from_jacobi(x: f64, y: f64, c: f64, epsilon: f64) -> Result<f64, DynamicsError> {
    let e3 = epsilon.powi(3);
    let u = e3 * x.powi(4);
    let w = c + e3 * (x * x - y * y);
    let rad = 1.0 + 2.0 * u * w;
    if rad < 0.0 {
        return Err(DynamicsError::Radicand(rad));
    }
    Ok(-2.0 * w / (1.0 + rad.sqrt()))
}

/// Integrate the t-flow and return the trajectory.
pub fn integrate_t(
    state0: McGeheeState,
    t_span: (f64, f64),
    params: &FlowParams,
    tol: f64,
) -> Result<Trajectory<4>, DynamicsError> {
    Ok(integrate(
        |_, y: &[f64; 4]| Ok(rhs_mcgehee_t(&McGeheeState::from_array(*y), params)?.to_array()),
        t_span.0,
        state0.to_array(),
        t_span.1,
        tol,
    )?)
}

/// Integrate the tau-flow and return the trajectory.
pub fn integrate_tau(
    state0: McGeheeState,
    tau_span: (f64, f64),
    params: &FlowParams,
    tol: f64,
) -> Result<Trajectory<4>, DynamicsError> {
    Ok(integrate(
        |_, y: &[f64; 4]| Ok(rhs_mcgehee_tau(&McGeheeState::from_array(*y), params)?.to_array()),
        tau_span.0,
        state0.to_array(),
        tau_span.1,
        tol,
    )?)
}

/// CSV with columns (t or tau, x, y, s, theta, H_D).
pub fn trajectory_csv(tr: &Trajectory<4>, time_label: &str) -> String {
    let mut out = format!("{time_label},x,y,s,theta,H_D\n");
    for (t, y) in tr.t.iter().zip(&tr.y) {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            t,
            y[0],
            y[1],
            y[2],
            y[3],
            hd_value(y[0], y[1], y[3])
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareReturn {
    pub x1: f64,
    pub y1: f64,
    pub return_time: f64,
}

/// One return to the section s = s0 (mod 2 pi) of the reduced flow, with Theta eliminated
/// through the Jacobi constant.
pub fn poincare_numeric(
    x0: f64,
    y0: f64,
    s0: f64,
    params: &FlowParams,
    tol: f64,
) -> Result<PoincareReturn, DynamicsError> {
    let c = params.jacobi_c.ok_or(DynamicsError::MissingJacobi)?;
    if !(0.0..=0.1).contains(&x0) {
        return Err(DynamicsError::Invalid(format!("x0 = {x0} outside [0, 0.1]")));
    }
    let eps = params.epsilon;
    let rhs = |_: f64, v: &[f64; 3]| -> Result<[f64; 3], OdeError> {
        let theta = theta_from_jacobi(v[0], v[1], c, eps)?;
        let d = rhs_mcgehee_t(&McGeheeState::new(v[0], v[1], v[2], theta), params)?;
        Ok([d.x, d.y, d.s])
    };
    let target = s0 + 2.0 * PI;
    let mut hit: Option<(f64, [f64; 3])> = None;
    let (t_end, _, _) = integrate_with(rhs, 0.0, [x0, y0, s0], 3.0 * PI, tol, |step| {
        if let Some(t) = locate_crossing(step, |v| v[2] - target, 1e-13) {
            hit = Some((t, step.eval(t)));
            return false;
        }
        true
    })?;
    let (t, v) = hit.ok_or(DynamicsError::NoReturn(t_end))?;
    Ok(PoincareReturn {
        x1: v[0],
        y1: v[1],
        return_time: t,
    })
}

/// Detailed result of the ODE-side Melnikov integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplittingResult {
    pub value: f64,
    /// Symmetric cut actually used, at most T.
    pub tau_cut: f64,
    pub steps: usize,
}

/// Bound on the oscillating part of dH_D/dtau at tau divided by the slowest phase rate.
fn tail_bound(tau: f64, theta0: f64, params: &FlowParams) -> f64 {
    let (x, y) = homoclinic(tau, theta0).unwrap();
    let e = params.epsilon;
    let mut env = 0.0;
    for t in &params.tables {
        let j = t.j as i32;
        let amp: f64 = t.entries.iter().filter(|en| en.m > 0).map(|en| en.a.abs() + en.b.abs()).sum();
        let mmax = t.entries.iter().map(|en| en.m).max().unwrap_or(0) as f64;
        let ej = e.powi(2 * j);
        env += amp
            * ej
            * ((j + 1) as f64 * y.abs() * x.powi(2 * j + 1)
                + 0.5 * theta0.abs() * x.powi(4) * SQRT_2 * x.powi(2 * j - 1) * mmax);
    }
    let rate = (SQRT_2 * (e.powi(-3) - theta0 * x.powi(4)) / x.powi(3)).abs().max(1.0);
    env / rate
}

/// The Melnikov line integral of dH_D/dtau along the unperturbed homoclinic, with s carried
/// as an ODE variable, at truncation 9. The cut |tau| <= T is shortened to where the
/// oscillating tail falls below 1e-16; the non-oscillating part is odd and cancels exactly
/// on the symmetric interval.
pub fn splitting_measure_detail(
    s0: f64,
    theta0: f64,
    epsilon: f64,
    config: &CentralConfiguration,
    t_max: f64,
    tol: f64,
) -> Result<SplittingResult, DynamicsError> {
    check_theta(theta0)?;
    if !(t_max >= 15.0) {
        return Err(DynamicsError::Invalid(format!("T = {t_max} < 15")));
    }
    let params = FlowParams::new(epsilon, 9, config.clone())?;
    let mut tau_cut = 1.0;
    while tau_cut < t_max && tail_bound(tau_cut, theta0, &params) > 1e-16 {
        tau_cut += 0.05;
    }
    let tau_cut = tau_cut.min(t_max);
    let rhs = |tau: f64, v: &[f64; 2]| -> Result<[f64; 2], OdeError> {
        let (x, y) = homoclinic(tau, theta0)?;
        let (fy, ft) = params.perturbation_tau(x, v[0]);
        let ds = SQRT_2 * (epsilon.powi(-3) - theta0 * x.powi(4)) / x.powi(3);
        Ok([ds, y * fy + 0.5 * theta0 * x.powi(4) * ft])
    };
    let (_, fwd, sf) = integrate_with(rhs, 0.0, [s0, 0.0], tau_cut, tol, |_| true)?;
    let (_, bwd, sb) = integrate_with(rhs, 0.0, [s0, 0.0], -tau_cut, tol, |_| true)?;
    Ok(SplittingResult {
        value: fwd[1] - bwd[1],
        tau_cut,
        steps: sf.accepted + sb.accepted,
    })
}

pub fn splitting_measure(
    s0: f64,
    theta0: f64,
    epsilon: f64,
    config: &CentralConfiguration,
    t_max: f64,
) -> Result<f64, DynamicsError> {
    Ok(splitting_measure_detail(s0, theta0, epsilon, config, t_max, 1e-12)?.value)
}

/// Experimental nonlinear shooting: the full tau-flow is integrated from the homoclinic at
/// -tau_cut forward and at +tau_cut backward to tau = 0, and the difference of
/// H_D(x, y, Theta) between the two arrivals is returned. The starting points lie on the
/// unperturbed loop only, so agreement with the line integral is first order at best.
pub fn splitting_shooting(
    s0: f64,
    theta0: f64,
    epsilon: f64,
    config: &CentralConfiguration,
    t_max: f64,
    tol: f64,
) -> Result<SplittingResult, DynamicsError> {
    check_theta(theta0)?;
    if !(t_max >= 15.0) {
        return Err(DynamicsError::Invalid(format!("T = {t_max} < 15")));
    }
    let params = FlowParams::new(epsilon, 9, config.clone())?;
    let mut tau_cut = 1.0;
    while tau_cut < t_max && tail_bound(tau_cut, theta0, &params) > 1e-16 {
        tau_cut += 0.05;
    }
    let tau_cut = tau_cut.min(t_max);
    let rhs = |_: f64, v: &[f64; 4]| -> Result<[f64; 4], OdeError> {
        Ok(rhs_mcgehee_tau(&McGeheeState::from_array(*v), &params)?.to_array())
    };
    let arrive = |from: f64| -> Result<([f64; 4], usize), DynamicsError> {
        let (x, y) = homoclinic(from, theta0)?;
        let s = s_closed_form(from, s0, theta0, epsilon)?;
        let (_, end, st) = integrate_with(rhs, from, [x, y, s, theta0], 0.0, tol, |_| true)?;
        Ok((end, st.accepted))
    };
    let (u, nu) = arrive(-tau_cut)?;
    let (st, ns) = arrive(tau_cut)?;
    Ok(SplittingResult {
        value: hd_value(u[0], u[1], u[3]) - hd_value(st[0], st[1], st[3]),
        tau_cut,
        steps: nu + ns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::build_rp3bp;

    #[test]
    fn homoclinic_basics() {
        let (x, y) = homoclinic(0.0, 2.0).unwrap();
        assert_eq!((x, y), (SQRT_2 / 2.0, 0.0));
        let (x, y) = homoclinic(20.0, 1.0).unwrap();
        assert!(x < 1e-8 && y.abs() < 1e-8);
        assert!(homoclinic(0.0, 0.0).is_err());
    }

    #[test]
    fn jacobi_inversion_limits() {
        assert_eq!(theta_from_jacobi(0.0, 0.0, 1.3, 0.5).unwrap(), -1.3);
        // exact inverse of the Kepler part of C
        let (x, y, eps, th): (f64, f64, f64, f64) = (0.4, 0.2, 0.5, -0.8);
        let e3: f64 = eps * eps * eps;
        let c = e3 * (y * y - x * x + 0.5 * th * th * x.powi(4)) - th;
        assert!((theta_from_jacobi(x, y, c, eps).unwrap() - th).abs() < 1e-14);
        assert!(theta_from_jacobi(5.0, 0.0, -100.0, 0.9).is_err());
    }

    #[test]
    fn origin_is_the_periodic_orbit() {
        let p = FlowParams::new(0.5, 9, build_rp3bp(0.3).unwrap()).unwrap();
        let d = rhs_mcgehee_t(&McGeheeState::new(0.0, 0.0, 1.0, 0.7), &p).unwrap();
        assert_eq!(d, McGeheeState::new(0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn truncation_validation() {
        let c = build_rp3bp(0.3).unwrap();
        assert!(FlowParams::new(0.5, 5, c.clone()).is_err());
        assert!(FlowParams::new(1.5, 9, c.clone()).is_err());
        assert_eq!(FlowParams::new(0.5, 3, c.clone()).unwrap().tables().len(), 0);
        assert_eq!(FlowParams::new(0.5, 9, c).unwrap().tables().len(), 2);
    }

    #[test]
    fn polar_round_trip() {
        let m = McGeheeState::new(0.3, -0.1, 1.2, 0.9);
        let p = PolarState::from_mcgehee(&m, 2.0).unwrap();
        let back = p.to_mcgehee(2.0).unwrap();
        assert!((back.x - m.x).abs() < 1e-15 && (back.y - m.y).abs() < 1e-15);
        assert!((back.s - m.s).abs() < 1e-15);
    }
}
