//! The basis integrals I_k, J_k evaluated on a contour shifted into the upper half plane.
//!
//! On z = x + ic the factor e^{i delta psi(z)} carries e^{-delta(c - c^3/3)} e^{-delta c x^2},
//! so the oscillation is damped and the exponentially small size of the result is
//! factored out exactly. This stays accurate for phases far beyond the direct backend.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::direct::{psi_inverse, DEFAULT_BUDGET};
use super::gk::integrate;
use super::poly::{even_partial_fractions, odd_partial_fractions, parity_part};
use super::{CubicPhaseIntegrand, QuadratureError, QuadratureResult};

/// Below this |delta| the closed forms at delta = 0 are used; the error is O(delta).
const ZERO_DELTA: f64 = 1e-15;
const MAX_PANELS: usize = 200_000;

/// I_k(0) = int_0^inf (1+z^2)^-k dz = (pi/2) (2k-3)!!/(2k-2)!!
pub fn ik_at_zero(k: u32) -> f64 {
    let mut v = PI / 2.0;
    for n in 2..=k {
        v *= (2 * n - 3) as f64 / (2 * n - 2) as f64;
    }
    v
}

fn shift(delta: f64) -> f64 {
    1.0 - (1.0 / delta.sqrt()).min(0.5)
}

/// int_0^inf z^p e^{i delta psi(z)}/(1+z^2)^k along x + ic, divided by e^{-delta(c - c^3/3)}.
/// `p` is 0 for I_k and 1 for J_k. Returns (complex value, error, evaluations).
fn scaled_line_integral(
    k: u32,
    p: u32,
    delta: f64,
    tol: f64,
) -> Result<(Complex64, f64, usize), QuadratureError> {
    let c = shift(delta);
    let a = delta * c;
    let lin = delta * (1.0 - c * c);
    let ki = k as i32;
    let f = |x: f64| {
        let z = Complex64::new(x, c);
        let w = Complex64::new(1.0 + x * x - c * c, 2.0 * c * x);
        let phase = lin * x + delta * x * x * x / 3.0;
        let e = Complex64::from_polar((-a * x * x).exp(), phase);
        let mut v = e * w.powi(-ki);
        if p == 1 {
            v *= z;
        }
        [v.re, v.im]
    };
    // truncation: smaller of the Gaussian and the algebraic tail bounds
    let target = tol / 8.0;
    let mut x_max = 1.0f64;
    loop {
        let gauss = (-a * x_max * x_max).exp() / (2.0 * a * x_max);
        let pw = 2 * ki - p as i32 - 1;
        let alg = if pw > 0 {
            2f64.powi(p as i32) * x_max.powi(-pw) / pw as f64
        } else {
            f64::INFINITY
        };
        if gauss.min(alg) < target {
            break;
        }
        x_max *= 1.25;
        if x_max > 1e9 {
            return Err(QuadratureError::Tail(x_max));
        }
    }
    let h = (1.0 - c).max(1e-300);
    let mut breaks = vec![0.0];
    let mut g = h;
    while g < x_max {
        breaks.push(g);
        g *= 2.0;
    }
    // oscillation panels where the damping is weak
    let total_phase = lin * x_max + delta * x_max.powi(3) / 3.0;
    let n_roots = (total_phase / PI).floor() as usize;
    if n_roots > MAX_PANELS {
        return Err(QuadratureError::Budget {
            evaluations: 0,
            error: f64::INFINITY,
        });
    }
    // phase lin x + delta x^3/3 = n pi  <=>  psi(y) = n pi/d' with y = x sqrt(delta/lin)
    if lin > 0.0 {
        let s = (delta / lin).sqrt();
        let d2 = lin / s;
        for n in 1..=n_roots {
            breaks.push(psi_inverse(n as f64 * PI / d2) / s);
        }
    }
    breaks.push(x_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs().max(h));

    // scale the tolerance to the size of the integrand
    let probe = integrate(&f, &breaks, f64::INFINITY, DEFAULT_BUDGET)?;
    let abs_tol = (tol * probe.l1).max(1e-300) * 0.5;
    let r = integrate(&f, &breaks, abs_tol, DEFAULT_BUDGET)?;
    Ok((
        Complex64::new(r.value[0], r.value[1]),
        r.error + target,
        r.evaluations + probe.evaluations,
    ))
}

fn check_tol(tol: f64) -> Result<(), QuadratureError> {
    if !(1e-13..=1e-3).contains(&tol) {
        return Err(QuadratureError::Tolerance(tol));
    }
    Ok(())
}

/// I_k(delta) = int_0^inf cos(delta (z + z^3/3)) / (1+z^2)^k dz, k >= 1.
pub fn eval_ik(k: u32, delta: f64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    check_tol(tol)?;
    if k < 1 {
        return Err(QuadratureError::Invalid(format!("I_k needs k >= 1, got {k}")));
    }
    let d = delta.abs();
    if d < ZERO_DELTA {
        return Ok(QuadratureResult {
            value: ik_at_zero(k),
            error_estimate: d * 10.0,
            evaluations: 0,
        });
    }
    let c = shift(d);
    let scale = (-d * (c - c * c * c / 3.0)).exp();
    let (v, err, n) = scaled_line_integral(k, 0, d, tol)?;
    Ok(QuadratureResult {
        value: scale * v.re,
        error_estimate: scale * err,
        evaluations: n,
    })
}

/// J_k(delta) = int_0^inf z sin(delta (z + z^3/3)) / (1+z^2)^k dz, k >= 2.
pub fn eval_jk(k: u32, delta: f64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    check_tol(tol)?;
    if k < 2 {
        return Err(QuadratureError::Invalid(format!("J_k needs k >= 2, got {k}")));
    }
    let d = delta.abs();
    if d < ZERO_DELTA {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: d * 10.0,
            evaluations: 0,
        });
    }
    let c = shift(d);
    let scale = (-d * (c - c * c * c / 3.0)).exp();
    let (v, err, n) = scaled_line_integral(k, 1, d, tol)?;
    Ok(QuadratureResult {
        value: delta.signum() * scale * v.im,
        error_estimate: scale * err,
        evaluations: n,
    })
}

/// The same integral as `eval_oscillatory`, assembled from partial fractions in 1 + z^2
/// and the I_k, J_k basis.
pub fn eval_basis(
    integrand: &CubicPhaseIntegrand,
    tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    integrand.check()?;
    check_tol(tol)?;
    let k = integrand.denominator_power as u32;
    let delta = integrand.phase_scale;
    let e = even_partial_fractions(&parity_part(&integrand.cos_numerator, 0));
    let g = odd_partial_fractions(&parity_part(&integrand.sin_numerator, 1));
    let weight: f64 = e.iter().chain(g.iter()).map(|c| c.abs()).sum::<f64>().max(1.0);
    let t = (tol / (2.0 * weight)).max(1e-13);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for (l, &c) in e.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let r = eval_ik(k - l as u32, delta, t)?;
        value += 2.0 * c * r.value;
        error += 2.0 * c.abs() * r.error_estimate;
        evaluations += r.evaluations;
    }
    for (l, &c) in g.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let r = eval_jk(k - l as u32, delta, t)?;
        value += 2.0 * c * r.value;
        error += 2.0 * c.abs() * r.error_estimate;
        evaluations += r.evaluations;
    }
    Ok(QuadratureResult {
        value,
        error_estimate: error,
        evaluations,
    })
}
