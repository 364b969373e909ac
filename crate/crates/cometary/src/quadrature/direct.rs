//! Direct real-line quadrature of the cubic-phase integrals.
//!
//! The integral over the real line is folded onto [0, inf), split at the phase roots
//! on [0, Z], and the tail [Z, inf) is summed by repeated integration by parts.

use std::f64::consts::{FRAC_PI_2, PI};

use super::gk::integrate;
use super::poly::{parity_part, rational};
use super::{CubicPhaseIntegrand, QuadratureError, QuadratureResult};

pub const DEFAULT_BUDGET: usize = 10_000_000;
pub const MAX_DIRECT_DELTA: f64 = 1e3;
const ZERO_DELTA: f64 = 1e-40;
const MAX_TAIL_TERMS: usize = 40;

fn psi(z: f64) -> f64 {
    z + z * z * z / 3.0
}

/// Positive root of z + z^3/3 = c.
pub(crate) fn psi_inverse(c: f64) -> f64 {
    // z^3 + 3z - 3c = 0, Cardano with product of cube roots equal to -1
    let t = 1.5 * c;
    let a = (t + (t * t + 1.0).sqrt()).cbrt();
    let mut z = a - 1.0 / a;
    for _ in 0..3 {
        let f = psi(z) - c;
        z -= f / (1.0 + z * z);
    }
    z
}

/// A complex polynomial over (1+z^2)^m, stored as separate real and imaginary parts.
#[derive(Debug, Clone)]
struct TailTerm {
    re: Vec<f64>,
    im: Vec<f64>,
    m: i32,
}

impl TailTerm {
    fn next(&self) -> TailTerm {
        // d/dz [Q / (1+z^2)^(m+1)] = [Q'(1+z^2) - 2(m+1) z Q] / (1+z^2)^(m+2)
        let step = |q: &[f64]| {
            let mut out = vec![0.0; q.len() + 1];
            for (i, &c) in q.iter().enumerate() {
                if i >= 1 {
                    out[i - 1] += i as f64 * c;
                    out[i + 1] += i as f64 * c;
                }
                out[i + 1] -= 2.0 * (self.m + 1) as f64 * c;
            }
            out
        };
        TailTerm {
            re: step(&self.re),
            im: step(&self.im),
            m: self.m + 2,
        }
    }

    fn eval(&self, z: f64) -> (f64, f64) {
        (rational(&self.re, self.m, z), rational(&self.im, self.m, z))
    }

    /// Bound on the integral of |Q|/(1+z^2)^m over [z, inf).
    fn l1_tail(&self, z: f64) -> f64 {
        let n = self.re.len().max(self.im.len());
        let mut s = 0.0;
        for i in 0..n {
            let a = self.re.get(i).copied().unwrap_or(0.0);
            let b = self.im.get(i).copied().unwrap_or(0.0);
            let c = a.hypot(b);
            if c == 0.0 {
                continue;
            }
            let p = 2 * self.m - i as i32 - 1;
            if p <= 0 {
                return f64::INFINITY;
            }
            s += c * z.powi(-p) / p as f64;
        }
        s
    }
}

/// Asymptotic tail of Re int_Z^inf (Ce - i So)/(1+z^2)^k e^{i delta psi} dz.
/// Returns (value, remainder bound, terms) or None if the series cannot reach `tol`.
fn tail_series(
    ce: &[f64],
    so: &[f64],
    k: i32,
    delta: f64,
    z: f64,
    tol: f64,
) -> Option<(f64, f64, usize)> {
    let mut h = TailTerm {
        re: ce.to_vec(),
        im: so.iter().map(|c| -c).collect(),
        m: k,
    };
    let (sp, cp) = (delta * psi(z)).sin_cos();
    let dpsi = 1.0 + z * z;
    // running factor (-1/(i delta))^n as a complex number
    let mut fac: (f64, f64) = (1.0, 0.0);
    let mut sum = 0.0;
    let mut last_bound = f64::INFINITY;
    for n in 0..MAX_TAIL_TERMS {
        let bound = h.l1_tail(z) * fac.0.hypot(fac.1);
        if bound < tol {
            return Some((sum, bound, n));
        }
        if bound > last_bound {
            return None;
        }
        last_bound = bound;
        // term: fac * [-h(Z) e^{i delta psi(Z)} / (i delta psi'(Z))]
        let (hr, hi) = h.eval(z);
        let er = hr * cp - hi * sp;
        let ei = hr * sp + hi * cp;
        // divide by i delta psi': (er + i ei)/(i d) = (ei - i er)/d
        let d = delta * dpsi;
        let (tr, ti) = (-ei / d, er / d);
        sum += fac.0 * tr - fac.1 * ti;
        // fac *= -1/(i delta) = i/delta
        fac = (-fac.1 / delta, fac.0 / delta);
        h = h.next();
    }
    None
}

/// Direct quadrature with an optional truncation point override for the tail split.
pub fn eval_oscillatory_with_cut(
    integrand: &CubicPhaseIntegrand,
    tol: f64,
    cut: Option<f64>,
) -> Result<QuadratureResult, QuadratureError> {
    integrand.check()?;
    if !(1e-13..=1e-3).contains(&tol) {
        return Err(QuadratureError::Tolerance(tol));
    }
    let delta = integrand.phase_scale;
    if delta.abs() > MAX_DIRECT_DELTA {
        return Err(QuadratureError::PhaseTooLarge(delta));
    }
    let k = integrand.denominator_power as i32;
    // fold onto [0, inf): even part of the cosine numerator, odd part of the sine one
    let ce: Vec<f64> = parity_part(&integrand.cos_numerator, 0)
        .iter()
        .map(|c| 2.0 * c)
        .collect();
    let so: Vec<f64> = parity_part(&integrand.sin_numerator, 1)
        .iter()
        .map(|c| 2.0 * c)
        .collect();

    if delta.abs() < ZERO_DELTA {
        // z = tan t turns the integral into a smooth one on [0, pi/2]
        let f = |t: f64| {
            // sum_i ce_i sin^i t cos^(2k-2-i) t
            let (s, c) = t.sin_cos();
            let v: f64 = ce
                .iter()
                .enumerate()
                .filter(|(_, &q)| q != 0.0)
                .map(|(i, &q)| q * s.powi(i as i32) * c.powi(2 * k - 2 - i as i32))
                .sum();
            [v, 0.0]
        };
        let breaks: Vec<f64> = (0..=8).map(|i| FRAC_PI_2 * i as f64 / 8.0).collect();
        let r = integrate(&f, &breaks, tol, DEFAULT_BUDGET)?;
        return Ok(QuadratureResult {
            value: r.value[0],
            error_estimate: r.error,
            evaluations: r.evaluations,
        });
    }

    let ad = delta.abs();
    let tail_tol = tol / 4.0;
    let (z_cut, tail, tail_bound, terms) = match cut {
        Some(z) => {
            let (t, b, n) =
                tail_series(&ce, &so, k, delta, z, tail_tol).ok_or(QuadratureError::Tail(z))?;
            (z, t, b, n)
        }
        None => {
            let mut z = 2f64.max((64.0 / ad).cbrt());
            loop {
                if let Some((t, b, n)) = tail_series(&ce, &so, k, delta, z, tail_tol) {
                    break (z, t, b, n);
                }
                z *= 2.0;
                if z > 1e8 {
                    return Err(QuadratureError::Tail(z));
                }
            }
        }
    };

    // panel boundaries at the phase roots, plus a geometric ladder for the algebraic decay
    let mut breaks = vec![0.0];
    let n_roots = (ad * psi(z_cut) / PI).floor() as usize;
    for n in 1..=n_roots {
        breaks.push(psi_inverse(n as f64 * PI / ad));
    }
    let mut g = 1.0;
    while g < z_cut {
        breaks.push(g);
        g *= 2.0;
    }
    breaks.push(z_cut);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));

    let f = |z: f64| {
        let (s, c) = (delta * psi(z)).sin_cos();
        [rational(&ce, k, z) * c + rational(&so, k, z) * s, 0.0]
    };
    let body = integrate(&f, &breaks, tol - tail_tol, DEFAULT_BUDGET)?;
    Ok(QuadratureResult {
        value: body.value[0] + tail,
        error_estimate: body.error + tail_bound,
        evaluations: body.evaluations + 2 * terms,
    })
}

/// Integral over the real line of [P cos(delta psi) + Q sin(delta psi)]/(1+z^2)^k.
pub fn eval_oscillatory(
    integrand: &CubicPhaseIntegrand,
    tol: f64,
) -> Result<QuadratureResult, QuadratureError> {
    eval_oscillatory_with_cut(integrand, tol, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(cos: Vec<f64>, sin: Vec<f64>, k: usize, delta: f64) -> CubicPhaseIntegrand {
        CubicPhaseIntegrand::new(cos, sin, k, delta).unwrap()
    }

    #[test]
    fn arctangent_integral() {
        let r = eval_oscillatory(&simple(vec![1.0], vec![], 1, 0.0), 1e-12).unwrap();
        assert!((r.value - PI).abs() < 1e-12);
    }

    #[test]
    fn psi_inverse_roundtrip() {
        for &c in &[1e-6, 0.3, 1.0, 17.0, 1e4] {
            let z = psi_inverse(c);
            assert!((psi(z) - c).abs() <= 1e-13 * c.max(1.0));
        }
    }

    #[test]
    fn known_fourier_transform() {
        // brute trapezoid sum on a fine grid; the tail beyond 40 is below 1e-12
        let d = 0.7;
        let r = eval_oscillatory(&simple(vec![1.0], vec![], 4, d), 1e-12).unwrap();
        let n = 400_000;
        let h = 40.0 / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let z = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += w * (d * psi(z)).cos() / (1.0 + z * z).powi(4);
        }
        s *= 2.0 * h;
        assert!((r.value - s).abs() < 1e-8, "{} vs {}", r.value, s);
    }

    #[test]
    fn refuses_large_phase() {
        assert!(matches!(
            eval_oscillatory(&simple(vec![1.0], vec![], 1, 2e3), 1e-10),
            Err(QuadratureError::PhaseTooLarge(_))
        ));
    }
}
