//! Large-phase estimates: I_k asymptotics, leading Melnikov terms for both signs of Theta0,
//! Fourier-coefficient scalings and the remainder threshold.

use serde::Serialize;
use std::f64::consts::PI;

use crate::config::CentralConfiguration;
use crate::harmonics::{c_coeffs, d_coeffs};
use crate::melnikov::MelnikovError;
use crate::quadrature::{eval_ik, QuadratureError};

fn double_factorial(n: i64) -> f64 {
    let mut r = 1.0;
    let mut k = n;
    while k > 1 {
        r *= k as f64;
        k -= 2;
    }
    r
}

/// Leading term of I_k(delta) for large positive delta.
pub fn ik_asymptotic(k: u32, delta: f64) -> f64 {
    let e = (-2.0 * delta / 3.0).exp();
    if k % 2 == 1 {
        let n = ((k + 1) / 2) as i32;
        e * PI * delta.powi(n - 1) / (2f64.powi(n + 1) * double_factorial(2 * n as i64 - 2))
    } else {
        let n = (k / 2) as i32;
        e * PI.sqrt() * delta.powf(n as f64 - 0.5)
            / (2f64.powi(n + 1) * double_factorial(2 * n as i64 - 1))
    }
}

/// J_{k+2}(delta) through the recurrence delta/(2(k+1)) I_k(delta).
pub fn jk_from_ik(k: u32, delta: f64, tol: f64) -> Result<f64, QuadratureError> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(delta / (2.0 * (k as f64 + 1.0)) * eval_ik(k, delta, tol)?.value)
}

fn nonzero(theta0: f64) -> Result<(), MelnikovError> {
    if theta0 == 0.0 {
        Err(MelnikovError::ThetaZero)
    } else {
        Ok(())
    }
}

/// Leading form of eps^4 M4.
pub fn m4_leading(
    s0: f64,
    theta0: f64,
    epsilon: f64,
    config: &CentralConfiguration,
) -> Result<f64, MelnikovError> {
    nonzero(theta0)?;
    let (_, c2, c3) = c_coeffs(config);
    let f = c2 * (2.0 * s0).sin() - c3 * (2.0 * s0).cos();
    let r = theta0.powi(3) / epsilon.powi(3);
    let amp = if theta0 > 0.0 {
        4.0 * PI.sqrt() / 3.0 * epsilon.powf(-3.5) * theta0.powf(1.5) * (-2.0 * r / 3.0).exp()
    } else {
        5.0 * PI / 8.0 * epsilon.powi(-2) * (2.0 * r / 3.0).exp()
    };
    Ok(amp * f)
}

/// Leading form of eps^6 M6, both the s0 and 3 s0 channels.
pub fn m6_leading(
    s0: f64,
    theta0: f64,
    epsilon: f64,
    config: &CentralConfiguration,
) -> Result<f64, MelnikovError> {
    nonzero(theta0)?;
    let (d1, d2, d3, d4) = d_coeffs(config);
    let f1 = d2 * s0.cos() - d1 * s0.sin();
    let f3 = d4 * (3.0 * s0).cos() - d3 * (3.0 * s0).sin();
    let r = theta0.powi(3) / epsilon.powi(3);
    if theta0 > 0.0 {
        let a1 = -PI.sqrt() / (12.0 * 2f64.sqrt())
            * epsilon.powf(-1.5)
            * theta0.powf(-0.5)
            * (-r / 3.0).exp();
        let a3 = -9.0 * (3.0 * PI).sqrt() / (5.0 * 2f64.sqrt())
            * epsilon.powf(-4.5)
            * theta0.powf(2.5)
            * (-r).exp();
        Ok(a1 * f1 + a3 * f3)
    } else {
        let a1 = -5.0 * PI / 128.0 * theta0.powi(-2) * (r / 3.0).exp();
        let a3 = 63.0 * PI / 64.0 * epsilon.powi(-3) * theta0 * r.exp();
        Ok(a1 * f1 + a3 * f3)
    }
}

/// alpha_k cos k s0 + beta_k sin k s0 with alpha_k = eps^p e^{-k Theta0^3/(3 eps^3)} (A_k + O(eps)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierEstimate {
    pub k: u32,
    /// Leading alpha_k(eps), when the constant A_k is known.
    pub alpha_leading: Option<f64>,
    pub beta_leading: Option<f64>,
    /// (A_k, B_k) when known.
    pub constants: Option<(f64, f64)>,
    pub epsilon_power: f64,
    /// Coefficient of Theta0^3/eps^3 in the (negative) exponent.
    pub exponential_rate: f64,
}

pub fn fourier_estimate(
    k: u32,
    theta0: f64,
    epsilon: f64,
    config: &CentralConfiguration,
) -> Result<FourierEstimate, MelnikovError> {
    if !(theta0 > 0.0) {
        return Err(MelnikovError::Invalid(
            "Fourier estimates are stated for Theta0 > 0".into(),
        ));
    }
    if k == 0 {
        return Err(MelnikovError::Invalid("harmonic k must be >= 1".into()));
    }
    let epsilon_power = if k == 1 { -1.5 } else { -(k as f64) - 1.5 };
    let exponential_rate = k as f64 / 3.0;
    let constants = match k {
        1 => {
            let (d1, d2, _, _) = d_coeffs(config);
            let c = PI.sqrt() / (12.0 * 2f64.sqrt()) * theta0.powf(-0.5);
            Some((-c * d2, c * d1))
        }
        2 => {
            let (_, c2, c3) = c_coeffs(config);
            let c = 4.0 * PI.sqrt() / 3.0 * theta0.powf(1.5);
            Some((c * c3, -c * c2))
        }
        _ => None,
    };
    let scale = epsilon.powf(epsilon_power) * (-exponential_rate * theta0.powi(3) / epsilon.powi(3)).exp();
    Ok(FourierEstimate {
        k,
        alpha_leading: constants.map(|(a, _)| scale * a),
        beta_leading: constants.map(|(_, b)| scale * b),
        constants,
        epsilon_power,
        exponential_rate,
    })
}

/// |tau| beyond which exp(-k Theta0^3/(3 eps^3)) exceeds exp(-Theta0^2 |tau|/(sqrt 2 eps^3)).
pub fn sanders_threshold(k: u32, theta0: f64) -> f64 {
    k as f64 * 2f64.sqrt() * theta0 / 3.0
}

/// Lipschitz constant of H_D along the homoclinic.
pub fn sanders_lipschitz(theta0: f64) -> Result<f64, MelnikovError> {
    nonzero(theta0)?;
    Ok(2f64.sqrt() / theta0)
}

/// Remainder bound with implied constant 1.
pub fn remainder_bound(tau: f64, theta0: f64, epsilon: f64) -> f64 {
    (-theta0 * theta0 * tau.abs() / (2f64.sqrt() * epsilon.powi(3))).exp()
}

/// CSV rows (delta, I_k quadrature, I_k asymptotic, ratio).
pub fn ik_table(k: u32, deltas: &[f64], tol: f64) -> Result<String, QuadratureError> {
    let mut out = String::from("delta,ik,ik_asymptotic,ratio\n");
    for &d in deltas {
        let exact = eval_ik(k, d, tol)?.value;
        let asym = ik_asymptotic(k, d);
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            d,
            exact,
            asym,
            exact / asym
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::build_rp3bp;

    #[test]
    fn first_prefactor() {
        // k = 1: pi/4 times the exponential
        let d = 7.0;
        assert!((ik_asymptotic(1, d) - PI / 4.0 * (-2.0 * d / 3.0).exp()).abs() < 1e-15);
        // k = 2: sqrt(pi) delta^(1/2)/4
        assert!((ik_asymptotic(2, d) - PI.sqrt() * d.sqrt() / 4.0 * (-2.0 * d / 3.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn threshold_and_lipschitz() {
        assert!((sanders_threshold(1, 1.0) - 0.471_404_520_791_031_7).abs() < 1e-15);
        assert_eq!(sanders_threshold(2, 1.0), 2.0 * sanders_threshold(1, 1.0));
        assert!((sanders_lipschitz(2.0).unwrap() - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(sanders_lipschitz(0.0).is_err());
    }

    #[test]
    fn leading_vanishes_on_sine_node() {
        let c = build_rp3bp(0.5).unwrap();
        assert_eq!(m4_leading(0.0, 1.0, 0.3, &c).unwrap(), 0.0);
    }
}
