//! Oscillatory improper integrals with cubic phase delta (z + z^3/3).
//!
//! Two independent backends: direct real-line quadrature (`eval_oscillatory`) and a
//! partial-fraction reduction to the I_k, J_k basis on a shifted contour (`eval_basis`).

pub mod contour;
pub mod direct;
mod gk;
pub mod poly;

use serde::Serialize;
use thiserror::Error;

pub use contour::{eval_basis, eval_ik, eval_jk, ik_at_zero};
pub use direct::{eval_oscillatory, eval_oscillatory_with_cut, MAX_DIRECT_DELTA};
use poly::{harmonic_numerators, IntPoly};

/// Above this |delta_eff| the F evaluators route to the contour backend.
pub const DIRECT_ROUTING_LIMIT: f64 = 10.0;
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("evaluation budget exhausted after {evaluations} evaluations (error {error:e})")]
    Budget { evaluations: usize, error: f64 },
    #[error("tolerance {0:e} outside [1e-13, 1e-3]")]
    Tolerance(f64),
    #[error("phase scale {0:e} too large for direct quadrature; use the asymptotic estimates")]
    PhaseTooLarge(f64),
    #[error("tail series does not converge at Z = {0}")]
    Tail(f64),
    #[error("invalid integrand: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicPhaseIntegrand {
    /// Ascending coefficients.
    pub cos_numerator: Vec<f64>,
    pub sin_numerator: Vec<f64>,
    pub denominator_power: usize,
    pub phase_scale: f64,
}

impl CubicPhaseIntegrand {
    pub fn new(
        cos_numerator: Vec<f64>,
        sin_numerator: Vec<f64>,
        denominator_power: usize,
        phase_scale: f64,
    ) -> Result<Self, QuadratureError> {
        let it = CubicPhaseIntegrand {
            cos_numerator,
            sin_numerator,
            denominator_power,
            phase_scale,
        };
        it.check()?;
        Ok(it)
    }

    pub fn check(&self) -> Result<(), QuadratureError> {
        if self.denominator_power < 1 {
            return Err(QuadratureError::Invalid("denominator power must be >= 1".into()));
        }
        if !self.phase_scale.is_finite() {
            return Err(QuadratureError::Invalid("phase scale not finite".into()));
        }
        let max_deg = 2 * self.denominator_power - 2;
        for p in [&self.cos_numerator, &self.sin_numerator] {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(QuadratureError::Invalid("non-finite coefficient".into()));
            }
            if let Some(d) = poly::degree(p) {
                if d > max_deg {
                    return Err(QuadratureError::Invalid(format!(
                        "numerator degree {d} exceeds {max_deg}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pointwise integrand value.
    pub fn eval(&self, z: f64) -> f64 {
        let k = self.denominator_power as i32;
        let (s, c) = (self.phase_scale * (z + z * z * z / 3.0)).sin_cos();
        poly::rational(&self.cos_numerator, k, z) * c + poly::rational(&self.sin_numerator, k, z) * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Direct,
    Basis,
    /// Direct for |delta| <= DIRECT_ROUTING_LIMIT, basis above.
    Auto,
}

pub fn evaluate(
    integrand: &CubicPhaseIntegrand,
    tol: f64,
    backend: Backend,
) -> Result<QuadratureResult, QuadratureError> {
    match backend {
        Backend::Direct => eval_oscillatory(integrand, tol),
        Backend::Basis => eval_basis(integrand, tol),
        Backend::Auto => {
            if integrand.phase_scale.abs() <= DIRECT_ROUTING_LIMIT {
                eval_oscillatory(integrand, tol)
            } else {
                eval_basis(integrand, tol)
            }
        }
    }
}

/// Integral over the real line of [(j+1) z sin chi + m cos chi]/(1+z^2)^(j+2),
/// chi = m t^3 z (z^2+3)/6 - 2 m arctan z: the order-j, harmonic-m Melnikov factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarmonicIntegral {
    pub j: u32,
    pub m: u32,
    pub cos_numerator: IntPoly,
    pub sin_numerator: IntPoly,
    pub denominator_power: u32,
}

impl HarmonicIntegral {
    pub fn new(j: u32, m: u32) -> Self {
        let (p, q, k) = harmonic_numerators(j, m);
        HarmonicIntegral {
            j,
            m,
            cos_numerator: p,
            sin_numerator: q,
            denominator_power: k,
        }
    }

    pub fn phase_scale(&self, theta_tilde: f64) -> f64 {
        0.5 * self.m as f64 * theta_tilde.powi(3)
    }

    pub fn integrand(&self, theta_tilde: f64, sign: f64) -> CubicPhaseIntegrand {
        let conv = |p: &IntPoly| p.iter().map(|&c| sign * c as f64).collect();
        CubicPhaseIntegrand {
            cos_numerator: conv(&self.cos_numerator),
            sin_numerator: conv(&self.sin_numerator),
            denominator_power: self.denominator_power as usize,
            phase_scale: self.phase_scale(theta_tilde),
        }
    }
}

/// The named F functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FFamily {
    F4,
    F61,
    F62,
    /// Polygonal problem with N bodies in total (N - 1 primaries).
    Poly(u32),
}

impl FFamily {
    /// (j, m, sign) with F = sign * F_{j,m}.
    pub fn harmonic(&self) -> (u32, u32, f64) {
        match *self {
            FFamily::F4 => (2, 2, 1.0),
            FFamily::F61 => (3, 1, -1.0),
            FFamily::F62 => (3, 3, -1.0),
            FFamily::Poly(n) => (n - 1, n - 1, 1.0),
        }
    }

    pub fn integrand(&self, theta_tilde: f64) -> CubicPhaseIntegrand {
        let (j, m, sign) = self.harmonic();
        HarmonicIntegral::new(j, m).integrand(theta_tilde, sign)
    }

    pub fn eval(
        &self,
        theta_tilde: f64,
        tol: f64,
        backend: Backend,
    ) -> Result<QuadratureResult, QuadratureError> {
        if let FFamily::Poly(n) = self {
            if *n < 4 {
                return Err(QuadratureError::Invalid(format!("polygon needs N >= 4, got {n}")));
            }
        }
        evaluate(&self.integrand(theta_tilde), tol, backend)
    }

    pub fn name(&self) -> String {
        match self {
            FFamily::F4 => "F4".into(),
            FFamily::F61 => "F61".into(),
            FFamily::F62 => "F62".into(),
            FFamily::Poly(n) => format!("poly:{n}"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "F4" => Some(FFamily::F4),
            "F61" => Some(FFamily::F61),
            "F62" => Some(FFamily::F62),
            _ => s
                .strip_prefix("poly:")
                .and_then(|n| n.parse().ok())
                .filter(|&n: &u32| (4..=40).contains(&n))
                .map(FFamily::Poly),
        }
    }
}

pub fn eval_f4(theta_tilde: f64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    FFamily::F4.eval(theta_tilde, tol, Backend::Auto)
}

pub fn eval_f61(theta_tilde: f64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    FFamily::F61.eval(theta_tilde, tol, Backend::Auto)
}

pub fn eval_f62(theta_tilde: f64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    FFamily::F62.eval(theta_tilde, tol, Backend::Auto)
}

pub fn eval_fpoly(n: u32, theta_tilde: f64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    FFamily::Poly(n).eval(theta_tilde, tol, Backend::Auto)
}

/// Prefactor K of M_{2N-2} = +-(K/Theta0^(2N)) F sin((N-1) s0), as a reduced fraction.
///
/// K = 2^N p_{N-1,N-1}, with p the top cosine coefficient of the Legendre polynomial.
pub fn polygon_prefactor(n: u32) -> (u128, u128) {
    let j = (n - 1) as u128;
    // p_{j,j} = 2 C(2j, j)/4^j
    let mut c: u128 = 1;
    for i in 0..j {
        c = c * (2 * j - i) / (i + 1);
    }
    let mut num = 2 * c;
    let mut den: u128 = 1 << (2 * j);
    let mut pow = n;
    while pow > 0 && den % 2 == 0 {
        den /= 2;
        pow -= 1;
    }
    num <<= pow;
    let g = gcd(num, den);
    (num / g, den / g)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Sign-change bracketing on a uniform grid followed by bisection to 1e-10.
pub fn find_zeros<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    let grid = grid.max(8);
    let mut roots = Vec::new();
    let xs: Vec<f64> = (0..=grid)
        .map(|i| lo + (hi - lo) * i as f64 / grid as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    for i in 0..grid {
        let (mut a, mut b) = (xs[i], xs[i + 1]);
        let (mut fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if i + 1 == grid && fb == 0.0 {
            roots.push(b);
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        while b - a > 1e-10 {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

/// Roots of an F function, retained only where both backends agree the value is below
/// 10x their combined error estimates (plus the bisection width times the local slope).
pub fn verified_zeros(
    family: FFamily,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: f64,
) -> Result<Vec<f64>, QuadratureError> {
    let mut failure = None;
    let roots = find_zeros(
        |t| match family.eval(t, tol, Backend::Auto) {
            Ok(r) => r.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        grid,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let mut out = Vec::new();
    for r in roots {
        let d = family.eval(r, tol, Backend::Direct)?;
        let b = family.eval(r, tol, Backend::Basis)?;
        let h = 1e-6;
        let slope = (family.eval(r + h, tol, Backend::Direct)?.value
            - family.eval(r - h, tol, Backend::Direct)?.value)
            .abs()
            / (2.0 * h);
        let noise = 10.0 * (d.error_estimate + b.error_estimate) + 1e-10 * slope;
        if d.value.abs() <= noise && b.value.abs() <= noise {
            out.push(r);
        }
    }
    Ok(out)
}

/// CSV rows (theta_tilde, value, error_estimate) on a uniform grid.
pub fn sample_csv(
    family: FFamily,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Result<String, QuadratureError> {
    let mut out = String::from("theta_tilde,value,error_estimate\n");
    let n = points.max(2);
    for i in 0..n {
        let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let r = family.eval(t, tol, Backend::Auto)?;
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", t, r.value, r.error_estimate));
    }
    Ok(out)
}
