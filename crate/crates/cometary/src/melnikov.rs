//! Melnikov functions M4, M6, M_{2N-2} and the transversality decision tree.
//!
//! An order-j potential term with harmonic pair (A_m, B_m) contributes
//!
//!   M_{j,m}(s0) = sigma (2^(j+1)/Theta0^(2j+2)) (A_m sin m s0 - B_m cos m s0) F_{j,m}(Theta0/eps)
//!
//! at order eps^(2j), sigma = sign(Theta0). M4, M6 and the polygonal M_{2N-2} are special cases.

use serde::Serialize;
use thiserror::Error;

use crate::config::CentralConfiguration;
use crate::harmonics::{c_coeffs, d_coeffs, d_l, harmonic_table, HarmonicsError};
use crate::quadrature::{
    polygon_prefactor, Backend, FFamily, HarmonicIntegral, QuadratureError, MAX_DIRECT_DELTA,
};

pub const ZERO_THRESHOLD: f64 = 1e-11;
pub const MAX_L: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MelnikovError {
    #[error("Theta0 must be nonzero")]
    ThetaZero,
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("|Theta0/eps| = {0} beyond the quadrature range; use the asymptotic estimates")]
    OutOfRange(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignBranch {
    /// Theta0 > 0
    Upper,
    /// Theta0 < 0
    Lower,
}

impl SignBranch {
    pub fn of(theta0: f64) -> Result<Self, MelnikovError> {
        if theta0 > 0.0 {
            Ok(SignBranch::Upper)
        } else if theta0 < 0.0 {
            Ok(SignBranch::Lower)
        } else {
            Err(MelnikovError::ThetaZero)
        }
    }

    pub fn sign(&self) -> f64 {
        match self {
            SignBranch::Upper => 1.0,
            SignBranch::Lower => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicTerm {
    pub k: u32,
    pub amplitude_cos: f64,
    pub amplitude_sin: f64,
}

/// sum over terms of amplitude_cos cos(k s0) + amplitude_sin sin(k s0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MelnikovEvaluation {
    pub epsilon_order: u32,
    pub harmonic_terms: Vec<HarmonicTerm>,
    pub theta0: f64,
    pub epsilon: f64,
    pub s0_grid_values: Option<Vec<(f64, f64)>>,
}

impl MelnikovEvaluation {
    pub fn value(&self, s0: f64) -> f64 {
        self.harmonic_terms
            .iter()
            .map(|t| {
                let (s, c) = (t.k as f64 * s0).sin_cos();
                t.amplitude_cos * c + t.amplitude_sin * s
            })
            .sum()
    }

    pub fn with_grid(mut self, points: usize) -> Self {
        let n = points.max(1);
        let grid = (0..n)
            .map(|i| {
                let s0 = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                (s0, self.value(s0))
            })
            .collect();
        self.s0_grid_values = Some(grid);
        self
    }

    /// CSV (s0, value) over the stored grid.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s0,value\n");
        for (s, v) in self.s0_grid_values.iter().flatten() {
            out.push_str(&format!("{:.16e},{:.16e}\n", s, v));
        }
        out
    }
}

fn check_args(theta0: f64, epsilon: f64) -> Result<(SignBranch, f64), MelnikovError> {
    let branch = SignBranch::of(theta0)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(MelnikovError::Epsilon(epsilon));
    }
    let tt = theta0 / epsilon;
    if tt.abs() > MAX_DIRECT_DELTA {
        return Err(MelnikovError::OutOfRange(tt.abs()));
    }
    Ok((branch, tt))
}

/// The generic channel: (cos, sin) amplitudes of M_{j,m} for the pair (A, B).
pub fn harmonic_channel(
    j: u32,
    m: u32,
    a: f64,
    b: f64,
    theta0: f64,
    epsilon: f64,
    tol: f64,
) -> Result<HarmonicTerm, MelnikovError> {
    let (branch, tt) = check_args(theta0, epsilon)?;
    let f = crate::quadrature::evaluate(
        &HarmonicIntegral::new(j, m).integrand(tt, 1.0),
        tol,
        Backend::Auto,
    )?
    .value;
    let pref = branch.sign() * 2f64.powi(j as i32 + 1) / theta0.powi(2 * j as i32 + 2) * f;
    Ok(HarmonicTerm {
        k: m,
        amplitude_cos: -pref * b,
        amplitude_sin: pref * a,
    })
}

/// All harmonics of order j from the configuration's table.
pub fn melnikov_from_table(
    config: &CentralConfiguration,
    j: u32,
    theta0: f64,
    epsilon: f64,
    tol: f64,
) -> Result<MelnikovEvaluation, MelnikovError> {
    let table = harmonic_table(config, j as usize)?;
    let mut terms = Vec::new();
    for e in table.entries.iter().filter(|e| e.m > 0) {
        terms.push(harmonic_channel(j, e.m as u32, e.a, e.b, theta0, epsilon, tol)?);
    }
    Ok(MelnikovEvaluation {
        epsilon_order: 2 * j,
        harmonic_terms: terms,
        theta0,
        epsilon,
        s0_grid_values: None,
    })
}

pub fn m4_evaluation(
    config: &CentralConfiguration,
    theta0: f64,
    epsilon: f64,
    tol: f64,
) -> Result<MelnikovEvaluation, MelnikovError> {
    let (branch, tt) = check_args(theta0, epsilon)?;
    let (_, c2, c3) = c_coeffs(config);
    let f4 = FFamily::F4.eval(tt, tol, Backend::Auto)?.value;
    let pref = branch.sign() * 2.0 / theta0.powi(6) * f4;
    Ok(MelnikovEvaluation {
        epsilon_order: 4,
        harmonic_terms: vec![HarmonicTerm {
            k: 2,
            amplitude_cos: -pref * c3,
            amplitude_sin: pref * c2,
        }],
        theta0,
        epsilon,
        s0_grid_values: None,
    })
}

/// +-(2/Theta0^6) F4 (c2 sin 2s0 - c3 cos 2s0)
pub fn m4(
    s0: f64,
    theta0: f64,
    epsilon: f64,
    config: &CentralConfiguration,
    tol: f64,
) -> Result<f64, MelnikovError> {
    Ok(m4_evaluation(config, theta0, epsilon, tol)?.value(s0))
}

pub fn m6_evaluation(
    config: &CentralConfiguration,
    theta0: f64,
    epsilon: f64,
    tol: f64,
) -> Result<MelnikovEvaluation, MelnikovError> {
    let (branch, tt) = check_args(theta0, epsilon)?;
    let (d1, d2, d3, d4) = d_coeffs(config);
    let f61 = FFamily::F61.eval(tt, tol, Backend::Auto)?.value;
    let f62 = FFamily::F62.eval(tt, tol, Backend::Auto)?.value;
    let pref = branch.sign() * 2.0 / theta0.powi(8);
    Ok(MelnikovEvaluation {
        epsilon_order: 6,
        harmonic_terms: vec![
            HarmonicTerm {
                k: 1,
                amplitude_cos: pref * f61 * d2,
                amplitude_sin: -pref * f61 * d1,
            },
            HarmonicTerm {
                k: 3,
                amplitude_cos: pref * f62 * d4,
                amplitude_sin: -pref * f62 * d3,
            },
        ],
        theta0,
        epsilon,
        s0_grid_values: None,
    })
}

/// +-(2/Theta0^8) (F61 (d2 cos s0 - d1 sin s0) + F62 (d4 cos 3s0 - d3 sin 3s0))
pub fn m6(
    s0: f64,
    theta0: f64,
    epsilon: f64,
    config: &CentralConfiguration,
    tol: f64,
) -> Result<f64, MelnikovError> {
    Ok(m6_evaluation(config, theta0, epsilon, tol)?.value(s0))
}

pub fn m_poly_evaluation(
    n: u32,
    theta0: f64,
    epsilon: f64,
    tol: f64,
) -> Result<MelnikovEvaluation, MelnikovError> {
    if n < 4 {
        return Err(MelnikovError::Invalid(format!("polygon needs N >= 4, got {n}")));
    }
    let (branch, tt) = check_args(theta0, epsilon)?;
    let (num, den) = polygon_prefactor(n);
    let k = num as f64 / den as f64;
    let f = FFamily::Poly(n).eval(tt, tol, Backend::Auto)?.value;
    Ok(MelnikovEvaluation {
        epsilon_order: 2 * (n - 1),
        harmonic_terms: vec![HarmonicTerm {
            k: n - 1,
            amplitude_cos: 0.0,
            amplitude_sin: branch.sign() * k / theta0.powi(2 * n as i32) * f,
        }],
        theta0,
        epsilon,
        s0_grid_values: None,
    })
}

/// +-(K/Theta0^(2N)) F_{2N-2} sin((N-1) s0) for the unit-circle polygon.
pub fn m_poly(n: u32, s0: f64, theta0: f64, epsilon: f64, tol: f64) -> Result<f64, MelnikovError> {
    Ok(m_poly_evaluation(n, theta0, epsilon, tol)?.value(s0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroSet {
    Simple(Vec<f64>),
    Degenerate,
}

/// Zeros of a cos(k s0) + b sin(k s0) in [0, 2 pi).
pub fn simple_zeros(a: f64, b: f64, k: u32) -> ZeroSet {
    if a == 0.0 && b == 0.0 || k == 0 {
        return ZeroSet::Degenerate;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let x0 = (-a).atan2(b);
    let mut zs: Vec<f64> = (0..2 * k)
        .map(|n| ((x0 + n as f64 * std::f64::consts::PI) / k as f64).rem_euclid(two_pi))
        .map(|z| if z >= two_pi { 0.0 } else { z })
        .collect();
    zs.sort_by(f64::total_cmp);
    ZeroSet::Simple(zs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Transversal,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub k: u32,
    pub epsilon_order: u32,
    /// Legendre order of the potential term.
    pub j: u32,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub zeros: Vec<f64>,
}

impl Witness {
    /// The s0-dependent factor of the witnessing Melnikov channel, A sin k s0 - B cos k s0.
    pub fn factor(&self, s0: f64) -> f64 {
        let (s, c) = (self.k as f64 * s0).sin_cos();
        self.a * s - self.b * c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub stage: String,
    pub j: u32,
    pub k: u32,
    pub coefficients: (f64, f64),
    pub decision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityVerdict {
    pub status: Status,
    pub witness: Option<Witness>,
    pub trace: Vec<TraceEntry>,
}

impl TransversalityVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

pub fn default_j_max(config: &CentralConfiguration) -> u32 {
    2 * config.len() as u32 + 4
}

fn nonzero(a: f64, b: f64) -> bool {
    a.abs() > ZERO_THRESHOLD || b.abs() > ZERO_THRESHOLD
}

struct Search {
    trace: Vec<TraceEntry>,
}

impl Search {
    /// Record the pair; returns the witness if it is nonzero. (a, b) enter the channel as
    /// a sin k s0 - b cos k s0.
    fn check(&mut self, stage: &str, j: u32, k: u32, a: f64, b: f64) -> Option<Witness> {
        let hit = nonzero(a, b);
        self.trace.push(TraceEntry {
            stage: stage.into(),
            j,
            k,
            coefficients: (a, b),
            decision: if hit { "nonzero: witness" } else { "vanishes" }.into(),
        });
        if !hit {
            return None;
        }
        let zeros = match simple_zeros(-b, a, k) {
            ZeroSet::Simple(z) => z,
            ZeroSet::Degenerate => Vec::new(),
        };
        Some(Witness {
            k,
            epsilon_order: 2 * j,
            j,
            a,
            b,
            zeros,
        })
    }
}

/// Decision tree: (i) d1, d2; (ii) d^(l) for l = 2..l_max; (iii) c2, c3; (iv) general
/// harmonic tables up to order j_max, harmonics ascending and orders ascending within one.
pub fn classify(
    config: &CentralConfiguration,
    l_max: u32,
    j_max: u32,
) -> Result<TransversalityVerdict, MelnikovError> {
    if !(2..=MAX_L).contains(&l_max) {
        return Err(MelnikovError::Invalid(format!("l_max must be in 2..={MAX_L}")));
    }
    if j_max < 4 || j_max > crate::harmonics::MAX_LEGENDRE_ORDER as u32 {
        return Err(MelnikovError::Invalid(format!(
            "j_max must be in 4..={}",
            crate::harmonics::MAX_LEGENDRE_ORDER
        )));
    }
    let mut search = Search { trace: Vec::new() };
    let done = |search: Search, w: Witness| TransversalityVerdict {
        status: Status::Transversal,
        witness: Some(w),
        trace: search.trace,
    };

    let (d1, d2, _, _) = d_coeffs(config);
    if let Some(w) = search.check("i", 3, 1, d1, d2) {
        return Ok(done(search, w));
    }
    for l in 2..=l_max {
        let (a, b) = d_l(config, l);
        if let Some(w) = search.check("ii", 2 * l + 1, 1, a, b) {
            return Ok(done(search, w));
        }
    }
    let (_, c2, c3) = c_coeffs(config);
    if let Some(w) = search.check("iii", 2, 2, c2, c3) {
        return Ok(done(search, w));
    }
    let tables = (2..=j_max)
        .map(|j| harmonic_table(config, j as usize))
        .collect::<Result<Vec<_>, _>>()?;
    for k in 1..=j_max {
        let mut j = k.max(2);
        if (j - k) % 2 == 1 {
            j += 1;
        }
        while j <= j_max {
            let covered = (k == 1 && j <= 2 * l_max + 1) || (k == 2 && j == 2);
            if !covered {
                let (a, b) = tables[(j - 2) as usize].pair(k as usize);
                if let Some(w) = search.check("iv", j, k, a, b) {
                    return Ok(done(search, w));
                }
            }
            j += 2;
        }
    }
    Ok(TransversalityVerdict {
        status: Status::Inconclusive,
        witness: None,
        trace: search.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build_polygon, build_rp3bp};
    use std::f64::consts::PI;

    #[test]
    fn zeros_of_basic_harmonics() {
        assert_eq!(simple_zeros(0.0, 1.0, 1), ZeroSet::Simple(vec![0.0, PI]));
        let ZeroSet::Simple(z) = simple_zeros(1.0, 0.0, 2) else {
            panic!()
        };
        for (a, b) in z.iter().zip([1.0, 3.0, 5.0, 7.0]) {
            assert!((a - b * PI / 4.0).abs() < 1e-15);
        }
        assert_eq!(simple_zeros(0.0, 0.0, 3), ZeroSet::Degenerate);
    }

    #[test]
    fn rp3bp_witnesses() {
        let v = classify(&build_rp3bp(0.3).unwrap(), 4, 8).unwrap();
        let w = v.witness.unwrap();
        assert_eq!((w.k, w.epsilon_order), (1, 6));
        assert!((w.a - 0.252).abs() < 1e-12 && w.b == 0.0);
        let v = classify(&build_rp3bp(0.5).unwrap(), 4, 8).unwrap();
        let w = v.witness.unwrap();
        assert_eq!((w.k, w.epsilon_order), (2, 4));
        assert!((w.a - 0.75).abs() < 1e-12);
    }

    #[test]
    fn hexagon_channel() {
        let c = build_polygon(7, false).unwrap();
        let v = classify(&c, 4, default_j_max(&c)).unwrap();
        let w = v.witness.unwrap();
        assert_eq!((w.k, w.epsilon_order, w.zeros.len()), (6, 12, 12));
    }

    #[test]
    fn poly_at_origin_vanishes() {
        for n in 4..9 {
            assert_eq!(m_poly(n, 0.0, 1.0, 0.5, 1e-10).unwrap(), 0.0);
        }
    }
}
