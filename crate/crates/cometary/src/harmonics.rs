//! Harmonic content of the perturbing potential in the angle s = t - theta.

use serde::Serialize;
use thiserror::Error;

use crate::config::CentralConfiguration;

pub const MAX_LEGENDRE_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarmonicsError {
    #[error("Legendre order {0} outside 0..={MAX_LEGENDRE_ORDER}")]
    OrderOutOfRange(usize),
    #[error("harmonic tables start at order 2, got {0}")]
    OrderTooLow(usize),
}

/// P_j(cos g) = sum over m of p_{j,m} cos(m g), m = j, j-2, ...
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendreCosExpansion {
    pub j: usize,
    /// (m, p_{j,m}) with m ascending.
    pub coefficients: Vec<(usize, f64)>,
}

impl LegendreCosExpansion {
    pub fn coefficient(&self, m: usize) -> f64 {
        self.coefficients
            .iter()
            .find(|(mm, _)| *mm == m)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|&(m, p)| p * (m as f64 * gamma).cos())
            .sum()
    }
}

fn central_binomials(n_max: usize) -> Vec<u128> {
    // C(2k, k) for k = 0..=n_max from Pascal rows, exact in u128 up to k = 64
    let rows = 2 * n_max;
    let mut row = vec![1u128];
    let mut out = vec![1u128];
    for n in 1..=rows {
        let mut next = vec![1u128; n + 1];
        for k in 1..n {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
        if n % 2 == 0 {
            out.push(row[n / 2]);
        }
    }
    out
}

/// Cosine-series coefficients of P_j, exact integers over 4^j before conversion.
pub fn legendre_cos_coeffs(j: usize) -> Result<LegendreCosExpansion, HarmonicsError> {
    if j > MAX_LEGENDRE_ORDER {
        return Err(HarmonicsError::OrderOutOfRange(j));
    }
    let cb = central_binomials(j);
    let scale = 2f64.powi(-2 * j as i32);
    let mut coefficients = Vec::new();
    for m in (j % 2..=j).step_by(2) {
        let k = (j - m) / 2;
        let mut num = cb[k] * cb[j - k];
        if m > 0 {
            num *= 2;
        }
        coefficients.push((m, num as f64 * scale));
    }
    Ok(LegendreCosExpansion { j, coefficients })
}

/// (P_j(w), P_j'(w)) by the three-term recurrence.
pub fn legendre_pq(j: usize, w: f64) -> (f64, f64) {
    if j == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = w;
    let mut q0 = 0.0;
    let mut q1 = 1.0;
    for n in 1..j {
        let nf = n as f64;
        let p2 = ((2.0 * nf + 1.0) * w * p1 - nf * p0) / (nf + 1.0);
        let q2 = q0 + (2.0 * nf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        q0 = q1;
        q1 = q2;
    }
    (p1, q1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicEntry {
    pub m: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

/// Order-j potential term -(eps^(2j+3)/r^(j+1)) * sum_m (A_m cos ms + B_m sin ms).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicTable {
    pub j: usize,
    pub entries: Vec<HarmonicEntry>,
}

impl HarmonicTable {
    pub fn entry(&self, m: usize) -> Option<HarmonicEntry> {
        self.entries.iter().copied().find(|e| e.m == m)
    }

    pub fn pair(&self, m: usize) -> (f64, f64) {
        self.entry(m).map(|e| (e.a, e.b)).unwrap_or((0.0, 0.0))
    }

    /// sum_m A_m cos ms + B_m sin ms
    pub fn eval(&self, s: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let (sn, cs) = (e.m as f64 * s).sin_cos();
                e.a * cs + e.b * sn
            })
            .sum()
    }

    /// sum_m m (A_m sin ms - B_m cos ms), i.e. minus the s-derivative of `eval`.
    pub fn torque(&self, s: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let (sn, cs) = (e.m as f64 * s).sin_cos();
                e.m as f64 * (e.a * sn - e.b * cs)
            })
            .sum()
    }

    /// Largest |A_m| + |B_m| over the table, for bounds.
    pub fn amplitude(&self) -> f64 {
        self.entries.iter().map(|e| e.a.abs() + e.b.abs()).sum()
    }
}

pub fn harmonic_table(config: &CentralConfiguration, j: usize) -> Result<HarmonicTable, HarmonicsError> {
    if j < 2 {
        return Err(HarmonicsError::OrderTooLow(j));
    }
    let leg = legendre_cos_coeffs(j)?;
    let entries = leg
        .coefficients
        .iter()
        .map(|&(m, p)| {
            let mut cs = 0.0;
            let mut sn = 0.0;
            for b in &config.bodies {
                let w = b.mass * b.radius().powi(j as i32);
                let (s, c) = (m as f64 * b.angle()).sin_cos();
                cs += w * c;
                sn += w * s;
            }
            HarmonicEntry {
                m,
                a: p * cs,
                b: -p * sn,
            }
        })
        .collect();
    Ok(HarmonicTable { j, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl CoefficientSet {
    pub fn of(config: &CentralConfiguration) -> Self {
        let (c1, c2, c3) = c_coeffs(config);
        let (d1, d2, d3, d4) = d_coeffs(config);
        CoefficientSet {
            c1,
            c2,
            c3,
            d1,
            d2,
            d3,
            d4,
        }
    }
}

pub fn c_coeffs(config: &CentralConfiguration) -> (f64, f64, f64) {
    let mut c = (0.0, 0.0, 0.0);
    for b in &config.bodies {
        let [x, y] = b.position;
        c.0 += b.mass * (x * x + y * y);
        c.1 += 3.0 * b.mass * (x * x - y * y);
        c.2 -= 6.0 * b.mass * x * y;
    }
    c
}

pub fn d_coeffs(config: &CentralConfiguration) -> (f64, f64, f64, f64) {
    let mut d = (0.0, 0.0, 0.0, 0.0);
    for b in &config.bodies {
        let [x, y] = b.position;
        let r2 = x * x + y * y;
        d.0 += 3.0 * b.mass * x * r2;
        d.1 -= 3.0 * b.mass * y * r2;
        d.2 += 5.0 * b.mass * x * (x * x - 3.0 * y * y);
        d.3 -= 5.0 * b.mass * y * (3.0 * x * x - y * y);
    }
    d
}

/// (d_1^(l), d_2^(l)) = (sum m a1 |a|^(2l), -sum m a2 |a|^(2l)).
pub fn d_l(config: &CentralConfiguration, l: u32) -> (f64, f64) {
    let mut d = (0.0, 0.0);
    for b in &config.bodies {
        let [x, y] = b.position;
        let w = b.mass * (x * x + y * y).powi(l as i32);
        d.0 += w * x;
        d.1 -= w * y;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build_polygon, build_rp3bp};

    #[test]
    fn low_orders() {
        let p0 = legendre_cos_coeffs(0).unwrap();
        assert_eq!(p0.coefficients, vec![(0, 1.0)]);
        let p2 = legendre_cos_coeffs(2).unwrap();
        assert_eq!(p2.coefficients, vec![(0, 0.25), (2, 0.75)]);
        assert!(legendre_cos_coeffs(65).is_err());
    }

    #[test]
    fn p3_by_least_squares_fit() {
        // P3(cos g) = u cos g + v cos 3g: normal equations at 8 angles
        let mut ata = [[0.0; 2]; 2];
        let mut atb = [0.0; 2];
        for i in 0..8 {
            let g = 0.3 + 0.7 * i as f64;
            let row = [g.cos(), (3.0 * g).cos()];
            let w = g.cos();
            let target = 0.5 * (5.0 * w * w * w - 3.0 * w);
            for r in 0..2 {
                atb[r] += row[r] * target;
                for c in 0..2 {
                    ata[r][c] += row[r] * row[c];
                }
            }
        }
        let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
        let u = (atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det;
        let v = (ata[0][0] * atb[1] - ata[1][0] * atb[0]) / det;
        let p3 = legendre_cos_coeffs(3).unwrap();
        assert!((p3.coefficient(1) - u).abs() < 1e-12);
        assert!((p3.coefficient(3) - v).abs() < 1e-12);
    }

    #[test]
    fn cosine_series_matches_polynomial() {
        for j in 0..=MAX_LEGENDRE_ORDER {
            let e = legendre_cos_coeffs(j).unwrap();
            for i in 0..32 {
                let g = -3.0 + 0.19 * i as f64;
                let (p, _) = legendre_pq(j, g.cos());
                assert!((e.eval(g) - p).abs() < 1e-12, "j={j} g={g}");
            }
            if j <= 12 {
                assert!(e.coefficients.iter().all(|&(_, p)| p >= 0.0));
            }
        }
    }

    #[test]
    fn derivative_by_differences() {
        for j in 1..10 {
            let w = 0.37;
            let h = 1e-6;
            let fd = (legendre_pq(j, w + h).0 - legendre_pq(j, w - h).0) / (2.0 * h);
            assert!((legendre_pq(j, w).1 - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn rp3bp_half_table() {
        let c = build_rp3bp(0.5).unwrap();
        let t = harmonic_table(&c, 2).unwrap();
        assert!((t.pair(2).0 - 3.0 / 16.0).abs() < 1e-15);
        let (_, c2, c3) = c_coeffs(&c);
        assert!((c2 - 0.75).abs() < 1e-15);
        assert_eq!(c3, 0.0);
    }

    #[test]
    fn hexagon_kills_order_three() {
        let c = build_polygon(7, false).unwrap();
        let t = harmonic_table(&c, 3).unwrap();
        for e in &t.entries {
            assert!(e.a.abs() < 1e-15 && e.b.abs() < 1e-15);
        }
    }

    #[test]
    fn d_l_first_order() {
        let c = build_rp3bp(0.3).unwrap();
        let (d1, d2, _, _) = d_coeffs(&c);
        let (e1, e2) = d_l(&c, 1);
        let direct = 0.3 * 0.7f64.powi(3) + 0.7 * (-0.3f64).powi(3);
        assert!((e1 - direct).abs() < 1e-15);
        assert!((e1 - d1 / 3.0).abs() < 1e-15);
        assert!((e1 - 0.084).abs() < 1e-15);
        assert_eq!((e2, d2), (0.0, 0.0));
        let half = build_rp3bp(0.5).unwrap();
        for l in 1..6 {
            assert_eq!(d_l(&half, l), (0.0, 0.0));
        }
    }
}
