//! Planar central configurations of the primaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MASS_SUM_TOL: f64 = 1e-12;
const COM_TOL: f64 = 1e-10;
const MIN_SEPARATION: f64 = 1e-9;
const LAMBDA_FIT_TOL: f64 = 1e-8;
const NEWTON_MAX_ITERS: usize = 200;
const NEWTON_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("at least two primaries are required, got {0}")]
    TooFewBodies(usize),
    #[error("body {index}: mass must be positive and finite, got {mass}")]
    BadMass { index: usize, mass: f64 },
    #[error("body {index}: position is not finite")]
    BadPosition { index: usize },
    #[error("masses sum to {0}, expected 1")]
    MassNormalization(f64),
    #[error("center of mass at ({0}, {1}), expected the origin")]
    CenterOfMass(f64, f64),
    #[error("bodies {0} and {1} coincide")]
    Degenerate(usize, usize),
    #[error("configuration is not central at any scale (fit residual {0:e})")]
    NotCentral(f64),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("Newton iteration failed to converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("linear system is singular")]
    Singular,
    #[error("solved mass {index} is not positive ({mass})")]
    NonPositiveMass { index: usize, mass: f64 },
    #[error("invalid configuration JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimaryBody {
    pub mass: f64,
    pub position: [f64; 2],
}

impl PrimaryBody {
    pub fn new(mass: f64, x: f64, y: f64) -> Self {
        PrimaryBody {
            mass,
            position: [x, y],
        }
    }

    pub fn radius(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }

    /// Polar angle of the position, atan2(a2, a1).
    pub fn angle(&self) -> f64 {
        self.position[1].atan2(self.position[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralConfiguration {
    pub label: String,
    pub bodies: Vec<PrimaryBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    pub residuals: Vec<[f64; 2]>,
    pub max_norm: f64,
    pub lambda: Option<f64>,
}

impl CentralConfiguration {
    /// Validates mass normalization, barycenter and separation.
    pub fn new(label: impl Into<String>, bodies: Vec<PrimaryBody>) -> Result<Self, ConfigError> {
        let config = CentralConfiguration {
            label: label.into(),
            bodies,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.bodies.len() < 2 {
            return Err(ConfigError::TooFewBodies(self.bodies.len()));
        }
        for (index, b) in self.bodies.iter().enumerate() {
            if !(b.mass > 0.0 && b.mass.is_finite()) {
                return Err(ConfigError::BadMass {
                    index,
                    mass: b.mass,
                });
            }
            if !(b.position[0].is_finite() && b.position[1].is_finite()) {
                return Err(ConfigError::BadPosition { index });
            }
        }
        let total: f64 = self.bodies.iter().map(|b| b.mass).sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(ConfigError::MassNormalization(total));
        }
        let com = self.center_of_mass();
        if com[0].hypot(com[1]) > COM_TOL {
            return Err(ConfigError::CenterOfMass(com[0], com[1]));
        }
        check_separation(&self.bodies)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let parsed: CentralConfiguration =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        parsed.validate()?;
        Ok(parsed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn center_of_mass(&self) -> [f64; 2] {
        let mut c = [0.0; 2];
        for b in &self.bodies {
            c[0] += b.mass * b.position[0];
            c[1] += b.mass * b.position[1];
        }
        c
    }

    pub fn max_radius(&self) -> f64 {
        self.bodies.iter().map(|b| b.radius()).fold(0.0, f64::max)
    }

    /// Positions multiplied by `c`; masses untouched.
    pub fn scaled(&self, c: f64) -> Self {
        self.map_positions(|p| [c * p[0], c * p[1]])
    }

    /// Positions rotated counterclockwise by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        self.map_positions(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
    }

    fn map_positions(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        CentralConfiguration {
            label: self.label.clone(),
            bodies: self
                .bodies
                .iter()
                .map(|b| PrimaryBody {
                    mass: b.mass,
                    position: f(b.position),
                })
                .collect(),
        }
    }
}

fn check_separation(bodies: &[PrimaryBody]) -> Result<(), ConfigError> {
    for i in 0..bodies.len() {
        for j in i + 1..bodies.len() {
            let d = (bodies[i].position[0] - bodies[j].position[0])
                .hypot(bodies[i].position[1] - bodies[j].position[1]);
            if d <= MIN_SEPARATION {
                return Err(ConfigError::Degenerate(i, j));
            }
        }
    }
    Ok(())
}

/// Gravitational pull on each body, sum over j != k of m_j (a_j - a_k)/|a_j - a_k|^3.
fn attraction(bodies: &[PrimaryBody]) -> Result<Vec<[f64; 2]>, ConfigError> {
    check_separation(bodies)?;
    let n = bodies.len();
    let mut g = vec![[0.0; 2]; n];
    for k in 0..n {
        for j in 0..n {
            if j == k {
                continue;
            }
            let dx = bodies[j].position[0] - bodies[k].position[0];
            let dy = bodies[j].position[1] - bodies[k].position[1];
            let r = dx.hypot(dy);
            let w = bodies[j].mass / (r * r * r);
            g[k][0] += w * dx;
            g[k][1] += w * dy;
        }
    }
    Ok(g)
}

pub fn cc_residual(config: &CentralConfiguration) -> Result<CentralityReport, ConfigError> {
    let g = attraction(&config.bodies)?;
    let residuals: Vec<[f64; 2]> = config
        .bodies
        .iter()
        .zip(&g)
        .map(|(b, gk)| [b.position[0] + gk[0], b.position[1] + gk[1]])
        .collect();
    let max_norm = residuals
        .iter()
        .map(|r| r[0].hypot(r[1]))
        .fold(0.0, f64::max);
    Ok(CentralityReport {
        residuals,
        max_norm,
        lambda: None,
    })
}

/// Least-squares multiplier and fit residual of g_k + lambda a_k = 0.
pub fn lambda_fit(config: &CentralConfiguration) -> Result<(f64, f64), ConfigError> {
    let g = attraction(&config.bodies)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (b, gk) in config.bodies.iter().zip(&g) {
        num -= gk[0] * b.position[0] + gk[1] * b.position[1];
        den += b.position[0] * b.position[0] + b.position[1] * b.position[1];
    }
    if den == 0.0 {
        return Err(ConfigError::Parameter("all bodies at the origin".into()));
    }
    let lambda = num / den;
    let mut res = 0.0;
    let mut scale = 0.0;
    for (b, gk) in config.bodies.iter().zip(&g) {
        let rx = gk[0] + lambda * b.position[0];
        let ry = gk[1] + lambda * b.position[1];
        res += rx * rx + ry * ry;
        scale += gk[0] * gk[0] + gk[1] * gk[1];
    }
    Ok((lambda, (res / scale.max(f64::MIN_POSITIVE)).sqrt()))
}

/// Common multiplier lambda of a configuration central up to scale.
pub fn lambda_of(config: &CentralConfiguration) -> Result<f64, ConfigError> {
    let (lambda, resid) = lambda_fit(config)?;
    if resid > LAMBDA_FIT_TOL || lambda <= 0.0 {
        return Err(ConfigError::NotCentral(resid));
    }
    Ok(lambda)
}

pub fn centrality_report(config: &CentralConfiguration) -> Result<CentralityReport, ConfigError> {
    let mut report = cc_residual(config)?;
    report.lambda = lambda_of(config).ok();
    Ok(report)
}

/// Rescales positions by lambda^(1/3) so the centrality equation holds with unit multiplier.
pub fn normalize_omega(config: &CentralConfiguration) -> Result<CentralConfiguration, ConfigError> {
    let lambda = lambda_of(config)?;
    let c = lambda.cbrt();
    if c == 1.0 {
        return Ok(config.clone());
    }
    Ok(config.scaled(c))
}

pub fn build_rp3bp(mu: f64) -> Result<CentralConfiguration, ConfigError> {
    if !(mu > 0.0 && mu <= 0.5) {
        return Err(ConfigError::Parameter(format!("mu = {mu} outside (0, 1/2]")));
    }
    CentralConfiguration::new(
        format!("rp3bp(mu={mu})"),
        vec![
            PrimaryBody::new(mu, 1.0 - mu, 0.0),
            PrimaryBody::new(1.0 - mu, -mu, 0.0),
        ],
    )
}

pub fn build_equilateral(m1: f64, m2: f64) -> Result<CentralConfiguration, ConfigError> {
    if !(m1 > 0.0 && m2 > 0.0 && m1 + m2 < 1.0) {
        return Err(ConfigError::Parameter(format!(
            "masses m1 = {m1}, m2 = {m2} need m1, m2 > 0 and m1 + m2 < 1"
        )));
    }
    let m3 = 1.0 - m1 - m2;
    let h = 3f64.sqrt() / 2.0;
    CentralConfiguration::new(
        format!("equilateral(m1={m1},m2={m2})"),
        vec![
            PrimaryBody::new(m1, 0.5 * (1.0 - m1 - 2.0 * m2), h * (1.0 - m1)),
            PrimaryBody::new(m2, 0.5 * (2.0 - m1 - 2.0 * m2), -h * m1),
            PrimaryBody::new(m3, -0.5 * (m1 + 2.0 * m2), -h * m1),
        ],
    )
}

/// Rhombus (x, y, mu) from the shape parameters (a, b).
pub fn rhomboid_parameters(a: f64, b: f64) -> Result<(f64, f64, f64), ConfigError> {
    let s3 = 3f64.sqrt();
    // open region with a relative margin so rounding cannot admit the boundary
    let m = 1.0 + 1e-12;
    if !(b > 0.0 && a > 0.0 && b * m < s3 * a && s3 * a * m < 3.0 * b) {
        return Err(ConfigError::Parameter(format!(
            "(a, b) = ({a}, {b}) outside 0 < b < sqrt(3) a < 3 b"
        )));
    }
    let a3b3 = a.powi(3) * b.powi(3);
    let q = a * a + b * b;
    let q32 = q.powf(1.5);
    let den = 16.0 * a3b3 - (a.powi(3) + b.powi(3)) * q32;
    let k3 = (64.0 * a3b3 - q.powi(3)) / den;
    if !(k3 > 0.0) || !k3.is_finite() {
        return Err(ConfigError::Parameter(format!(
            "negative radicand {k3} for (a, b) = ({a}, {b})"
        )));
    }
    let k = k3.cbrt();
    let x = a / (2.0 * q.sqrt()) * k;
    let y = b / (2.0 * q.sqrt()) * k;
    let mu = a.powi(3) * (8.0 * b.powi(3) - q32) / (2.0 * den);
    if !(mu > 0.0 && mu < 0.5) {
        return Err(ConfigError::Parameter(format!("mu = {mu} outside (0, 1/2)")));
    }
    Ok((x, y, mu))
}

pub fn build_rhomboid(a: f64, b: f64) -> Result<CentralConfiguration, ConfigError> {
    let (x, y, mu) = rhomboid_parameters(a, b)?;
    CentralConfiguration::new(
        format!("rhomboid(a={a},b={b})"),
        vec![
            PrimaryBody::new(mu, -x, 0.0),
            PrimaryBody::new(0.5 - mu, 0.0, y),
            PrimaryBody::new(mu, x, 0.0),
            PrimaryBody::new(0.5 - mu, 0.0, -y),
        ],
    )
}

/// Collinear residual x_k + sum_j m_j sign(x_j - x_k)/(x_j - x_k)^2 and its Jacobian.
fn collinear_system(x: &[f64], m: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = x.len();
    let mut f = x.to_vec();
    let mut jac = vec![vec![0.0; n]; n];
    for k in 0..n {
        jac[k][k] = 1.0;
        for j in 0..n {
            if j == k {
                continue;
            }
            let d = x[j] - x[k];
            let ad = d.abs();
            f[k] += m[j] * d / (ad * ad * ad);
            let w = 2.0 * m[j] / (ad * ad * ad);
            jac[k][k] += w;
            jac[k][j] -= w;
        }
    }
    (f, jac)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Equal masses on a line, positions by damped Newton from equispaced points on [-1, 1].
pub fn solve_collinear_equal(n: usize) -> Result<CentralConfiguration, ConfigError> {
    if n < 2 {
        return Err(ConfigError::Parameter(format!("n = {n} < 2")));
    }
    let m = vec![1.0 / n as f64; n];
    let mut x: Vec<f64> = (0..n)
        .map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64)
        .collect();
    let (mut f, mut jac) = collinear_system(&x, &m);
    let mut r = norm(&f);
    let mut iters = 0;
    while r > NEWTON_TOL {
        if iters == NEWTON_MAX_ITERS {
            return Err(ConfigError::NoConvergence(r));
        }
        iters += 1;
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let dx = solve_linear(jac, neg).ok_or(ConfigError::NoConvergence(r))?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let (ft, jt) = collinear_system(&trial, &m);
                let rt = norm(&ft);
                if rt < r {
                    x = trial;
                    f = ft;
                    jac = jt;
                    r = rt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(ConfigError::NoConvergence(r));
            }
        }
    }
    // Newton preserves the reflection symmetry only up to rounding.
    for k in 0..n / 2 {
        let v = 0.5 * (x[n - 1 - k] - x[k]);
        x[k] = -v;
        x[n - 1 - k] = v;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    CentralConfiguration::new(
        format!("collinear_equal(n={n})"),
        x.iter().map(|&xk| PrimaryBody::new(m[0], xk, 0.0)).collect(),
    )
}

/// Equally spaced collinear bodies with masses chosen to make the shape central.
///
/// Masses are taken symmetric; for odd n the symmetric system leaves one free
/// parameter and the minimum-norm mass vector is returned. The spacing is then
/// rescaled so the multiplier is 1.
pub fn solve_collinear_equidistant(n: usize) -> Result<CentralConfiguration, ConfigError> {
    if n < 3 {
        return Err(ConfigError::Parameter(format!("n = {n} < 3")));
    }
    let x: Vec<f64> = (0..n).map(|k| k as f64 - 0.5 * (n - 1) as f64).collect();
    let half = n / 2;
    let nm = (n + 1) / 2;
    // unknowns: symmetric masses w_0..w_{nm-1} (w_i for body i and its mirror), then lambda
    let mirror = |j: usize| if j < nm { j } else { n - 1 - j };
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for k in 0..half {
        let mut row = vec![0.0; nm + 1];
        for j in 0..n {
            if j == k {
                continue;
            }
            let d = x[j] - x[k];
            row[mirror(j)] += d / (d.abs() * d * d);
        }
        row[nm] = x[k];
        rows.push(row);
        rhs.push(0.0);
    }
    let mut row = vec![2.0; nm + 1];
    row[nm] = 0.0;
    if n % 2 == 1 {
        row[nm - 1] = 1.0;
    }
    rows.push(row);
    rhs.push(1.0);

    let sol = if n % 2 == 0 {
        solve_linear(rows, rhs).ok_or(ConfigError::Singular)?
    } else {
        // minimize sum of squared masses subject to the constraints (KKT system)
        let nu = nm + 1;
        let nc = rows.len();
        let dim = nu + nc;
        let mut kkt = vec![vec![0.0; dim]; dim];
        for i in 0..nm {
            kkt[i][i] = if i == nm - 1 { 2.0 } else { 4.0 };
        }
        for (c, r) in rows.iter().enumerate() {
            for i in 0..nu {
                kkt[nu + c][i] = r[i];
                kkt[i][nu + c] = r[i];
            }
        }
        let mut b = vec![0.0; dim];
        for (c, v) in rhs.iter().enumerate() {
            b[nu + c] = *v;
        }
        let full = solve_linear(kkt, b).ok_or(ConfigError::Singular)?;
        full[..nu].to_vec()
    };
    let lambda = sol[nm];
    if !(lambda > 0.0) {
        return Err(ConfigError::Singular);
    }
    let scale = lambda.cbrt();
    let mut bodies = Vec::with_capacity(n);
    for k in 0..n {
        let mass = sol[mirror(k)];
        if !(mass > 0.0) {
            return Err(ConfigError::NonPositiveMass { index: k, mass });
        }
        bodies.push(PrimaryBody::new(mass, scale * x[k], 0.0));
    }
    let total: f64 = bodies.iter().map(|b| b.mass).sum();
    for b in &mut bodies {
        b.mass /= total;
    }
    CentralConfiguration::new(format!("collinear_equidistant(n={n})"), bodies)
}

/// Shape ratios a/b of the rhombus at which the coefficient c2 vanishes, ascending.
/// Sign changes on a grid are bisected until the bracket stops shrinking.
pub fn rhomboid_c2_roots(grid: usize) -> Result<Vec<f64>, ConfigError> {
    let s3 = 3f64.sqrt();
    let c2 = |a: f64| -> Result<f64, ConfigError> {
        Ok(crate::harmonics::c_coeffs(&build_rhomboid(a, 1.0)?).1)
    };
    let lo = 1.0 / s3 * (1.0 + 1e-6);
    let hi = s3 * (1.0 - 1e-6);
    let grid = grid.max(8);
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = c2(x0)?;
    for i in 1..=grid {
        let x1 = lo + (hi - lo) * i as f64 / grid as f64;
        let f1 = c2(x1)?;
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            loop {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = c2(m)?;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(roots)
}

/// Regular (N-1)-gon at the roots of unity with equal masses.
pub fn build_polygon(n_total: usize, normalize: bool) -> Result<CentralConfiguration, ConfigError> {
    if n_total < 4 {
        return Err(ConfigError::Parameter(format!("N = {n_total} < 4")));
    }
    let p = n_total - 1;
    let bodies = (0..p)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / p as f64;
            PrimaryBody::new(1.0 / p as f64, ang.cos(), ang.sin())
        })
        .collect();
    let config = CentralConfiguration::new(format!("polygon(N={n_total})"), bodies)?;
    if normalize {
        normalize_omega(&config)
    } else {
        Ok(config)
    }
}
