//! Dormand-Prince 5(4) with PI step control and the standard quartic dense output.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("tolerance {0} outside [1e-12, 1e-4]")]
    Tolerance(f64),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("more than {0} steps")]
    MaxSteps(usize),
    #[error("right-hand side failed at t = {t}: {msg}")]
    Rhs { t: f64, msg: String },
}

pub const MAX_STEPS: usize = 5_000_000;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const BETA: f64 = 0.04;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// One accepted step with its interpolant.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    r: [[f64; N]; 4],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let th = (t - self.t0) / h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.y0[i]
                + th * (self.r[0][i] + th1 * (self.r[1][i] + th * (self.r[2][i] + th1 * self.r[3][i])));
        }
        out
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = if self.t0 <= self.t1 { (self.t0, self.t1) } else { (self.t1, self.t0) };
        (a..=b).contains(&t)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Step points plus the dense segments between them.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub segments: Vec<DenseStep<N>>,
    pub stats: Stats,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }

    /// Dense value at t, None outside the integrated span.
    pub fn at(&self, t: f64) -> Option<[f64; N]> {
        let forward = self.t.last()? >= &self.t[0];
        let idx = self.segments.partition_point(|s| if forward { s.t1 < t } else { s.t1 > t });
        let seg = self.segments.get(idx)?;
        seg.contains(t).then(|| seg.eval(t))
    }
}

fn check_tol(tol: f64) -> Result<(), OdeError> {
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(OdeError::Tolerance(tol));
    }
    Ok(())
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn norm<const N: usize>(v: &[f64; N], y: &[f64; N], rtol: f64, atol: f64) -> f64 {
    let s: f64 = (0..N)
        .map(|i| {
            let sc = atol + rtol * y[i].abs();
            (v[i] / sc).powi(2)
        })
        .sum();
    (s / N as f64).sqrt()
}

/// Integrate from t0 to t1 (either direction). The observer sees every accepted step and
/// may stop the integration by returning false. Relative tolerance tol, absolute tol/10.
pub fn integrate_with<const N: usize, F, O>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: f64,
    mut observer: O,
) -> Result<(f64, [f64; N], Stats), OdeError>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], OdeError>,
    O: FnMut(&DenseStep<N>) -> bool,
{
    check_tol(tol)?;
    let rtol = tol;
    let atol = tol / 10.0;
    let mut stats = Stats::default();
    if t1 == t0 {
        return Ok((t0, y0, stats));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    stats.evaluations += 1;

    // initial step (Hairer's heuristic)
    let mut h = {
        let d0 = norm(&y, &y, rtol, atol);
        let d1 = norm(&k1, &y, rtol, atol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1 = axpy(&y, dir * h0, &[(1.0, &k1)]);
        let f1 = rhs(t + dir * h0, &y1)?;
        stats.evaluations += 1;
        let diff: [f64; N] = std::array::from_fn(|i| f1[i] - k1[i]);
        let d2 = norm(&diff, &y, rtol, atol) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    };
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= MAX_STEPS {
            return Err(OdeError::MaxSteps(MAX_STEPS));
        }
        let remaining = (t1 - t) * dir;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow(t));
        }
        let hs = dir * h;
        let k2 = rhs(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]))?;
        let k3 = rhs(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = rhs(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = rhs(
            t + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs(
            t + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let ynew = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let tnew = if last { t1 } else { t + hs };
        let k7 = rhs(tnew, &ynew)?;
        stats.evaluations += 6;
        let errv = axpy(
            &[0.0; N],
            hs,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let scale: [f64; N] = std::array::from_fn(|i| y[i].abs().max(ynew[i].abs()));
        let err = norm(&errv, &scale, rtol, atol);
        if !err.is_finite() {
            stats.rejected += 1;
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let fac = (fac11 / facold.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            facold = err.max(1e-4);
            let r1: [f64; N] = std::array::from_fn(|i| ynew[i] - y[i]);
            let r2: [f64; N] = std::array::from_fn(|i| hs * k1[i] - r1[i]);
            let r3: [f64; N] = std::array::from_fn(|i| r1[i] - hs * k7[i] - r2[i]);
            let r4 = axpy(
                &[0.0; N],
                hs,
                &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
            );
            let step = DenseStep {
                t0: t,
                t1: tnew,
                y0: y,
                y1: ynew,
                r: [r1, r2, r3, r4],
            };
            stats.accepted += 1;
            t = tnew;
            y = ynew;
            k1 = k7;
            last_rejected = false;
            if !observer(&step) || last {
                return Ok((t, y, stats));
            }
            h = hnew;
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
}

/// Integrate and keep every step with its interpolant.
pub fn integrate<const N: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: f64,
) -> Result<Trajectory<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], OdeError>,
{
    let mut tr = Trajectory {
        t: vec![t0],
        y: vec![y0],
        segments: Vec::new(),
        stats: Stats::default(),
    };
    let (_, _, stats) = integrate_with(rhs, t0, y0, t1, tol, |s| {
        tr.t.push(s.t1);
        tr.y.push(s.y1);
        tr.segments.push(s.clone());
        true
    })?;
    tr.stats = stats;
    Ok(tr)
}

/// First t in the step where g(y(t)) crosses zero, by bisection on the interpolant.
pub fn locate_crossing<const N: usize, G: Fn(&[f64; N]) -> f64>(
    step: &DenseStep<N>,
    g: G,
    xtol: f64,
) -> Option<f64> {
    let ga = g(&step.y0);
    let gb = g(&step.y1);
    if ga == 0.0 {
        return Some(step.t0);
    }
    if ga * gb > 0.0 {
        return None;
    }
    let (mut a, mut b, mut fa) = (step.t0, step.t1, ga);
    while (b - a).abs() > xtol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = g(&step.eval(m));
        if fm == 0.0 {
            return Some(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let tr = integrate(|_, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 2.0, 1e-10).unwrap();
        let (t, y) = tr.last();
        assert_eq!(t, 2.0);
        assert!((y[0] - 2f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_dense_and_backward() {
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let tr = integrate(f, 0.0, [0.0, 1.0], 10.0, 1e-11).unwrap();
        for &t in &[0.3, 2.71, 5.0, 9.99] {
            let v = tr.at(t).unwrap();
            assert!((v[0] - t.sin()).abs() < 1e-8, "t={t}");
        }
        let back = integrate(f, 0.0, [0.0, 1.0], -3.0, 1e-11).unwrap();
        assert!((back.last().1[0] - (-3f64).sin()).abs() < 1e-9);
        assert!((back.at(-1.5).unwrap()[0] - (-1.5f64).sin()).abs() < 1e-8);
    }

    #[test]
    fn crossing_and_stop() {
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let mut hit = None;
        integrate_with(f, 0.0, [0.0, 1.0], 10.0, 1e-11, |s| {
            if let Some(t) = locate_crossing(s, |y| y[0], 1e-13).filter(|&t| t > 1.0) {
                hit = Some(t);
                return false;
            }
            true
        })
        .unwrap();
        assert!((hit.unwrap() - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn rejects_tolerance() {
        let f = |_: f64, y: &[f64; 1]| Ok([y[0]]);
        assert!(matches!(integrate(f, 0.0, [1.0], 1.0, 1e-14), Err(OdeError::Tolerance(_))));
    }
}
