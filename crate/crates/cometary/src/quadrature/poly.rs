//! Integer polynomials for the harmonic integrands and their partial fractions in 1 + z^2.

/// Ascending integer coefficients.
pub type IntPoly = Vec<i128>;

pub fn binomial(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: i128 = 1;
    for i in 0..k {
        c = c * (n - i) as i128 / (i + 1) as i128;
    }
    c
}

fn trim(mut p: IntPoly) -> IntPoly {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
    p
}

/// Real and imaginary parts of (1 + i z)^n.
pub fn one_plus_iz_pow(n: u32) -> (IntPoly, IntPoly) {
    let mut re = vec![0; n as usize + 1];
    let mut im = vec![0; n as usize + 1];
    for k in 0..=n {
        let c = binomial(n, k);
        match k % 4 {
            0 => re[k as usize] = c,
            1 => im[k as usize] = c,
            2 => re[k as usize] = -c,
            _ => im[k as usize] = -c,
        }
    }
    (trim(re), trim(im))
}

/// Numerators of the generic order-j, harmonic-m Melnikov integrand.
///
/// The integrand is [(j+1) z sin chi + m cos chi] / (1+z^2)^(j+2), with
/// chi = delta (z + z^3/3) - 2 m arctan z. Expanding the arctangent part gives
/// [P cos phi + Q sin phi] / (1+z^2)^(j+2+m); returns (P, Q, j+2+m).
pub fn harmonic_numerators(j: u32, m: u32) -> (IntPoly, IntPoly, u32) {
    let (r, i) = one_plus_iz_pow(2 * m);
    let deg = r.len().max(i.len()) + 1;
    let mut p = vec![0i128; deg];
    let mut q = vec![0i128; deg];
    let jj = (j + 1) as i128;
    let mm = m as i128;
    for (k, &c) in r.iter().enumerate() {
        p[k] += mm * c;
        q[k + 1] += jj * c;
    }
    for (k, &c) in i.iter().enumerate() {
        p[k + 1] -= jj * c;
        q[k] += mm * c;
    }
    (trim(p), trim(q), j + 2 + m)
}

pub fn degree(p: &[f64]) -> Option<usize> {
    p.iter().rposition(|&c| c != 0.0)
}

pub fn horner(p: &[f64], z: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

/// p(z) / (1+z^2)^k, evaluated in 1/z for |z| > 1 to avoid overflow.
pub fn rational(p: &[f64], k: i32, z: f64) -> f64 {
    if z.abs() <= 1.0 {
        return horner(p, z) / (1.0 + z * z).powi(k);
    }
    let Some(d) = degree(p) else { return 0.0 };
    let w = 1.0 / z;
    let rev = p[..=d].iter().fold(0.0, |acc, &c| acc * w + c);
    rev * w.powi(2 * k - d as i32) / (1.0 + w * w).powi(k)
}

/// Keep the even-power (parity 0) or odd-power (parity 1) terms.
pub fn parity_part(p: &[f64], parity: usize) -> Vec<f64> {
    p.iter()
        .enumerate()
        .map(|(i, &c)| if i % 2 == parity { c } else { 0.0 })
        .collect()
}

/// Coefficients of P(u - 1) in powers of u, for P given in powers of v.
pub fn shift_minus_one(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n];
    for (i, &c) in p.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for l in 0..=i {
            let sign = if (i - l) % 2 == 0 { 1.0 } else { -1.0 };
            out[l] += c * sign * binomial(i as u32, l as u32) as f64;
        }
    }
    out
}

/// Partial fractions of an even numerator E(z) over (1+z^2)^k: returns (e_l) with
/// E/(1+z^2)^k = sum_l e_l / (1+z^2)^(k-l).
pub fn even_partial_fractions(even: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = even.iter().step_by(2).copied().collect();
    shift_minus_one(&v)
}

/// Same for an odd numerator O(z) = z S(z^2): O/(1+z^2)^k = z sum_l g_l/(1+z^2)^(k-l).
pub fn odd_partial_fractions(odd: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = odd.iter().skip(1).step_by(2).copied().collect();
    shift_minus_one(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_row() {
        assert_eq!(
            (0..=6).map(|k| binomial(6, k)).collect::<Vec<_>>(),
            vec![1, 6, 15, 20, 15, 6, 1]
        );
        assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
    }

    #[test]
    fn power_expansion() {
        let (r, i) = one_plus_iz_pow(4);
        assert_eq!(r, vec![1, 0, -6, 0, 1]);
        assert_eq!(i, vec![0, 4, 0, -4]);
    }

    #[test]
    fn rational_branches_agree() {
        let p = [2.0, 0.0, -24.0, 0.0, 14.0];
        for &z in &[0.99, 1.0, 1.01, 3.0, -7.5] {
            let direct = horner(&p, z) / (1.0 + z * z).powi(6);
            assert!((rational(&p, 6, z) - direct).abs() <= 1e-13 * direct.abs());
        }
    }

    #[test]
    fn partial_fractions_reconstruct() {
        let even = [2.0, 0.0, -24.0, 0.0, 14.0];
        let e = even_partial_fractions(&even);
        for &z in &[0.3, 1.7] {
            let u: f64 = 1.0 + z * z;
            let lhs = horner(&even, z) / u.powi(6);
            let rhs: f64 = e.iter().enumerate().map(|(l, c)| c / u.powi(6 - l as i32)).sum();
            assert!((lhs - rhs).abs() < 1e-14);
        }
        let odd = [0.0, 11.0, 0.0, -26.0, 0.0, 3.0];
        let g = odd_partial_fractions(&odd);
        for &z in &[0.3, 1.7] {
            let u: f64 = 1.0 + z * z;
            let lhs = horner(&odd, z) / u.powi(6);
            let rhs: f64 = g.iter().enumerate().map(|(l, c)| z * c / u.powi(6 - l as i32)).sum();
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }
}
