//! Orthonormalized associated Legendre functions.
//!
//! `normalized(l, m, x)` is `sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!) * P_l^m(x)` with the
//! Condon-Shortley phase, so that `Y_l^m(theta, phi) = normalized(l, m, cos theta) e^{i m phi}`
//! is orthonormal on the unit sphere.

use std::f64::consts::PI;

#[inline]
fn recurrence_coeff(l: u32, m: u32) -> f64 {
    let (l, m) = (l as f64, m as f64);
    ((4.0 * l * l - 1.0) / (l * l - m * m)).sqrt()
}

/// `P̄_m^m` evaluated from the sine of the colatitude.
fn sectoral(m: u32, sin_theta: f64) -> f64 {
    let mut p = 0.5 / PI.sqrt();
    for i in 1..=m {
        let i = i as f64;
        p *= -((2.0 * i + 1.0) / (2.0 * i)).sqrt() * sin_theta;
    }
    p
}

/// Single value `P̄_l^m(cos theta)` by upward recurrence in `l` at fixed `m`.
///
/// `sin_theta` is passed separately so that values near the poles keep full
/// relative precision.
pub fn normalized(l: u32, m: u32, cos_theta: f64, sin_theta: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let pmm = sectoral(m, sin_theta);
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = (2.0 * m as f64 + 3.0).sqrt() * cos_theta * pmm;
    let mut a_prev = recurrence_coeff(m + 1, m);
    for ll in (m + 2)..=l {
        let a = recurrence_coeff(ll, m);
        let next = a * (cos_theta * cur - prev / a_prev);
        prev = cur;
        cur = next;
        a_prev = a;
    }
    cur
}

/// All `P̄_l^m(x)` for `0 <= m <= l <= lmax` at a single point.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    lmax: u32,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(lmax: u32, cos_theta: f64, sin_theta: f64) -> Self {
        let n = (lmax as usize + 1) * (lmax as usize + 2) / 2;
        let mut values = vec![0.0; n];
        let mut pmm = 0.5 / PI.sqrt();
        for m in 0..=lmax {
            if m > 0 {
                let mf = m as f64;
                pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta;
            }
            values[Self::offset(m, m)] = pmm;
            if m == lmax {
                break;
            }
            let mut prev = pmm;
            let mut cur = (2.0 * m as f64 + 3.0).sqrt() * cos_theta * pmm;
            values[Self::offset(m + 1, m)] = cur;
            let mut a_prev = recurrence_coeff(m + 1, m);
            for l in (m + 2)..=lmax {
                let a = recurrence_coeff(l, m);
                let next = a * (cos_theta * cur - prev / a_prev);
                values[Self::offset(l, m)] = next;
                prev = cur;
                cur = next;
                a_prev = a;
            }
        }
        Self { lmax, values }
    }

    #[inline]
    fn offset(l: u32, m: u32) -> usize {
        l as usize * (l as usize + 1) / 2 + m as usize
    }

    pub fn lmax(&self) -> u32 {
        self.lmax
    }

    /// `P̄_l^m`, or `None` outside the table.
    pub fn get(&self, l: u32, m: u32) -> Option<f64> {
        (m <= l && l <= self.lmax).then(|| self.values[Self::offset(l, m)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: P_l(0) = (-1)^{l/2} (l-1)!!/l!! for even l, 0 for odd l,
    // accumulated as a running product.
    fn legendre_at_zero(l: u32) -> f64 {
        if l % 2 == 1 {
            return 0.0;
        }
        let mut p = 1.0;
        let mut k = 2;
        while k <= l {
            p *= -((k - 1) as f64) / k as f64;
            k += 2;
        }
        p
    }

    #[test]
    fn zonal_values_at_equator_match_double_factorial_formula() {
        for l in 0..=2000u32 {
            let got = normalized(l, 0, 0.0, 1.0);
            let want = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * legendre_at_zero(l);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-3), "l={l}: {got} vs {want}");
        }
    }

    #[test]
    fn p2_at_zero() {
        let want = (5.0 / (4.0 * PI)).sqrt() * -0.5;
        assert!((normalized(2, 0, 0.0, 1.0) - want).abs() < 1e-15);
    }

    #[test]
    fn low_degree_closed_forms() {
        let theta: f64 = 0.7;
        let (c, s) = (theta.cos(), theta.sin());
        // Y_1^1 = -sqrt(3/(8 pi)) sin(theta) e^{i phi}
        let want11 = -(3.0 / (8.0 * PI)).sqrt() * s;
        assert!((normalized(1, 1, c, s) - want11).abs() < 1e-15);
        // Y_2^1 = -sqrt(15/(8 pi)) sin cos
        let want21 = -(15.0 / (8.0 * PI)).sqrt() * s * c;
        assert!((normalized(2, 1, c, s) - want21).abs() < 1e-15);
        // Y_2^2 = sqrt(15/(32 pi)) sin^2
        let want22 = (15.0 / (32.0 * PI)).sqrt() * s * s;
        assert!((normalized(2, 2, c, s) - want22).abs() < 1e-15);
    }

    #[test]
    fn table_agrees_with_single_evaluation() {
        let theta: f64 = 1.1;
        let table = LegendreTable::new(60, theta.cos(), theta.sin());
        for l in 0..=60 {
            for m in 0..=l {
                let a = table.get(l, m).unwrap();
                let b = normalized(l, m, theta.cos(), theta.sin());
                assert!((a - b).abs() < 1e-14, "{l} {m}");
            }
        }
        assert!(table.get(61, 0).is_none());
    }

    #[test]
    fn addition_theorem_sum_is_flat() {
        // sum_m |Y_l^m|^2 = (2l+1)/(4 pi) at every point.
        let theta: f64 = 0.3;
        let table = LegendreTable::new(500, theta.cos(), theta.sin());
        for l in [0u32, 1, 10, 100, 500] {
            let mut s = table.get(l, 0).unwrap().powi(2);
            for m in 1..=l {
                s += 2.0 * table.get(l, m).unwrap().powi(2);
            }
            let want = (2 * l + 1) as f64 / (4.0 * PI);
            assert!((s - want).abs() < 1e-11 * want, "l={l}");
        }
    }
}
