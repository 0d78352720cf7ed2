//! Heat flow of a measure, its squared norm `||f_{t/2}||^2 = sum |tau_hat(j)|^2 e^{-lambda_j t}`,
//! the small-time law `||f_{t/2}||^2 ~ (4 pi t)^{-k/2} ||psi||^2`, and the Tauberian
//! passage back to the counting function.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::counting::{CoefficientTable, CountingCurve, IndexedCoefficients};
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::spectra::eval_eigenfunction;

/// Minimal `t * lambda_max` for which truncation of the eigen-expansion is considered negligible.
pub const TRUNCATION_PRODUCT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatValue {
    pub value: f64,
    /// Estimated contribution of levels above `lambda_max`. A heuristic from a fitted
    /// power-law envelope, not a certified bound.
    pub tail_bound: f64,
    /// `t * lambda_max < 20`: the tail may dominate.
    pub truncation_warning: bool,
}

/// `sum_{lambda <= lambda_max} weight e^{-lambda t}`, accumulated from the top level down.
pub fn heat_norm_sq(table: &CoefficientTable, t: f64) -> Result<HeatValue> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let mut acc = KahanSum::new();
    for l in table.levels().iter().rev() {
        if l.weight != 0.0 {
            acc.add(l.weight * (-t * l.lambda).exp());
        }
    }
    let truncation_warning = t * table.lambda_max < TRUNCATION_PRODUCT;
    if truncation_warning {
        log::warn!(
            "t * lambda_max = {} < {TRUNCATION_PRODUCT}: truncation may dominate",
            t * table.lambda_max
        );
    }
    Ok(HeatValue {
        value: acc.value(),
        tail_bound: tail_estimate(table, t),
        truncation_warning,
    })
}

fn tail_estimate(table: &CoefficientTable, t: f64) -> f64 {
    let half = table.codim as f64 / 2.0;
    let lmax = table.lambda_max;
    let envelope = 1.5 * table.total_weight() / lmax.powf(half);
    let x = t * lmax;
    envelope * t.powf(-half) * gamma_ur(half + 1.0, x)
}

/// `f_t(x) = sum_j e^{-lambda_j t} tau_hat(j) phi_j(x)` over the tabulated indices.
pub fn heat_flow_eval(coeffs: &IndexedCoefficients, t: f64, x: &[f64]) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for (idx, lambda, c) in coeffs.entries.iter().rev() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let v = c * eval_eigenfunction(coeffs.catalog, idx, x)? * (-t * lambda).exp();
        re.add(v.re);
        im.add(v.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatSample {
    pub t: f64,
    pub norm_sq: f64,
    pub tail_bound: f64,
    /// `(4 pi t)^{-k/2} ||psi||^2`
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatCurve {
    pub codim: usize,
    pub samples: Vec<HeatSample>,
    /// `max ratio - min ratio` over the grid.
    pub drift: f64,
}

pub fn predicted_heat(k: usize, norm_sq: f64, t: f64) -> f64 {
    (4.0 * PI * t).powf(-(k as f64) / 2.0) * norm_sq
}

pub fn heat_diagnostic(table: &CoefficientTable, t_grid: &[f64]) -> Result<HeatCurve> {
    let minimal = TRUNCATION_PRODUCT / table.lambda_max;
    if let Some(&bad) = t_grid.iter().find(|&&t| !(t * table.lambda_max >= TRUNCATION_PRODUCT)) {
        return Err(Error::TruncationRule { given: bad, minimal });
    }
    let mut samples = t_grid
        .iter()
        .map(|&t| {
            let h = heat_norm_sq(table, t)?;
            let predicted = predicted_heat(table.codim, table.norm_sq, t);
            Ok(HeatSample {
                t,
                norm_sq: h.value,
                tail_bound: h.tail_bound,
                predicted,
                ratio: h.value / predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.ratio), hi.max(s.ratio)));
    Ok(HeatCurve {
        codim: table.codim,
        samples,
        drift: if hi >= lo { hi - lo } else { 0.0 },
    })
}

/// `count` log-uniform points in `[lo, hi]`.
pub fn log_uniform(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![hi],
        _ => (0..count)
            .map(|i| {
                if i == count - 1 {
                    hi
                } else {
                    lo * (hi / lo).powf(i as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}

/// rms residual of the free log-log fit above which a crosscheck is inconclusive.
pub const KARAMATA_RESIDUAL_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrosscheckStatus {
    Conclusive,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KaramataRecord {
    /// `-d log(norm_sq) / d log t` from a free least-squares fit.
    pub fitted_exponent: f64,
    /// `A` in `norm_sq ~ A t^{-k/2}`, fitted with the exponent held at `k/2`.
    pub amplitude: f64,
    pub fit_residual: f64,
    /// `(T, measured alpha, Tauberian alpha)` over the top decade of the counting curve.
    pub comparisons: Vec<(f64, f64, f64)>,
    pub max_relative_deviation: f64,
    pub status: CrosscheckStatus,
}

/// Fits the heat curve to a power law and pushes it through Karamata's theorem:
/// `norm_sq ~ A t^{-k/2}` implies `alpha(T) ~ A T^{k/2} / Gamma(k/2 + 1)`.
pub fn karamata_crosscheck(heat: &HeatCurve, counting: &CountingCurve, k: usize) -> Result<KaramataRecord> {
    let pts: Vec<(f64, f64)> = heat
        .samples
        .iter()
        .filter(|s| s.norm_sq > 0.0)
        .map(|s| (s.t.ln(), s.norm_sq.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("heat curve needs at least two positive samples".into()));
    }
    let half = k as f64 / 2.0;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("heat curve needs at least two distinct t".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fit_residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let amplitude = (pts.iter().map(|p| p.1 + half * p.0).sum::<f64>() / n).exp();
    let g = gamma(half + 1.0);
    let comparisons: Vec<(f64, f64, f64)> = counting
        .top_decade()
        .iter()
        .map(|s| (s.t, s.alpha, amplitude * s.t.powf(half) / g))
        .collect();
    let max_relative_deviation = comparisons
        .iter()
        .map(|&(_, a, p)| if a > 0.0 { (p - a).abs() / a } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let status = if fit_residual <= KARAMATA_RESIDUAL_LIMIT {
        CrosscheckStatus::Conclusive
    } else {
        CrosscheckStatus::Inconclusive
    };
    Ok(KaramataRecord {
        fitted_exponent: -slope,
        amplitude,
        fit_residual,
        comparisons,
        max_relative_deviation,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{build_coefficient_table, build_indexed_coefficients, stieltjes_laplace};
    use crate::density::{Density, TrigPoly};
    use crate::measures::MeasureSpec;
    use crate::spectra::SpectralCatalog;

    // Jacobi theta oracle sum_{n in Z} e^{-n^2 t}, summed directly to convergence.
    fn theta(t: f64) -> f64 {
        let mut s = 1.0;
        let mut n = 1.0f64;
        loop {
            let term = 2.0 * (-n * n * t).exp();
            s += term;
            if term < 1e-18 * s {
                return s;
            }
            n += 1.0;
        }
    }

    fn torus_delta(m: usize, lambda_max: f64) -> CoefficientTable {
        let c = SpectralCatalog::FlatTorus(m);
        let p = vec![0.2; m];
        build_coefficient_table(c, &MeasureSpec::point(c, &p, 1.0).unwrap(), lambda_max).unwrap()
    }

    #[test]
    fn torus_delta_heat_norm_matches_theta_square() {
        let table = torus_delta(2, 1e4);
        let t = 0.01;
        let h = heat_norm_sq(&table, t).unwrap();
        let want = theta(t).powi(2) / (4.0 * PI * PI);
        assert!((h.value - want).abs() < 1e-12 * want);
        assert!((4.0 * PI * t * h.value - 1.0).abs() < 1e-6);
        assert!(!h.truncation_warning);
        assert!(h.tail_bound >= 0.0 && h.tail_bound < 1e-30);
    }

    #[test]
    fn large_t_keeps_only_the_constant_mode() {
        let table = torus_delta(2, 50.0);
        let h = heat_norm_sq(&table, 60.0).unwrap();
        assert!((h.value - table.levels()[0].weight).abs() < 1e-20);
    }

    #[test]
    fn basis_density_has_unit_heat_norm_at_zero_mode() {
        let c = SpectralCatalog::FlatTorus(1);
        let psi = TrigPoly::constant(1, (2.0 * PI).powf(-0.5));
        let m = MeasureSpec::full(c, Density::Trig(psi)).unwrap();
        let table = build_coefficient_table(c, &m, 100.0).unwrap();
        for t in [1e-3, 0.5, 10.0] {
            assert!((heat_norm_sq(&table, t).unwrap().value - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonpositive_time_and_flags_truncation() {
        let table = torus_delta(1, 100.0);
        assert!(heat_norm_sq(&table, 0.0).is_err());
        assert!(heat_norm_sq(&table, 0.1).unwrap().truncation_warning);
        assert_eq!(
            heat_diagnostic(&table, &[0.5, 0.1]).unwrap_err(),
            Error::TruncationRule { given: 0.1, minimal: 0.2 }
        );
    }

    #[test]
    fn circle_heat_kernel_at_the_source() {
        let c = SpectralCatalog::FlatTorus(1);
        let p = [1.3];
        let coeffs = build_indexed_coefficients(&MeasureSpec::point(c, &p, 1.0).unwrap(), 400.0).unwrap();
        let t = 0.1;
        let v = heat_flow_eval(&coeffs, t, &p).unwrap();
        let want = theta(t) / (2.0 * PI);
        let table = torus_delta(1, 400.0);
        let tail = heat_norm_sq(&table, 2.0 * t).unwrap().tail_bound;
        assert!((v.re - want).abs() <= tail.max(1e-14), "{} vs {want}", v.re);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn heat_flow_equilibrates_to_the_mean() {
        let psi = TrigPoly::new(1).with_cos(&[1], 0.5).unwrap().with_term(&[0], Complex64::new(2.0, 0.0)).unwrap();
        let m = MeasureSpec::equator(psi).unwrap();
        let coeffs = build_indexed_coefficients(&m, 30.0).unwrap();
        let v = heat_flow_eval(&coeffs, 40.0, &[0.3, 1.0]).unwrap();
        // total mass 2 * 2 pi spread over area 4 pi
        assert!((v.re - 1.0).abs() < 1e-14 && v.im.abs() < 1e-14);
    }

    #[test]
    fn single_mode_flow_decays_at_its_eigenvalue() {
        let c = SpectralCatalog::FlatTorus(2);
        let psi = TrigPoly::new(2).with_term(&[1, 2], Complex64::new(1.0 / (2.0 * PI), 0.0)).unwrap();
        let m = MeasureSpec::full(c, Density::Trig(psi)).unwrap();
        let coeffs = build_indexed_coefficients(&m, 10.0).unwrap();
        let x = [0.4, 2.2];
        let t = 0.3;
        let v = heat_flow_eval(&coeffs, t, &x).unwrap();
        let want = Complex64::from_polar((-5.0 * t).exp() / (2.0 * PI), 0.4 + 4.4);
        assert!((v - want).norm() < 1e-15);
    }

    #[test]
    fn semigroup_identity_on_the_circle() {
        let c = SpectralCatalog::FlatTorus(1);
        let p = [0.9];
        let coeffs = build_indexed_coefficients(&MeasureSpec::point(c, &p, 1.0).unwrap(), 2500.0).unwrap();
        let (t, s) = (0.05, 0.08);
        let x = [2.0];
        let lhs = heat_flow_eval(&coeffs, t + s, &x).unwrap();
        // k_t(x, y) = k_t(y, x) on the circle; integrate k_t(x, .) k_s(., P) over a fine grid.
        let n = 512;
        let h = 2.0 * PI / n as f64;
        let x_coeffs = build_indexed_coefficients(&MeasureSpec::point(c, &x, 1.0).unwrap(), 2500.0).unwrap();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let y = [i as f64 * h];
            acc += heat_flow_eval(&x_coeffs, t, &y).unwrap() * heat_flow_eval(&coeffs, s, &y).unwrap() * h;
        }
        assert!((lhs - acc).norm() < 1e-8, "{lhs} vs {acc}");
    }

    #[test]
    fn laplace_transform_identity() {
        let table = torus_delta(3, 400.0);
        for t in [0.05, 0.2, 1.0] {
            let a = heat_norm_sq(&table, t).unwrap().value;
            let b = stieltjes_laplace(&table, t);
            assert!((a - b).abs() <= 1e-14 * a);
        }
    }

    #[test]
    fn heat_norm_is_decreasing_and_log_convex() {
        let m = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        let table = build_coefficient_table(SpectralCatalog::Sphere2, &m, 1e4).unwrap();
        let ts = log_uniform(2e-3, 1.0, 40);
        let logs: Vec<f64> = ts.iter().map(|&t| heat_norm_sq(&table, t).unwrap().value.ln()).collect();
        assert!(logs.windows(2).all(|w| w[1] < w[0]));
        let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        // log-convex in t (not log t): compare against chords in t.
        for i in 1..ts.len() - 1 {
            let (a, b, c) = (ts[i - 1], ts[i], ts[i + 1]);
            let chord = logs[i - 1] + (logs[i + 1] - logs[i - 1]) * (b - a) / (c - a);
            assert!(logs[i] <= chord + 1e-12, "{}", lt[i]);
        }
    }

    #[test]
    fn torus_heat_ratio() {
        let table = torus_delta(2, 1e4);
        let curve = heat_diagnostic(&table, &log_uniform(1e-2, 1e-1, 5)).unwrap();
        for s in &curve.samples {
            assert!((s.ratio - 1.0).abs() < 1e-5, "{s:?}");
        }
        assert!(curve.drift < 1e-5);
    }
}
