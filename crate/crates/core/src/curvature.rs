//! Numerical checks of the geometric estimates behind the heat asymptotics:
//! principal curvatures of geodesic spheres from the scalar Riccati equation
//! `k' = k^2 + K`, the Hessian of `rho_x = d(x, .)^2 - d(x, N)^2` on `N`, and the
//! Gaussian-type integral `(4 pi t)^{-n/2} \int_N e^{-rho_x / 4t} g d nu`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;

use crate::density::TrigPoly;
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::measures::{MeasureSpec, Submanifold};
use crate::spectra::{normalize_sphere_point, wrap_angle, SpectralCatalog};

/// Principal curvature of a geodesic sphere of radius `s` in constant curvature `K`.
///
/// Sign convention: `-1/s` in flat space; each value solves `k' = k^2 + K`.
pub fn model_shape_value(curvature: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    if curvature == 0.0 {
        return Ok(-1.0 / s);
    }
    let r = curvature.abs().sqrt();
    if curvature > 0.0 {
        if s * r >= PI {
            return Err(Error::ConjugatePoint(s * r));
        }
        Ok(-r / (s * r).tan())
    } else {
        Ok(-r / (s * r).tanh())
    }
}

/// Comparison envelope for geodesic-sphere curvatures when `|K| <= lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeBounds {
    pub lo: f64,
    /// `+inf` once `s sqrt(lambda) >= pi/2`.
    pub hi: f64,
}

impl ShapeBounds {
    pub fn upper_is_finite(&self) -> bool {
        self.hi.is_finite()
    }
}

/// `-sqrt(l)/tanh(s sqrt(l)) <= k <= -sqrt(l)/tan(s sqrt(l))`, flat limit `(-1/s, -1/s)`.
pub fn sphere_shape_bounds(lambda: f64, s: f64) -> Result<ShapeBounds> {
    if !(lambda >= 0.0) || !(s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need lambda >= 0 and s > 0, got lambda = {lambda}, s = {s}"
        )));
    }
    if lambda == 0.0 {
        return Ok(ShapeBounds {
            lo: -1.0 / s,
            hi: -1.0 / s,
        });
    }
    let r = lambda.sqrt();
    let lo = -r / (s * r).tanh();
    let hi = if s * r >= FRAC_PI_2 {
        log::debug!("s sqrt(lambda) = {} >= pi/2: upper bound reported as +inf", s * r);
        f64::INFINITY
    } else {
        -r / (s * r).tan()
    };
    Ok(ShapeBounds { lo, hi })
}

/// Hessian envelope on `N` at the foot point: `(lo, hi)` with
/// `lo = 2 d sqrt(l)/tan(d sqrt(l)) - 2 kappa d`, `hi = 2 d sqrt(l)/tanh(d sqrt(l)) + 2 kappa d`.
pub fn hessian_bounds(d: f64, kappa: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(d > 0.0) || !(kappa >= 0.0) || !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need d > 0, kappa >= 0, lambda >= 0; got {d}, {kappa}, {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok((2.0 - 2.0 * kappa * d, 2.0 + 2.0 * kappa * d));
    }
    let x = d * lambda.sqrt();
    if x >= FRAC_PI_2 {
        log::debug!("d sqrt(lambda) = {x} >= pi/2: lower bound is not meaningful");
    }
    Ok((2.0 * x / x.tan() - 2.0 * kappa * d, 2.0 * x / x.tanh() + 2.0 * kappa * d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiTrace {
    /// `(s, k(s))` at uniformly spaced sample points.
    pub samples: Vec<(f64, f64)>,
    /// Where `k` ran off to `-inf` before `s_end`, if it did.
    pub blow_up: Option<f64>,
}

impl RiccatiTrace {
    /// Samples outside the `lambda` envelope, restricted to where the upper bound is finite.
    pub fn envelope_violations(&self, lambda: f64, slack: f64) -> Vec<(f64, f64, ShapeBounds)> {
        self.samples
            .iter()
            .filter_map(|&(s, k)| {
                let b = sphere_shape_bounds(lambda, s).ok()?;
                if !b.upper_is_finite() {
                    return None;
                }
                let tol = slack * (1.0 + k.abs());
                (k < b.lo - tol || k > b.hi + tol).then_some((s, k, b))
            })
            .collect()
    }
}

/// Adaptive Dormand-Prince 5(4) integration of `k' = k^2 + K(s)` from the singular start
/// `k(s_start) = -1/s_start + K(s_start) s_start / 3`, sampled at `steps + 1` points.
pub fn riccati_integrate(
    profile: impl Fn(f64) -> f64,
    s_start: f64,
    s_end: f64,
    steps: usize,
) -> Result<RiccatiTrace> {
    if !(s_start > 0.0 && s_end > s_start) || steps == 0 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < s_start < s_end and steps > 0, got {s_start}, {s_end}, {steps}"
        )));
    }
    let rhs = |s: f64, k: f64| k * k + profile(s);
    let mut k = -1.0 / s_start + profile(s_start) * s_start / 3.0;
    let mut s = s_start;
    let mut samples = vec![(s, k)];
    let mut h = 1e-3 * s_start;
    const RTOL: f64 = 1e-12;
    const ATOL: f64 = 1e-13;
    const BLOW_UP: f64 = 1e10;
    for i in 1..=steps {
        let target = if i == steps {
            s_end
        } else {
            s_start + (s_end - s_start) * i as f64 / steps as f64
        };
        while s < target {
            let step = h.min(target - s);
            let (k_new, err) = dopri_step(&rhs, s, k, step);
            let scale = ATOL + RTOL * k.abs().max(k_new.abs());
            let ratio = err / scale;
            if ratio <= 1.0 && k_new.is_finite() {
                s = if step == target - s { target } else { s + step };
                k = k_new;
                if k.abs() > BLOW_UP {
                    return Ok(RiccatiTrace {
                        samples,
                        blow_up: Some(s),
                    });
                }
            }
            let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
            if h < 1e-14 * s.max(1.0) {
                return Ok(RiccatiTrace {
                    samples,
                    blow_up: Some(s),
                });
            }
        }
        samples.push((target, k));
    }
    Ok(RiccatiTrace {
        samples,
        blow_up: None,
    })
}

fn dopri_step(f: &impl Fn(f64, f64) -> f64, s: f64, y: f64, h: f64) -> (f64, f64) {
    let k1 = f(s, y);
    let k2 = f(s + h / 5.0, y + h * (k1 / 5.0));
    let k3 = f(s + 3.0 * h / 10.0, y + h * (3.0 * k1 / 40.0 + 9.0 * k2 / 40.0));
    let k4 = f(s + 4.0 * h / 5.0, y + h * (44.0 * k1 / 45.0 - 56.0 * k2 / 15.0 + 32.0 * k3 / 9.0));
    let k5 = f(
        s + 8.0 * h / 9.0,
        y + h * (19372.0 * k1 / 6561.0 - 25360.0 * k2 / 2187.0 + 64448.0 * k3 / 6561.0 - 212.0 * k4 / 729.0),
    );
    let k6 = f(
        s + h,
        y + h
            * (9017.0 * k1 / 3168.0 - 355.0 * k2 / 33.0 + 46732.0 * k3 / 5247.0 + 49.0 * k4 / 176.0
                - 5103.0 * k5 / 18656.0),
    );
    let y5 = y + h * (35.0 * k1 / 384.0 + 500.0 * k3 / 1113.0 + 125.0 * k4 / 192.0 - 2187.0 * k5 / 6784.0
        + 11.0 * k6 / 84.0);
    let k7 = f(s + h, y5);
    let y4 = y + h
        * (5179.0 * k1 / 57600.0 + 7571.0 * k3 / 16695.0 + 393.0 * k4 / 640.0 - 92097.0 * k5 / 339200.0
            + 187.0 * k6 / 2100.0
            + k7 / 40.0);
    (y5, (y5 - y4).abs())
}

/// Geodesic distance on a catalog manifold.
pub fn ambient_distance(catalog: SpectralCatalog, x: &[f64], y: &[f64]) -> f64 {
    match catalog {
        SpectralCatalog::FlatTorus(_) => x
            .iter()
            .zip(y)
            .map(|(&a, &b)| periodic_gap(a, b).powi(2))
            .sum::<f64>()
            .sqrt(),
        SpectralCatalog::Sphere2 => {
            let u = unit_vector(x[0], x[1]);
            let v = unit_vector(y[0], y[1]);
            let cross = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
            let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            // Equal to arccos(u . v) but accurate for nearby points.
            sin.atan2(cos)
        }
    }
}

/// Shortest signed separation of two angles, in `[-pi, pi]`.
fn periodic_gap(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// A probe point near a catalog submanifold and a unit tangent direction at its foot point.
#[derive(Debug, Clone)]
pub struct GeodesicProbeConfig {
    measure: MeasureSpec,
    x: Vec<f64>,
    direction: Vec<f64>,
    /// Initial finite-difference step (radians).
    pub initial_step: f64,
    /// Richardson extrapolation depth.
    pub depth: usize,
}

impl GeodesicProbeConfig {
    pub fn new(measure: MeasureSpec, x: &[f64], direction: &[f64]) -> Result<Self> {
        let m = measure.ambient().dimension();
        if x.len() != m {
            return Err(Error::InvalidArgument(format!("probe point needs {m} coordinates")));
        }
        if let Submanifold::FullManifold = measure.submanifold() {
            if measure.ambient() == SpectralCatalog::Sphere2 {
                return Err(Error::Unsupported("probes need a proper submanifold or a torus".into()));
            }
        }
        let n = measure.dim();
        if direction.len() != n {
            return Err(Error::InvalidArgument(format!("tangent direction needs {n} components")));
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0 && (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("tangent direction has norm {norm}, not 1")));
        }
        let cfg = Self {
            measure,
            x: x.to_vec(),
            direction: direction.to_vec(),
            initial_step: 1e-2,
            depth: 3,
        };
        let d = cfg.distance_to_support();
        let eta = cfg.tubular_radius();
        if !(d < eta) {
            return Err(Error::InvalidArgument(format!(
                "probe at distance {d} is outside the tubular radius {eta}"
            )));
        }
        Ok(cfg)
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }

    pub fn point(&self) -> &[f64] {
        &self.x
    }

    /// Radius within which the foot point is unique.
    pub fn tubular_radius(&self) -> f64 {
        match (self.measure.ambient(), self.measure.submanifold()) {
            (SpectralCatalog::Sphere2, Submanifold::Equator) => FRAC_PI_2,
            (_, Submanifold::FullManifold) => f64::INFINITY,
            _ => PI,
        }
    }

    /// Intrinsic coordinates of the nearest point `Pi(x)` of `N`.
    pub fn foot_point(&self) -> Vec<f64> {
        match self.measure.submanifold() {
            Submanifold::Point(_) => vec![],
            Submanifold::SubTorus { dim, .. } => self.x[..*dim].iter().map(|&a| wrap_angle(a)).collect(),
            Submanifold::Equator => {
                let (_, phi) = normalize_sphere_point(self.x[0], self.x[1]);
                vec![phi]
            }
            Submanifold::FullManifold => self.x.iter().map(|&a| wrap_angle(a)).collect(),
        }
    }

    /// `d_M(x, N)`.
    pub fn distance_to_support(&self) -> f64 {
        match self.measure.submanifold() {
            Submanifold::Point(p) => ambient_distance(self.measure.ambient(), &self.x, p),
            Submanifold::SubTorus { dim, offset } => self.x[*dim..]
                .iter()
                .zip(offset)
                .map(|(&a, &o)| periodic_gap(a, o).powi(2))
                .sum::<f64>()
                .sqrt(),
            Submanifold::Equator => {
                let (theta, _) = normalize_sphere_point(self.x[0], self.x[1]);
                (FRAC_PI_2 - theta).abs()
            }
            Submanifold::FullManifold => 0.0,
        }
    }

    /// Point of `N` reached from the foot point along `direction` for arclength `s`.
    fn along(&self, direction: &[f64], s: f64) -> Vec<f64> {
        let foot = self.foot_point();
        let y: Vec<f64> = foot.iter().zip(direction).map(|(a, z)| a + s * z).collect();
        self.measure.embed(&y)
    }

    fn rho_along(&self, direction: &[f64], s: f64, d_sq: f64) -> f64 {
        let y = self.along(direction, s);
        ambient_distance(self.measure.ambient(), &self.x, &y).powi(2) - d_sq
    }
}

/// `rho_x(y) = d(x, y)^2 - d(x, N)^2` for an ambient point `y`.
pub fn rho_value(config: &GeodesicProbeConfig, y: &[f64]) -> f64 {
    let d = config.distance_to_support();
    ambient_distance(config.measure.ambient(), &config.x, y).powi(2) - d * d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianEstimate {
    pub value: f64,
    /// Difference between the last two diagonal Richardson entries.
    pub error_estimate: f64,
}

/// `(rho_x o c)''(0)` along the configured geodesic of `N` by Richardson-extrapolated
/// central second differences.
pub fn rho_hessian_fd(config: &GeodesicProbeConfig) -> Result<HessianEstimate> {
    if config.measure.dim() == 0 {
        return Err(Error::Unsupported("a point has no tangent directions".into()));
    }
    second_derivative(config, &config.direction)
}

fn second_derivative(config: &GeodesicProbeConfig, direction: &[f64]) -> Result<HessianEstimate> {
    let d = config.distance_to_support();
    let d_sq = d * d;
    let f = |s: f64| config.rho_along(direction, s, d_sq);
    let f0 = f(0.0);
    let depth = config.depth;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
    let mut h = config.initial_step;
    for i in 0..=depth {
        let mut row = vec![(f(h) - 2.0 * f0 + f(-h)) / (h * h)];
        for j in 1..=i {
            let factor = 4f64.powi(j as i32);
            let prev = &table[i - 1];
            row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0));
        }
        table.push(row);
        h /= 2.0;
    }
    let diag: Vec<f64> = (0..=depth).map(|i| table[i][i]).collect();
    let value = diag[depth];
    let error_estimate = if depth > 0 { (diag[depth] - diag[depth - 1]).abs() } else { f64::NAN };
    if depth > 1 {
        let previous = (diag[depth - 1] - diag[depth - 2]).abs();
        if error_estimate > previous && error_estimate > 1e-6 {
            return Err(Error::NumericalInstability(format!(
                "Richardson corrections grow: {previous:e} then {error_estimate:e} (diagonal {diag:?})"
            )));
        }
    }
    if !value.is_finite() {
        return Err(Error::NumericalInstability(format!("non-finite second difference {diag:?}")));
    }
    Ok(HessianEstimate { value, error_estimate })
}

/// Full Hessian of `rho_x` on `N` at the foot point in the coordinate frame of `N`,
/// which is orthonormal for every catalog submanifold.
pub fn rho_hessian_matrix(config: &GeodesicProbeConfig) -> Result<(DMatrix<f64>, f64)> {
    let n = config.measure.dim();
    let mut hess = DMatrix::zeros(n, n);
    let mut err: f64 = 0.0;
    let basis = |i: usize| -> Vec<f64> { (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect() };
    for i in 0..n {
        let e = second_derivative(config, &basis(i))?;
        hess[(i, i)] = e.value;
        err = err.max(e.error_estimate);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let u: Vec<f64> = (0..n).map(|k| if k == i || k == j { s } else { 0.0 }).collect();
            let e = second_derivative(config, &u)?;
            let off = e.value - 0.5 * (hess[(i, i)] + hess[(j, j)]);
            hess[(i, j)] = off;
            hess[(j, i)] = off;
            err = err.max(e.error_estimate);
        }
    }
    Ok((hess, err))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceValue {
    /// `(4 pi t)^{-n/2} \int_N e^{-rho_x / 4t} Re g d nu`
    pub value: f64,
    /// `2^{n/2} g(Pi(x)) / sqrt(det Hess rho_x)`
    pub limit_target: f64,
    pub hessian_det: f64,
}

/// Smallest per-axis resolution whose node spacing does not exceed `sqrt(t)`.
pub fn laplace_min_resolution(t: f64) -> usize {
    (2.0 * PI / t.sqrt()).ceil() as usize
}

/// Gaussian-type integral over `N` by the trapezoidal rule, together with its
/// small-`t` limit from the finite-difference Hessian. `g` is a trig polynomial in the
/// intrinsic angles of `N`; its real part is integrated.
pub fn laplace_method_value(
    config: &GeodesicProbeConfig,
    g: &TrigPoly,
    t: f64,
    resolution: usize,
) -> Result<LaplaceValue> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let n = config.measure.dim();
    if g.dim() != n {
        return Err(Error::InvalidArgument(format!("g must be a trig polynomial in {n} angles")));
    }
    let foot = config.foot_point();
    let g_foot = g.eval(&foot).re;
    if n == 0 {
        let y = config.measure.embed(&[]);
        let rho = rho_value(config, &y);
        return Ok(LaplaceValue {
            value: g_foot * (-rho / (4.0 * t)).exp(),
            limit_target: g_foot,
            hessian_det: 1.0,
        });
    }
    let minimal = laplace_min_resolution(t);
    if resolution < minimal {
        return Err(Error::ResolutionTooCoarse {
            given: resolution,
            minimal,
        });
    }
    let d = config.distance_to_support();
    let d_sq = d * d;
    let h = 2.0 * PI / resolution as f64;
    let count = resolution.pow(n as u32);
    let mut acc = KahanSum::new();
    let mut y = vec![0.0; n];
    for flat in 0..count {
        let mut rest = flat;
        for axis in (0..n).rev() {
            y[axis] = (rest % resolution) as f64 * h;
            rest /= resolution;
        }
        let amb = config.measure.embed(&y);
        let rho = ambient_distance(config.measure.ambient(), &config.x, &amb).powi(2) - d_sq;
        let w = (-rho / (4.0 * t)).exp();
        if w > 0.0 {
            acc.add(w * g.eval(&y).re);
        }
    }
    let value = (4.0 * PI * t).powf(-(n as f64) / 2.0) * h.powi(n as i32) * acc.value();
    let (hess, _) = rho_hessian_matrix(config)?;
    let hessian_det = hess.determinant();
    if !(hessian_det > 0.0) {
        return Err(Error::NumericalInstability(format!(
            "Hessian determinant {hessian_det} is not positive"
        )));
    }
    Ok(LaplaceValue {
        value,
        limit_target: 2f64.powf(n as f64 / 2.0) * g_foot / hessian_det.sqrt(),
        hessian_det,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceRate {
    /// `(t, |value - limit_target|)`
    pub errors: Vec<(f64, f64)>,
    /// `p` in `error ~ C t^p` from a least-squares fit in log-log.
    pub exponent: f64,
    pub constant: f64,
}

/// Convergence rate of the Laplace-method integral over a set of times.
pub fn laplace_rate(config: &GeodesicProbeConfig, g: &TrigPoly, ts: &[f64]) -> Result<LaplaceRate> {
    let errors = ts
        .iter()
        .map(|&t| {
            let v = laplace_method_value(config, g, t, laplace_min_resolution(t).max(64))?;
            Ok((t, (v.value - v.limit_target).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = errors.iter().map(|&(t, e)| (t.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    Ok(LaplaceRate {
        errors,
        exponent,
        constant: (my - exponent * mx).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn flat_circle_probe(d: f64) -> GeodesicProbeConfig {
        let c = SpectralCatalog::FlatTorus(2);
        let m = MeasureSpec::subtorus(c, 1, &[0.0], TrigPoly::constant(1, 1.0)).unwrap();
        GeodesicProbeConfig::new(m, &[1.0, d], &[1.0]).unwrap()
    }

    fn equator_probe(d: f64) -> GeodesicProbeConfig {
        let m = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        GeodesicProbeConfig::new(m, &[FRAC_PI_2 - d, 0.7], &[1.0]).unwrap()
    }

    #[test]
    fn model_values() {
        assert_eq!(model_shape_value(0.0, 2.0).unwrap(), -0.5);
        assert!(model_shape_value(1.0, FRAC_PI_2).unwrap().abs() < 1e-16);
        assert!((model_shape_value(-1.0, 1.0).unwrap() + 1.0 / 1f64.tanh()).abs() < 1e-15);
        assert_eq!(model_shape_value(4.0, 2.0).unwrap_err(), Error::ConjugatePoint(4.0));
    }

    #[test]
    fn model_values_solve_the_riccati_equation() {
        for kk in [-2.0, -1.0, 0.0, 0.5, 1.0] {
            for s in [0.1, 0.7, 1.3] {
                let h = 1e-5;
                let d = (model_shape_value(kk, s + h).unwrap() - model_shape_value(kk, s - h).unwrap()) / (2.0 * h);
                let k = model_shape_value(kk, s).unwrap();
                assert!((d - (k * k + kk)).abs() < 1e-5, "K={kk} s={s}");
            }
        }
    }

    #[test]
    fn negative_curvature_against_numeric_ode() {
        // Independent check: fixed-step RK4 on k' = k^2 - 1 from the -1/s asymptote.
        let s: f64 = 1e-4;
        let mut k = -1.0 / s - s / 3.0;
        let n = 200_000;
        let h = (1.0 - s) / n as f64;
        let f = |k: f64| k * k - 1.0;
        for _ in 0..n {
            let a = f(k);
            let b = f(k + 0.5 * h * a);
            let c = f(k + 0.5 * h * b);
            let d = f(k + h * c);
            k += h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
        }
        assert!((k - model_shape_value(-1.0, 1.0).unwrap()).abs() < 1e-6);
        assert!((k + 1.3130352854993312).abs() < 1e-6);
    }

    #[test]
    fn shape_bounds() {
        let b = sphere_shape_bounds(0.0, 1.0).unwrap();
        assert_eq!((b.lo, b.hi), (-1.0, -1.0));
        let b = sphere_shape_bounds(1.0, PI / 4.0).unwrap();
        assert!((b.lo + 1.0 / (PI / 4.0).tanh()).abs() < 1e-15);
        assert!((b.hi + 1.0).abs() < 1e-15);
        assert!((b.lo + 1.5248).abs() < 1e-4);
        let b = sphere_shape_bounds(1.0, FRAC_PI_2).unwrap();
        assert!(b.hi.is_infinite() && !b.upper_is_finite());
        assert!((b.lo + 1.0 / FRAC_PI_2.tanh()).abs() < 1e-15);
    }

    #[test]
    fn hessian_bound_values() {
        let (lo, hi) = hessian_bounds(0.3, 0.0, 1.0).unwrap();
        assert!((lo - 0.6 / 0.3f64.tan()).abs() < 1e-15 && (lo - 1.9396369).abs() < 1e-7);
        assert!((hi - 0.6 / 0.3f64.tanh()).abs() < 1e-15 && (hi - 2.0596431).abs() < 1e-7);
        assert_eq!(hessian_bounds(0.5, 1.0, 0.0).unwrap(), (1.0, 3.0));
        let (lo, hi) = hessian_bounds(1e-7, 3.0, 2.0).unwrap();
        assert!((lo - 2.0).abs() < 1e-5 && (hi - 2.0).abs() < 1e-5);
    }

    #[test]
    fn riccati_matches_closed_forms() {
        for kk in [-1.0, 0.0, 1.0] {
            let trace = riccati_integrate(|_| kk, 1e-3, 1.5, 300).unwrap();
            assert!(trace.blow_up.is_none());
            for &(s, k) in &trace.samples {
                let want = model_shape_value(kk, s).unwrap();
                assert!((k - want).abs() <= 1e-6, "K={kk} s={s}: {k} vs {want}");
                if kk == 0.0 {
                    assert!((k - want).abs() <= 1e-8 * want.abs());
                }
            }
        }
    }

    #[test]
    fn riccati_reports_the_conjugate_point() {
        let trace = riccati_integrate(|_| 1.0, 1e-3, 4.0, 40).unwrap();
        let at = trace.blow_up.expect("k must blow up before s = pi");
        assert!((at - PI).abs() < 1e-3, "{at}");
        assert!(trace.samples.last().unwrap().0 < PI);
    }

    #[test]
    fn oscillating_curvature_stays_in_the_envelope() {
        let profile = |s: f64| 0.6 * (3.0 * s).sin() + 0.4 * (7.0 * s + 1.0).cos();
        let trace = riccati_integrate(profile, 1e-3, 1.5, 200).unwrap();
        assert!(trace.envelope_violations(1.0, 1e-9).is_empty());
    }

    #[test]
    fn rho_vanishes_at_the_foot_point() {
        let cfg = equator_probe(0.2);
        let foot = cfg.measure().embed(&cfg.foot_point());
        assert!(rho_value(&cfg, &foot).abs() < 1e-15);
        let cfg = flat_circle_probe(0.4);
        let foot = cfg.measure().embed(&cfg.foot_point());
        assert!(rho_value(&cfg, &foot).abs() < 1e-15);
    }

    #[test]
    fn rho_closed_forms() {
        let (a, d) = (1.0, 0.4);
        let cfg = flat_circle_probe(d);
        for y1 in [0.0, 1.3, 4.0, 6.0] {
            // lattice-shift distance: min over shifts of the circle coordinate gap
            let gap = [-2.0 * PI, 0.0, 2.0 * PI]
                .iter()
                .map(|s| (a - y1 + s as &f64).abs())
                .fold(f64::INFINITY, f64::min);
            let want = gap * gap + d * d - d * d;
            assert!((rho_value(&cfg, &[y1, 0.0]) - want).abs() < 1e-13);
        }
        let theta = 1.2;
        let m = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        let cfg = GeodesicProbeConfig::new(m, &[theta, 0.5], &[1.0]).unwrap();
        for dphi in [0.1f64, 1.0, 2.5] {
            let want = (theta.sin() * dphi.cos()).acos().powi(2) - (FRAC_PI_2 - theta).powi(2);
            assert!((rho_value(&cfg, &[FRAC_PI_2, 0.5 + dphi]) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_hessian_is_two() {
        for d in [0.0, 0.05, 0.3, 1.0] {
            let h = rho_hessian_fd(&flat_circle_probe(d)).unwrap();
            assert!((h.value - 2.0).abs() < 1e-6, "d={d}: {h:?}");
        }
    }

    #[test]
    fn equator_hessian_matches_spherical_trigonometry() {
        // cos D = cos d cos s gives (D^2)''(0) = 2 d cot d.
        for d in [0.05, 0.2, 0.5, 1.0] {
            let h = rho_hessian_fd(&equator_probe(d)).unwrap();
            let want = 2.0 * d / d.tan();
            assert!((h.value - want).abs() < 1e-7, "d={d}: {h:?} vs {want}");
            let (lo, hi) = hessian_bounds(d, 0.0, 1.0).unwrap();
            let slack = h.error_estimate + 1e-9;
            assert!(h.value >= lo - slack && h.value <= hi + slack);
        }
        let h = rho_hessian_fd(&equator_probe(1e-6)).unwrap();
        assert!((h.value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn subtorus_hessian_matrix_is_twice_identity() {
        let c = SpectralCatalog::FlatTorus(3);
        let m = MeasureSpec::subtorus(c, 2, &[0.5], TrigPoly::constant(2, 1.0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cfg = GeodesicProbeConfig::new(m, &[1.0, 2.0, 0.8], &[s, s]).unwrap();
        let (h, _) = rho_hessian_matrix(&cfg).unwrap();
        assert!((h - DMatrix::identity(2, 2) * 2.0).abs().max() < 1e-6);
    }

    #[test]
    fn probe_validation() {
        let m = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        assert!(GeodesicProbeConfig::new(m.clone(), &[0.0, 0.0], &[1.0]).is_err());
        assert!(GeodesicProbeConfig::new(m, &[1.0, 0.0], &[0.5]).is_err());
    }

    #[test]
    fn flat_laplace_value_reaches_one() {
        let cfg = flat_circle_probe(0.3);
        let g = TrigPoly::constant(1, 1.0);
        let t = 1e-4;
        let v = laplace_method_value(&cfg, &g, t, laplace_min_resolution(t)).unwrap();
        assert!((v.limit_target - 1.0).abs() < 1e-6);
        assert!((v.value - 1.0).abs() < 1e-2);
        // 1-D Gaussian oracle: erf(pi / (2 sqrt t)) = 1 to double precision here.
        assert!((v.value - 1.0).abs() < 1e-12);
        assert!(matches!(
            laplace_method_value(&cfg, &g, t, 100),
            Err(Error::ResolutionTooCoarse { minimal: 629, .. })
        ));
    }

    #[test]
    fn laplace_value_vanishing_g() {
        let cfg = flat_circle_probe(0.2);
        // g(y) = sin(y - 1) vanishes at the foot point y = 1.
        let g = TrigPoly::new(1)
            .with_term(&[1], Complex64::from_polar(0.5, -1.0 - FRAC_PI_2))
            .unwrap()
            .with_term(&[-1], Complex64::from_polar(0.5, 1.0 + FRAC_PI_2))
            .unwrap();
        assert!(g.eval(&[1.0]).norm() < 1e-15);
        for t in [1e-2, 1e-3] {
            let v = laplace_method_value(&cfg, &g, t, laplace_min_resolution(t)).unwrap();
            assert!(v.limit_target.abs() < 1e-15);
            assert!(v.value.abs() <= t.sqrt());
        }
    }

    #[test]
    fn point_laplace_is_exact() {
        let c = SpectralCatalog::FlatTorus(2);
        let m = MeasureSpec::point(c, &[1.0, 2.0], 1.0).unwrap();
        let cfg = GeodesicProbeConfig::new(m, &[1.2, 2.1], &[]).unwrap();
        let g = TrigPoly::constant(0, 3.5);
        for t in [1.0, 1e-6] {
            let v = laplace_method_value(&cfg, &g, t, 1).unwrap();
            assert_eq!(v.value, 3.5);
            assert_eq!(v.limit_target, 3.5);
        }
    }

    #[test]
    fn equator_laplace_approaches_limit() {
        let cfg = equator_probe(0.3);
        let g = TrigPoly::new(1).with_cos(&[1], 0.5).unwrap().with_term(&[0], Complex64::new(1.0, 0.0)).unwrap();
        let t = 1e-4;
        let v = laplace_method_value(&cfg, &g, t, laplace_min_resolution(t)).unwrap();
        let want = 2f64.sqrt() * g.eval(&[0.7]).re / (2.0 * 0.3 / 0.3f64.tan()).sqrt();
        assert!((v.limit_target - want).abs() < 1e-6);
        assert!((v.value - v.limit_target).abs() < 1e-2);
    }
}
