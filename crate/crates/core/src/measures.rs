//! Smooth measures `psi nu` on catalog submanifolds and their Fourier coefficients.
//!
//! Coefficients use the conjugate-linear pairing `tau_hat(j) = \int conj(phi_j) d tau`.
//! Every reported quantity is a modulus, on which the choice has no effect.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::density::{Density, TrigPoly};
use crate::error::{Error, Result};
use crate::gauss::gauss_legendre;
use crate::legendre::LegendreTable;
use crate::spectra::{
    eval_eigenfunction, isqrt, normalize_sphere_point, sign_for_order, torus_eigenfunction, wrap_angle,
    EigenIndex, SpectralCatalog,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Submanifold {
    /// A single point, in ambient coordinates.
    Point(Vec<f64>),
    /// `{(y, offset) : y in T^dim}`: the first `dim` angles free, the rest fixed.
    SubTorus { dim: usize, offset: Vec<f64> },
    /// The great circle `theta = pi/2` of the unit sphere, parametrized by longitude.
    Equator,
    FullManifold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    ambient: SpectralCatalog,
    submanifold: Submanifold,
    density: Density,
    sff_bound: f64,
}

impl MeasureSpec {
    pub fn new(ambient: SpectralCatalog, submanifold: Submanifold, density: Density) -> Result<Self> {
        let m = ambient.dimension();
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match (&ambient, &submanifold) {
            (_, Submanifold::Point(loc)) => {
                if loc.len() != m {
                    return bad(format!("point has {} coordinates, ambient {ambient} needs {m}", loc.len()));
                }
                if !matches!(&density, Density::Trig(p) if p.dim() == 0) {
                    return bad("a point mass takes a scalar weight".into());
                }
            }
            (SpectralCatalog::FlatTorus(_), Submanifold::SubTorus { dim, offset }) => {
                if *dim == 0 || *dim > m || dim + offset.len() != m {
                    return bad(format!(
                        "sub-torus of dimension {dim} with {} offsets does not fit in {ambient}",
                        offset.len()
                    ));
                }
                if !matches!(&density, Density::Trig(p) if p.dim() == *dim) {
                    return bad(format!("sub-torus density must be a trig polynomial in {dim} angles"));
                }
            }
            (SpectralCatalog::Sphere2, Submanifold::Equator) => {
                if !matches!(&density, Density::Trig(p) if p.dim() == 1) {
                    return bad("equator density must be a trig polynomial in the longitude".into());
                }
            }
            (SpectralCatalog::FlatTorus(_), Submanifold::FullManifold) => {
                if !matches!(&density, Density::Trig(p) if p.dim() == m) {
                    return bad(format!("torus density must be a trig polynomial in {m} angles"));
                }
            }
            (SpectralCatalog::Sphere2, Submanifold::FullManifold) => {
                if matches!(&density, Density::Trig(p) if p.dim() != 2) {
                    return bad("sphere trig density must be in (theta, phi)".into());
                }
            }
            _ => return bad(format!("{submanifold:?} is not a submanifold of {ambient}")),
        }
        Ok(Self {
            ambient,
            submanifold,
            density,
            sff_bound: 0.0,
        })
    }

    pub fn point(ambient: SpectralCatalog, location: &[f64], weight: f64) -> Result<Self> {
        Self::new(
            ambient,
            Submanifold::Point(location.to_vec()),
            Density::Trig(TrigPoly::constant(0, weight)),
        )
    }

    pub fn subtorus(ambient: SpectralCatalog, dim: usize, offset: &[f64], density: TrigPoly) -> Result<Self> {
        Self::new(
            ambient,
            Submanifold::SubTorus {
                dim,
                offset: offset.to_vec(),
            },
            Density::Trig(density),
        )
    }

    pub fn equator(density: TrigPoly) -> Result<Self> {
        Self::new(SpectralCatalog::Sphere2, Submanifold::Equator, Density::Trig(density))
    }

    pub fn full(ambient: SpectralCatalog, density: Density) -> Result<Self> {
        Self::new(ambient, Submanifold::FullManifold, density)
    }

    pub fn ambient(&self) -> SpectralCatalog {
        self.ambient
    }

    pub fn submanifold(&self) -> &Submanifold {
        &self.submanifold
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    /// Dimension `n` of the support.
    pub fn dim(&self) -> usize {
        match &self.submanifold {
            Submanifold::Point(_) => 0,
            Submanifold::SubTorus { dim, .. } => *dim,
            Submanifold::Equator => 1,
            Submanifold::FullManifold => self.ambient.dimension(),
        }
    }

    /// Codimension `k = m - n`.
    pub fn codim(&self) -> usize {
        self.ambient.dimension() - self.dim()
    }

    /// Bound `lambda` on the absolute sectional curvature of the ambient.
    pub fn curvature_bound(&self) -> f64 {
        self.ambient.curvature_bound()
    }

    /// Bound `kappa` on the second fundamental form; zero for every catalog submanifold.
    pub fn sff_bound(&self) -> f64 {
        self.sff_bound
    }

    /// Same measure with `psi` replaced by `s psi`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            density: self.density.scaled(s),
            ..self.clone()
        }
    }

    /// `nu(N)`; a point has unit counting measure.
    pub fn support_volume(&self) -> f64 {
        match &self.submanifold {
            Submanifold::Point(_) => 1.0,
            Submanifold::SubTorus { dim, .. } => (2.0 * PI).powi(*dim as i32),
            Submanifold::Equator => 2.0 * PI,
            Submanifold::FullManifold => self.ambient.volume(),
        }
    }

    /// Ambient coordinates of an intrinsic point of the support.
    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        match &self.submanifold {
            Submanifold::Point(p) => p.clone(),
            Submanifold::SubTorus { offset, .. } => y.iter().chain(offset.iter()).copied().collect(),
            Submanifold::Equator => vec![PI / 2.0, y[0]],
            Submanifold::FullManifold => y.to_vec(),
        }
    }

    /// `psi` at an intrinsic point.
    pub fn density_at(&self, y: &[f64]) -> Complex64 {
        match &self.density {
            Density::Trig(p) => p.eval(y),
            Density::Harmonic(h) => h.eval(y[0], y[1]),
        }
    }

    /// `\int_N |psi|^2 d nu`, exact from the coefficients.
    pub fn density_norm_sq(&self) -> f64 {
        match (&self.submanifold, &self.density) {
            (Submanifold::FullManifold, Density::Trig(p)) if self.ambient == SpectralCatalog::Sphere2 => {
                sphere_trig_norm_sq(p)
            }
            (_, Density::Trig(p)) => self.support_volume() * p.coefficient_norm_sq(),
            (_, Density::Harmonic(h)) => h.coefficient_norm_sq(),
        }
    }

    /// Canonical text form used for hashing and file headers.
    pub fn descriptor(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{}|", self.ambient);
        match &self.submanifold {
            Submanifold::Point(p) => {
                let _ = write!(s, "point{p:?}");
            }
            Submanifold::SubTorus { dim, offset } => {
                let _ = write!(s, "subtorus{dim}{offset:?}");
            }
            Submanifold::Equator => s.push_str("equator"),
            Submanifold::FullManifold => s.push_str("full"),
        }
        s.push('|');
        match &self.density {
            Density::Trig(p) => {
                s.push_str("trig");
                p.describe(&mut s);
            }
            Density::Harmonic(h) => {
                s.push_str("harm");
                h.describe(&mut s);
            }
        }
        s
    }

    /// Largest intrinsic frequency (or spherical degree) present in `psi`.
    fn density_band(&self) -> u32 {
        match &self.density {
            Density::Trig(p) => p.band_limit(),
            Density::Harmonic(h) => h.max_degree(),
        }
    }

    /// Frequency content of `conj(phi_j)` restricted to the support.
    fn index_band(&self, index: &EigenIndex) -> u32 {
        match (&self.submanifold, index) {
            (Submanifold::SubTorus { dim, .. }, EigenIndex::Torus(k)) => {
                k.coords()[..*dim].iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
            }
            (_, EigenIndex::Torus(k)) => k.coords().iter().map(|c| c.unsigned_abs()).max().unwrap_or(0),
            (Submanifold::Equator, EigenIndex::Sphere { q, .. }) => q.unsigned_abs(),
            (_, EigenIndex::Sphere { l, .. }) => *l,
        }
    }

    /// Smallest quadrature resolution that integrates `psi conj(phi_j)` exactly for every
    /// eigenvalue `<= lambda_max`.
    pub fn required_resolution(&self, lambda_max: f64) -> usize {
        let top = isqrt(lambda_max.max(0.0).floor() as u64) as usize;
        let band = self.density_band() as usize;
        match (&self.ambient, &self.submanifold) {
            (_, Submanifold::Point(_)) => 1,
            (SpectralCatalog::Sphere2, Submanifold::FullManifold) => {
                // n Gauss nodes integrate degree 2n - 1.
                (band + top + 2).div_ceil(2)
            }
            _ => band + top + 1,
        }
    }
}

/// `\int_{S^2} |sum c e^{i(a theta + b phi)}|^2 sin(theta) d theta d phi`.
fn sphere_trig_norm_sq(p: &TrigPoly) -> f64 {
    // \int_0^pi e^{i k theta} sin(theta) d theta
    let theta_moment = |k: i64| -> Complex64 {
        match k {
            1 => Complex64::new(0.0, PI / 2.0),
            -1 => Complex64::new(0.0, -PI / 2.0),
            _ => {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new((1.0 + sign) / (1.0 - (k * k) as f64), 0.0)
            }
        }
    };
    let terms: Vec<_> = p.terms().collect();
    let mut total = Complex64::new(0.0, 0.0);
    for (f1, c1) in &terms {
        for (f2, c2) in &terms {
            if f1[1] != f2[1] {
                continue;
            }
            total += c1 * c2.conj() * theta_moment(f1[0] as i64 - f2[0] as i64) * 2.0 * PI;
        }
    }
    total.re
}

/// Nodes are intrinsic coordinates of the support.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Largest trigonometric frequency (uniform axes) or total spherical degree (sphere)
    /// integrated exactly.
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn total_weight(&self) -> f64 {
        crate::kahan::kahan_sum(self.weights.iter().copied())
    }
}

/// Uniform trapezoidal grid with `resolution` points per intrinsic angle, or
/// Gauss-Legendre x uniform longitude (`resolution` x `2 resolution`) on the sphere.
pub fn quadrature_nodes(measure: &MeasureSpec, resolution: usize) -> Result<QuadratureRule> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be at least 1".into()));
    }
    match (&measure.ambient, &measure.submanifold) {
        (_, Submanifold::Point(_)) => Err(Error::InvalidArgument("a point mass needs no quadrature rule".into())),
        (SpectralCatalog::Sphere2, Submanifold::FullManifold) => Ok(sphere_rule(resolution)),
        _ => Ok(uniform_rule(measure.dim(), resolution)),
    }
}

/// [`quadrature_nodes`] that refuses resolutions too coarse for eigenvalues up to `lambda_max`.
pub fn quadrature_for(measure: &MeasureSpec, resolution: usize, lambda_max: f64) -> Result<QuadratureRule> {
    let minimal = measure.required_resolution(lambda_max);
    if resolution < minimal {
        return Err(Error::ResolutionTooCoarse {
            given: resolution,
            minimal,
        });
    }
    quadrature_nodes(measure, resolution)
}

fn uniform_rule(dim: usize, resolution: usize) -> QuadratureRule {
    let h = 2.0 * PI / resolution as f64;
    let count = resolution.pow(dim as u32);
    let mut nodes = Vec::with_capacity(count);
    for flat in 0..count {
        let mut rest = flat;
        let mut node = vec![0.0; dim];
        for axis in (0..dim).rev() {
            node[axis] = (rest % resolution) as f64 * h;
            rest /= resolution;
        }
        nodes.push(node);
    }
    QuadratureRule {
        nodes,
        weights: vec![h.powi(dim as i32); count],
        exact_degree: resolution - 1,
    }
}

fn sphere_rule(resolution: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(resolution);
    let n_phi = 2 * resolution;
    let h = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(resolution * n_phi);
    let mut weights = Vec::with_capacity(resolution * n_phi);
    for (xi, wi) in x.iter().zip(&w) {
        let theta = xi.clamp(-1.0, 1.0).acos();
        for j in 0..n_phi {
            nodes.push(vec![theta, j as f64 * h]);
            weights.push(wi * h);
        }
    }
    QuadratureRule {
        nodes,
        weights,
        exact_degree: 2 * resolution - 1,
    }
}

/// A coefficient together with whether the rule was exact for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub value: Complex64,
    /// Set when the quadrature rule is not exact for `psi conj(phi_j)`.
    pub inexact: bool,
}

/// `tau_hat(j)` by quadrature over the support; `rule` is ignored for point masses.
pub fn fourier_coefficient(
    measure: &MeasureSpec,
    index: &EigenIndex,
    rule: Option<&QuadratureRule>,
) -> Result<Coefficient> {
    measure.ambient.eigenvalue(index)?;
    if let Submanifold::Point(p) = &measure.submanifold {
        let w = measure.density_at(&[]);
        let phi = eval_eigenfunction(measure.ambient, index, p)?;
        return Ok(Coefficient {
            value: w * phi.conj(),
            inexact: false,
        });
    }
    let rule = rule.ok_or_else(|| Error::InvalidArgument("quadrature rule required".into()))?;
    let needed = (measure.density_band() + measure.index_band(index)) as usize;
    let trig_on_sphere = measure.ambient == SpectralCatalog::Sphere2
        && matches!(measure.submanifold, Submanifold::FullManifold)
        && matches!(measure.density, Density::Trig(_));
    let inexact = needed > rule.exact_degree || trig_on_sphere;
    if inexact {
        log::warn!(
            "quadrature of exactness {} is not exact for index {index} (needs {needed})",
            rule.exact_degree
        );
    }
    let mut re = crate::kahan::KahanSum::new();
    let mut im = crate::kahan::KahanSum::new();
    for (node, w) in rule.nodes.iter().zip(&rule.weights) {
        let x = measure.embed(node);
        let v = *w * measure.density_at(node) * eval_eigenfunction(measure.ambient, index, &x)?.conj();
        re.add(v.re);
        im.add(v.im);
    }
    Ok(Coefficient {
        value: Complex64::new(re.value(), im.value()),
        inexact,
    })
}

/// Closed-form coefficient evaluator for catalog pairs, with Legendre values
/// precomputed up to a degree bound.
#[derive(Debug, Clone)]
pub struct ClosedForm<'a> {
    measure: &'a MeasureSpec,
    legendre: Option<LegendreTable>,
}

impl<'a> ClosedForm<'a> {
    /// Prepares closed-form evaluation for all indices with eigenvalue `<= lambda_max`.
    pub fn new(measure: &'a MeasureSpec, lambda_max: f64) -> Result<Self> {
        let supported = matches!(
            (&measure.ambient, &measure.submanifold, &measure.density),
            (_, Submanifold::Point(_), _)
                | (SpectralCatalog::FlatTorus(_), Submanifold::SubTorus { .. }, Density::Trig(_))
                | (SpectralCatalog::FlatTorus(_), Submanifold::FullManifold, Density::Trig(_))
                | (SpectralCatalog::Sphere2, Submanifold::Equator, Density::Trig(_))
                | (SpectralCatalog::Sphere2, Submanifold::FullManifold, Density::Harmonic(_))
        );
        if !supported {
            return Err(Error::Unsupported(format!(
                "no closed form for {}",
                measure.descriptor()
            )));
        }
        let lmax = sphere_degree_bound(lambda_max);
        let legendre = match (&measure.ambient, &measure.submanifold) {
            (SpectralCatalog::Sphere2, Submanifold::Point(p)) => {
                let (theta, _) = normalize_sphere_point(p[0], p[1]);
                Some(LegendreTable::new(lmax, theta.cos(), theta.sin()))
            }
            (SpectralCatalog::Sphere2, Submanifold::Equator) => Some(LegendreTable::new(lmax, 0.0, 1.0)),
            _ => None,
        };
        Ok(Self { measure, legendre })
    }

    pub fn coefficient(&self, index: &EigenIndex) -> Result<Complex64> {
        let measure = self.measure;
        measure.ambient.eigenvalue(index)?;
        match (&measure.submanifold, &measure.density, index) {
            (Submanifold::Point(p), _, EigenIndex::Torus(k)) => {
                Ok(measure.density_at(&[]) * torus_eigenfunction(k, p).conj())
            }
            (Submanifold::Point(p), _, EigenIndex::Sphere { l, q }) => {
                let (theta, phi) = normalize_sphere_point(p[0], p[1]);
                let m = q.unsigned_abs();
                if m != 0 && (theta == 0.0 || theta == PI) {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let pbar = self.legendre_value(*l, m, theta)?;
                let y = Complex64::from_polar(pbar * sign_for_order(*q), *q as f64 * phi);
                Ok(measure.density_at(&[]) * y.conj())
            }
            (Submanifold::SubTorus { dim, offset }, Density::Trig(psi), EigenIndex::Torus(k)) => {
                let m = k.dim();
                let (along, normal) = k.coords().split_at(*dim);
                let c = psi.coefficient(along);
                if c == Complex64::new(0.0, 0.0) {
                    return Ok(c);
                }
                let phase: f64 = normal
                    .iter()
                    .zip(offset)
                    .map(|(&kk, &o)| (kk as f64 * wrap_angle(o)).rem_euclid(2.0 * PI))
                    .sum();
                let scale = (2.0 * PI).powi(*dim as i32) * (2.0 * PI).powf(-(m as f64) / 2.0);
                Ok(c * Complex64::from_polar(scale, -phase))
            }
            (Submanifold::FullManifold, Density::Trig(psi), EigenIndex::Torus(k)) => {
                let scale = (2.0 * PI).powf(k.dim() as f64 / 2.0);
                Ok(psi.coefficient(k.coords()) * scale)
            }
            (Submanifold::Equator, Density::Trig(psi), EigenIndex::Sphere { l, q }) => {
                let c = psi.coefficient(&[*q]);
                if c == Complex64::new(0.0, 0.0) {
                    return Ok(c);
                }
                let pbar = self.legendre_value(*l, q.unsigned_abs(), PI / 2.0)? * sign_for_order(*q);
                Ok(c * (2.0 * PI * pbar))
            }
            (Submanifold::FullManifold, Density::Harmonic(h), EigenIndex::Sphere { l, q }) => {
                Ok(h.coefficient(*l, *q))
            }
            _ => Err(Error::Unsupported(format!(
                "no closed form for index {index} of {}",
                measure.descriptor()
            ))),
        }
    }

    fn legendre_value(&self, l: u32, m: u32, theta: f64) -> Result<f64> {
        match self.legendre.as_ref().and_then(|t| t.get(l, m)) {
            Some(v) => Ok(v),
            None => Ok(crate::legendre::normalized(l, m, theta.cos(), theta.sin())),
        }
    }
}

/// Largest `l` with `l (l + 1) <= lambda_max`.
fn sphere_degree_bound(lambda_max: f64) -> u32 {
    let cap = lambda_max.max(0.0).floor() as u64;
    let mut l = isqrt(cap);
    while l * (l + 1) > cap {
        l -= 1;
    }
    l as u32
}

/// One-off closed-form coefficient.
pub fn fourier_coefficient_closed(measure: &MeasureSpec, index: &EigenIndex) -> Result<Complex64> {
    let lambda = measure.ambient.eigenvalue(index)? as f64;
    ClosedForm::new(measure, lambda.max(1.0))?.coefficient(index)
}

/// `\int_N |psi|^2 d nu`.
pub fn density_norm_sq(measure: &MeasureSpec) -> f64 {
    measure.density_norm_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::HarmonicPoly;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn circle_rule() {
        let m = MeasureSpec::full(SpectralCatalog::FlatTorus(1), Density::Trig(TrigPoly::constant(1, 1.0))).unwrap();
        let rule = quadrature_nodes(&m, 4).unwrap();
        let angles: Vec<f64> = rule.nodes.iter().map(|n| n[0]).collect();
        assert_eq!(angles, vec![0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        assert!(rule.weights.iter().all(|&w| w == PI / 2.0));
    }

    #[test]
    fn equator_rule_weights_sum_to_circumference() {
        let m = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        for r in [1, 3, 7, 100, 1001] {
            let rule = quadrature_nodes(&m, r).unwrap();
            assert!((rule.total_weight() - 2.0 * PI).abs() <= 1e-12 * 2.0 * PI);
        }
    }

    #[test]
    fn sphere_rule_weights_sum_to_area() {
        let m = MeasureSpec::full(SpectralCatalog::Sphere2, Density::Harmonic(HarmonicPoly::new())).unwrap();
        let rule = quadrature_nodes(&m, 40).unwrap();
        assert!((rule.total_weight() - 4.0 * PI).abs() <= 1e-12 * 4.0 * PI);
    }

    #[test]
    fn trapezoid_kills_first_harmonic_with_three_points() {
        let psi = TrigPoly::new(1).with_term(&[1], c(1.0)).unwrap();
        let m = MeasureSpec::full(SpectralCatalog::FlatTorus(1), Density::Trig(psi)).unwrap();
        let rule = quadrature_nodes(&m, 3).unwrap();
        let s: Complex64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(n, w)| m.density_at(n) * *w)
            .sum();
        assert!(s.norm() < 1e-15);
    }

    #[test]
    fn point_mass_coefficient_is_eigenfunction_value() {
        let p = [0.3, 2.1];
        let m = MeasureSpec::point(SpectralCatalog::Sphere2, &p, 1.0).unwrap();
        for (l, q) in [(0u32, 0i32), (3, -2), (10, 7)] {
            let idx = EigenIndex::sphere(l, q).unwrap();
            let phi = eval_eigenfunction(SpectralCatalog::Sphere2, &idx, &p).unwrap();
            let got = fourier_coefficient(&m, &idx, None).unwrap().value;
            assert!((got.norm() - phi.norm()).abs() < 1e-15);
            let closed = fourier_coefficient_closed(&m, &idx).unwrap();
            assert!((closed - got).norm() < 1e-13);
        }
    }

    #[test]
    fn equator_first_zonal_coefficient_vanishes() {
        let m = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        let idx = EigenIndex::sphere(1, 0).unwrap();
        assert!(fourier_coefficient_closed(&m, &idx).unwrap().norm() < 1e-15);
        let rule = quadrature_nodes(&m, 8).unwrap();
        assert!(fourier_coefficient(&m, &idx, Some(&rule)).unwrap().value.norm() < 1e-15);
    }

    #[test]
    fn equator_second_zonal_coefficient() {
        let m = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        let idx = EigenIndex::sphere(2, 0).unwrap();
        let want = 2.0 * PI * (5.0 / (4.0 * PI)).sqrt() * -0.5;
        let got = fourier_coefficient_closed(&m, &idx).unwrap();
        assert!((got - c(want)).norm() < 1e-14);
    }

    #[test]
    fn subtorus_coefficients_follow_the_orthogonality_integral() {
        // psi = 1 on {x_2 = 0} in T^2: coefficient (2 pi)^{-1} \int e^{-i n1 y} dy = [n1 == 0].
        let m = MeasureSpec::subtorus(SpectralCatalog::FlatTorus(2), 1, &[0.0], TrigPoly::constant(1, 1.0)).unwrap();
        let rule = quadrature_nodes(&m, 16).unwrap();
        for (n1, n2) in [(0, 0), (0, 5), (0, -2), (3, 5), (1, 0), (-4, 4)] {
            let idx = EigenIndex::torus(&[n1, n2]).unwrap();
            let want = if n1 == 0 { 1.0 } else { 0.0 };
            let closed = fourier_coefficient_closed(&m, &idx).unwrap();
            let quad = fourier_coefficient(&m, &idx, Some(&rule)).unwrap();
            assert!((closed - c(want)).norm() < 1e-14, "{n1},{n2}");
            assert!((quad.value - c(want)).norm() < 1e-14, "{n1},{n2}");
            assert!(!quad.inexact);
        }
    }

    #[test]
    fn full_manifold_basis_density_is_a_kronecker_delta() {
        // psi = phi_{(1,-2)} = (2 pi)^{-1} e^{i(x1 - 2 x2)} on T^2.
        let psi = TrigPoly::new(2).with_term(&[1, -2], c(1.0 / (2.0 * PI))).unwrap();
        let m = MeasureSpec::full(SpectralCatalog::FlatTorus(2), Density::Trig(psi)).unwrap();
        for (a, b) in [(1, -2), (0, 0), (-1, 2), (2, 1)] {
            let idx = EigenIndex::torus(&[a, b]).unwrap();
            let want = if (a, b) == (1, -2) { 1.0 } else { 0.0 };
            assert!((fourier_coefficient_closed(&m, &idx).unwrap() - c(want)).norm() < 1e-14);
        }
        let h = HarmonicPoly::new().with_term(3, 1, c(1.0)).unwrap();
        let m = MeasureSpec::full(SpectralCatalog::Sphere2, Density::Harmonic(h)).unwrap();
        let rule = quadrature_nodes(&m, 8).unwrap();
        for (l, q) in [(3u32, 1i32), (3, -1), (2, 1), (0, 0)] {
            let idx = EigenIndex::sphere(l, q).unwrap();
            let want = if (l, q) == (3, 1) { 1.0 } else { 0.0 };
            assert!((fourier_coefficient_closed(&m, &idx).unwrap() - c(want)).norm() < 1e-14);
            let quad = fourier_coefficient(&m, &idx, Some(&rule)).unwrap().value;
            assert!((quad - c(want)).norm() < 1e-13, "{l} {q}: {quad}");
        }
    }

    #[test]
    fn density_norms() {
        let eq = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        assert!((density_norm_sq(&eq) - 2.0 * PI).abs() < 1e-14);
        let cos = TrigPoly::new(1).with_cos(&[1], 1.0).unwrap();
        let circle = MeasureSpec::subtorus(SpectralCatalog::FlatTorus(2), 1, &[0.4], cos).unwrap();
        assert!((density_norm_sq(&circle) - PI).abs() < 1e-14);
        let delta = MeasureSpec::point(SpectralCatalog::FlatTorus(3), &[0.0, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(density_norm_sq(&delta), 1.0);
    }

    #[test]
    fn sphere_trig_norm_matches_quadrature() {
        let psi = TrigPoly::new(2)
            .with_cos(&[1, 0], 1.0)
            .unwrap()
            .with_term(&[2, 1], Complex64::new(0.3, -0.2))
            .unwrap();
        let m = MeasureSpec::full(SpectralCatalog::Sphere2, Density::Trig(psi)).unwrap();
        // Fine tensor grid in (theta, phi) as an independent check.
        let n = 4000;
        let h = PI / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let theta = (i as f64 + 0.5) * h;
            for j in 0..16 {
                let phi = j as f64 * 2.0 * PI / 16.0;
                s += m.density_at(&[theta, phi]).norm_sqr() * theta.sin() * h * 2.0 * PI / 16.0;
            }
        }
        assert!((density_norm_sq(&m) - s).abs() < 1e-6, "{} vs {s}", density_norm_sq(&m));
        assert!(matches!(ClosedForm::new(&m, 10.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn resolution_below_requirement_is_refused() {
        let m = MeasureSpec::equator(TrigPoly::constant(1, 1.0)).unwrap();
        let minimal = m.required_resolution(100.0);
        assert_eq!(minimal, 11);
        assert_eq!(
            quadrature_for(&m, minimal - 1, 100.0).unwrap_err(),
            Error::ResolutionTooCoarse {
                given: minimal - 1,
                minimal
            }
        );
        assert!(quadrature_for(&m, minimal, 100.0).is_ok());
    }

    #[test]
    fn inexact_rule_is_flagged() {
        let m = MeasureSpec::subtorus(SpectralCatalog::FlatTorus(2), 1, &[0.0], TrigPoly::constant(1, 1.0)).unwrap();
        let rule = quadrature_nodes(&m, 4).unwrap();
        let idx = EigenIndex::torus(&[4, 0]).unwrap();
        let coef = fourier_coefficient(&m, &idx, Some(&rule)).unwrap();
        assert!(coef.inexact);
        // Aliasing: e^{-4iy} is sampled as a constant.
        assert!((coef.value.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mismatched_submanifolds_are_rejected() {
        assert!(MeasureSpec::new(SpectralCatalog::FlatTorus(2), Submanifold::Equator, Density::Trig(TrigPoly::constant(1, 1.0))).is_err());
        assert!(MeasureSpec::subtorus(SpectralCatalog::FlatTorus(2), 1, &[], TrigPoly::constant(1, 1.0)).is_err());
        assert!(MeasureSpec::point(SpectralCatalog::Sphere2, &[0.1], 1.0).is_err());
    }
}
