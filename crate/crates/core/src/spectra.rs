//! Exact Laplace-Beltrami spectra of flat tori `R^m / (2 pi Z)^m` and the unit sphere.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::legendre;

/// Largest torus dimension supported by [`LatticePoint`].
pub const MAX_TORUS_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectralCatalog {
    /// Flat torus of the given dimension with all periods `2 pi`.
    FlatTorus(usize),
    /// Round unit sphere.
    Sphere2,
}

impl SpectralCatalog {
    pub fn torus(dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > MAX_TORUS_DIM {
            return Err(Error::InvalidArgument(format!(
                "torus dimension must be in 1..={MAX_TORUS_DIM}, got {dimension}"
            )));
        }
        Ok(SpectralCatalog::FlatTorus(dimension))
    }

    pub fn dimension(&self) -> usize {
        match *self {
            SpectralCatalog::FlatTorus(m) => m,
            SpectralCatalog::Sphere2 => 2,
        }
    }

    /// Riemannian volume `mu(M)`.
    pub fn volume(&self) -> f64 {
        match *self {
            SpectralCatalog::FlatTorus(m) => (2.0 * PI).powi(m as i32),
            SpectralCatalog::Sphere2 => 4.0 * PI,
        }
    }

    /// Bound on the absolute sectional curvature.
    pub fn curvature_bound(&self) -> f64 {
        match self {
            SpectralCatalog::FlatTorus(_) => 0.0,
            SpectralCatalog::Sphere2 => 1.0,
        }
    }

    /// Leading Weyl constant `vol / ((4 pi)^{m/2} Gamma(m/2 + 1))`.
    pub fn weyl_constant(&self) -> f64 {
        let half = self.dimension() as f64 / 2.0;
        self.volume() / ((4.0 * PI).powf(half) * gamma(half + 1.0))
    }

    /// Eigenvalue of an index; integer for every catalog entry.
    pub fn eigenvalue(&self, index: &EigenIndex) -> Result<u64> {
        match (self, index) {
            (SpectralCatalog::FlatTorus(m), EigenIndex::Torus(p)) if p.dim() == *m => Ok(p.norm_sq()),
            (SpectralCatalog::Sphere2, EigenIndex::Sphere { l, q }) if q.unsigned_abs() <= *l => {
                Ok(*l as u64 * (*l as u64 + 1))
            }
            _ => Err(Error::InvalidArgument(format!(
                "index {index} does not belong to {self}"
            ))),
        }
    }
}

impl fmt::Display for SpectralCatalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralCatalog::FlatTorus(m) => write!(f, "T^{m}"),
            SpectralCatalog::Sphere2 => write!(f, "S^2"),
        }
    }
}

/// A point of `Z^m`, `m <= MAX_TORUS_DIM`, stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    dim: u8,
    coords: [i32; MAX_TORUS_DIM],
}

impl LatticePoint {
    pub fn new(coords: &[i32]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_TORUS_DIM {
            return Err(Error::InvalidArgument(format!(
                "lattice dimension must be in 1..={MAX_TORUS_DIM}, got {}",
                coords.len()
            )));
        }
        let mut c = [0; MAX_TORUS_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            dim: coords.len() as u8,
            coords: c,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn norm_sq(&self) -> u64 {
        self.coords().iter().map(|&c| (c as i64 * c as i64) as u64).sum()
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EigenIndex {
    Torus(LatticePoint),
    /// Degree `l` and order `q`, `|q| <= l`.
    Sphere { l: u32, q: i32 },
}

impl EigenIndex {
    pub fn torus(coords: &[i32]) -> Result<Self> {
        LatticePoint::new(coords).map(EigenIndex::Torus)
    }

    pub fn sphere(l: u32, q: i32) -> Result<Self> {
        if q.unsigned_abs() > l {
            return Err(Error::InvalidArgument(format!("|q| > l for (l, q) = ({l}, {q})")));
        }
        Ok(EigenIndex::Sphere { l, q })
    }
}

impl fmt::Display for EigenIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigenIndex::Torus(p) => write!(f, "{:?}", p.coords()),
            EigenIndex::Sphere { l, q } => write!(f, "(l={l}, q={q})"),
        }
    }
}

/// One distinct eigenvalue together with its eigenbasis indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenLevel {
    /// Eigenvalue; every catalog eigenvalue is an integer.
    pub lambda: u64,
    pub indices: Vec<EigenIndex>,
}

impl EigenLevel {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

/// Memory ceiling for index enumeration.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationBudget {
    pub max_bytes: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            max_bytes: 4 << 30,
        }
    }
}

/// Largest `r` with `r * r <= n`.
pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Rough upper estimate of the number of indices with eigenvalue `<= lambda_max`.
pub fn estimate_index_count(catalog: SpectralCatalog, lambda_max: f64) -> f64 {
    match catalog {
        SpectralCatalog::FlatTorus(m) => {
            let half = m as f64 / 2.0;
            let radius = lambda_max.sqrt() + (m as f64).sqrt() / 2.0;
            PI.powf(half) / gamma(half + 1.0) * radius.powi(m as i32)
        }
        SpectralCatalog::Sphere2 => lambda_max + 2.0 * lambda_max.sqrt() + 1.0,
    }
}

pub fn enumerate_levels(catalog: SpectralCatalog, lambda_max: f64) -> Result<Vec<EigenLevel>> {
    enumerate_levels_with_budget(catalog, lambda_max, EnumerationBudget::default())
}

/// All distinct eigenvalues `<= lambda_max` in ascending order, each with its full index list.
///
/// Indices within a level are in lexicographic order (torus) or ascending `q` (sphere).
pub fn enumerate_levels_with_budget(
    catalog: SpectralCatalog,
    lambda_max: f64,
    budget: EnumerationBudget,
) -> Result<Vec<EigenLevel>> {
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda_max must be positive and finite, got {lambda_max}"
        )));
    }
    let per_index = (std::mem::size_of::<EigenIndex>() + std::mem::size_of::<(u64, LatticePoint)>()) as f64;
    let estimate = (estimate_index_count(catalog, lambda_max) * per_index) as u64;
    if estimate > budget.max_bytes {
        return Err(Error::ResourceLimit {
            estimate_bytes: estimate,
            budget_bytes: budget.max_bytes,
        });
    }
    let cap = lambda_max.floor() as u64;
    match catalog {
        SpectralCatalog::FlatTorus(m) => Ok(torus_levels(m, cap)),
        SpectralCatalog::Sphere2 => Ok(sphere_levels(cap)),
    }
}

fn torus_levels(m: usize, cap: u64) -> Vec<EigenLevel> {
    let r = isqrt(cap) as i32;
    let mut points: Vec<(u64, LatticePoint)> = (-r..=r)
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut coords = [0i32; MAX_TORUS_DIM];
            coords[0] = first;
            let used = (first as i64 * first as i64) as u64;
            fill_slab(m, 1, used, cap, &mut coords, &mut out);
            out
        })
        .flatten()
        .collect();
    points.par_sort_unstable();

    let mut levels: Vec<EigenLevel> = Vec::new();
    for (norm, p) in points {
        match levels.last_mut() {
            Some(level) if level.lambda == norm => level.indices.push(EigenIndex::Torus(p)),
            _ => levels.push(EigenLevel {
                lambda: norm,
                indices: vec![EigenIndex::Torus(p)],
            }),
        }
    }
    levels
}

fn fill_slab(
    m: usize,
    axis: usize,
    used: u64,
    cap: u64,
    coords: &mut [i32; MAX_TORUS_DIM],
    out: &mut Vec<(u64, LatticePoint)>,
) {
    if axis == m {
        out.push((
            used,
            LatticePoint {
                dim: m as u8,
                coords: *coords,
            },
        ));
        return;
    }
    let r = isqrt(cap - used) as i32;
    for c in -r..=r {
        coords[axis] = c;
        fill_slab(m, axis + 1, used + (c as i64 * c as i64) as u64, cap, coords, out);
    }
    coords[axis] = 0;
}

fn sphere_levels(cap: u64) -> Vec<EigenLevel> {
    let mut levels = Vec::new();
    let mut l: u64 = 0;
    while l * (l + 1) <= cap {
        let li = l as i32;
        levels.push(EigenLevel {
            lambda: l * (l + 1),
            indices: (-li..=li)
                .map(|q| EigenIndex::Sphere { l: l as u32, q })
                .collect(),
        });
        l += 1;
    }
    levels
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Brings sphere coordinates into `theta in [0, pi]`, `phi in [0, 2 pi)`.
pub fn normalize_sphere_point(theta: f64, phi: f64) -> (f64, f64) {
    let mut t = theta.rem_euclid(2.0 * PI);
    let mut p = phi;
    if t > PI {
        t = 2.0 * PI - t;
        p += PI;
    }
    (t, wrap_angle(p))
}

/// Orthonormal eigenfunction value. Torus points are angle vectors; sphere points
/// are `(colatitude, longitude)`.
pub fn eval_eigenfunction(catalog: SpectralCatalog, index: &EigenIndex, point: &[f64]) -> Result<Complex64> {
    match (catalog, index) {
        (SpectralCatalog::FlatTorus(m), EigenIndex::Torus(k)) => {
            if k.dim() != m || point.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "dimension mismatch: catalog {catalog}, index {index}, point of length {}",
                    point.len()
                )));
            }
            Ok(torus_eigenfunction(k, point))
        }
        (SpectralCatalog::Sphere2, EigenIndex::Sphere { l, q }) => {
            if point.len() != 2 {
                return Err(Error::InvalidArgument(format!(
                    "sphere points are (theta, phi), got length {}",
                    point.len()
                )));
            }
            if q.unsigned_abs() > *l {
                return Err(Error::InvalidArgument(format!("invalid sphere index {index}")));
            }
            Ok(spherical_harmonic(*l, *q, point[0], point[1]))
        }
        _ => Err(Error::InvalidArgument(format!(
            "index {index} does not belong to {catalog}"
        ))),
    }
}

#[inline]
pub(crate) fn torus_eigenfunction(k: &LatticePoint, point: &[f64]) -> Complex64 {
    let m = k.dim();
    // Integer-weighted phase reduced per axis keeps the argument small.
    let phase: f64 = k
        .coords()
        .iter()
        .zip(point)
        .map(|(&c, &x)| (c as f64 * wrap_angle(x)).rem_euclid(2.0 * PI))
        .sum();
    Complex64::from_polar((2.0 * PI).powf(-(m as f64) / 2.0), phase)
}

/// `Y_l^q(theta, phi)` with Condon-Shortley phase.
pub fn spherical_harmonic(l: u32, q: i32, theta: f64, phi: f64) -> Complex64 {
    let (theta, phi) = normalize_sphere_point(theta, phi);
    let m = q.unsigned_abs();
    if m != 0 && (theta == 0.0 || theta == PI) {
        return Complex64::new(0.0, 0.0);
    }
    let p = legendre::normalized(l, m, theta.cos(), theta.sin());
    Complex64::from_polar(p * sign_for_order(q), q as f64 * phi)
}

/// `(-1)^{|q|}` for negative orders, `1` otherwise; `Y_l^{-m} = (-1)^m conj(Y_l^m)`.
#[inline]
pub(crate) fn sign_for_order(q: i32) -> f64 {
    if q < 0 && q.unsigned_abs() % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// A catalog together with its enumerated levels up to `lambda_max`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub catalog: SpectralCatalog,
    pub lambda_max: f64,
    pub levels: Vec<EigenLevel>,
}

impl Spectrum {
    pub fn new(catalog: SpectralCatalog, lambda_max: f64) -> Result<Self> {
        Ok(Self {
            catalog,
            lambda_max,
            levels: enumerate_levels(catalog, lambda_max)?,
        })
    }

    pub fn index_count(&self) -> usize {
        self.levels.iter().map(EigenLevel::multiplicity).sum()
    }

    /// `#{j : lambda_j < t}` with multiplicity.
    pub fn weyl_count(&self, t: f64) -> Result<u64> {
        if t > self.lambda_max {
            return Err(Error::OutOfRange {
                what: "T",
                requested: t,
                available: self.lambda_max,
            });
        }
        Ok(self
            .levels
            .iter()
            .take_while(|l| (l.lambda as f64) < t)
            .map(|l| l.multiplicity() as u64)
            .sum())
    }
}

/// `weyl_count` without keeping the enumeration around.
pub fn weyl_count(catalog: SpectralCatalog, t: f64, lambda_max: f64) -> Result<u64> {
    if t > lambda_max {
        return Err(Error::OutOfRange {
            what: "T",
            requested: t,
            available: lambda_max,
        });
    }
    Spectrum::new(catalog, lambda_max)?.weyl_count(t)
}
