//! Densities on submanifolds: finite trigonometric polynomials in intrinsic angles,
//! or finite spherical-harmonic expansions on the whole sphere.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectra::spherical_harmonic;

/// `psi(y) = sum_p c_p e^{i p . y}` over finitely many frequencies `p in Z^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    terms: BTreeMap<Vec<i32>, Complex64>,
}

impl TrigPoly {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut p = Self::new(dim);
        p.terms.insert(vec![0; dim], Complex64::new(value, 0.0));
        p
    }

    /// Adds `coeff * e^{i freq . y}`; repeated frequencies accumulate.
    pub fn with_term(mut self, freq: &[i32], coeff: Complex64) -> Result<Self> {
        if freq.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "frequency {freq:?} has length {} but the density lives in dimension {}",
                freq.len(),
                self.dim
            )));
        }
        *self.terms.entry(freq.to_vec()).or_default() += coeff;
        Ok(self)
    }

    /// Real `a cos(p.y)`.
    pub fn with_cos(self, freq: &[i32], a: f64) -> Result<Self> {
        let neg: Vec<i32> = freq.iter().map(|f| -f).collect();
        self.with_term(freq, Complex64::new(a / 2.0, 0.0))?
            .with_term(&neg, Complex64::new(a / 2.0, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i32], Complex64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn coefficient(&self, freq: &[i32]) -> Complex64 {
        self.terms.get(freq).copied().unwrap_or_default()
    }

    /// Largest `|p_i|` over all terms.
    pub fn band_limit(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|k| k.iter().map(|f| f.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn coefficient_norm_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn eval(&self, y: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(p, c)| {
                let phase: f64 = p.iter().zip(y).map(|(&f, &x)| f as f64 * x).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * s)).collect(),
        }
    }

    pub(crate) fn describe(&self, out: &mut String) {
        out.push('{');
        for (k, v) in &self.terms {
            let _ = write!(out, "{k:?}:{:?},{:?};", v.re, v.im);
        }
        out.push('}');
    }
}

/// `psi = sum c_{l,q} Y_l^q` on the whole sphere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HarmonicPoly {
    terms: BTreeMap<(u32, i32), Complex64>,
}

impl HarmonicPoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_term(mut self, l: u32, q: i32, coeff: Complex64) -> Result<Self> {
        if q.unsigned_abs() > l {
            return Err(Error::InvalidArgument(format!("|q| > l for ({l}, {q})")));
        }
        *self.terms.entry((l, q)).or_default() += coeff;
        Ok(self)
    }

    pub fn coefficient(&self, l: u32, q: i32) -> Complex64 {
        self.terms.get(&(l, q)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, i32), Complex64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn coefficient_norm_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn eval(&self, theta: f64, phi: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(l, q), c)| c * spherical_harmonic(l, q, theta, phi))
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, v)| (*k, v * s)).collect(),
        }
    }

    pub(crate) fn describe(&self, out: &mut String) {
        out.push('{');
        for (k, v) in &self.terms {
            let _ = write!(out, "{k:?}:{:?},{:?};", v.re, v.im);
        }
        out.push('}');
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Trig(TrigPoly),
    Harmonic(HarmonicPoly),
}

impl Density {
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Density::Trig(p) => Density::Trig(p.scaled(s)),
            Density::Harmonic(h) => Density::Harmonic(h.scaled(s)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn repeated_frequencies_merge() {
        let p = TrigPoly::new(1)
            .with_term(&[2], Complex64::new(1.0, 0.0))
            .unwrap()
            .with_term(&[2], Complex64::new(0.5, 1.0))
            .unwrap();
        assert_eq!(p.coefficient(&[2]), Complex64::new(1.5, 1.0));
        assert_eq!(p.terms().count(), 1);
    }

    #[test]
    fn cosine_term_evaluates_to_real_cosine() {
        let p = TrigPoly::new(2).with_cos(&[1, -3], 2.0).unwrap();
        let y = [0.4, 1.7];
        let v = p.eval(&y);
        assert!((v.re - 2.0 * (0.4 - 3.0 * 1.7f64).cos()).abs() < 1e-14);
        assert!(v.im.abs() < 1e-14);
        assert_eq!(p.band_limit(), 3);
    }

    #[test]
    fn wrong_frequency_length_is_rejected() {
        assert!(TrigPoly::new(2).with_term(&[1], Complex64::new(1.0, 0.0)).is_err());
        assert!(HarmonicPoly::new().with_term(1, 2, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn harmonic_density_evaluates_basis() {
        let h = HarmonicPoly::new().with_term(0, 0, Complex64::new(2.0, 0.0)).unwrap();
        assert!((h.eval(0.3, 0.1).re - 2.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    }
}
