//! Coefficient tables and the counting function `alpha(T) = sum_{lambda_j < T} |tau_hat(j)|^2`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::measures::{quadrature_for, fourier_coefficient, ClosedForm, MeasureSpec};
use crate::spectra::{enumerate_levels_with_budget, EigenIndex, EnumerationBudget, SpectralCatalog};

/// One distinct eigenvalue and the summed `|tau_hat|^2` over its eigenspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelWeight {
    pub lambda: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub catalog: SpectralCatalog,
    /// Canonical measure descriptor, see [`MeasureSpec::descriptor`].
    pub descriptor: String,
    pub codim: usize,
    pub norm_sq: f64,
    pub lambda_max: f64,
    levels: Vec<LevelWeight>,
    /// `cumulative[i]` is the weight of all levels strictly below `levels[i]`;
    /// one extra trailing entry holds the total.
    cumulative: Vec<f64>,
}

impl CoefficientTable {
    pub fn from_levels(
        catalog: SpectralCatalog,
        descriptor: String,
        codim: usize,
        norm_sq: f64,
        lambda_max: f64,
        levels: Vec<LevelWeight>,
    ) -> Result<Self> {
        if levels.windows(2).any(|w| !(w[0].lambda < w[1].lambda)) {
            return Err(Error::InvalidArgument("levels must be strictly ascending".into()));
        }
        if levels.iter().any(|l| !(l.weight >= 0.0)) {
            return Err(Error::InvalidArgument("level weights must be non-negative".into()));
        }
        let mut acc = KahanSum::new();
        let mut cumulative = Vec::with_capacity(levels.len() + 1);
        cumulative.push(0.0);
        for l in &levels {
            acc.add(l.weight);
            cumulative.push(acc.value());
        }
        Ok(Self {
            catalog,
            descriptor,
            codim,
            norm_sq,
            lambda_max,
            levels,
            cumulative,
        })
    }

    pub fn levels(&self) -> &[LevelWeight] {
        &self.levels
    }

    /// Total weight of all tabulated levels.
    pub fn total_weight(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Same table for `psi` replaced by `c psi`.
    pub fn scaled(&self, c: f64) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|l| LevelWeight {
                lambda: l.lambda,
                weight: l.weight * c * c,
            })
            .collect();
        Self::from_levels(
            self.catalog,
            format!("{}*{c:?}", self.descriptor),
            self.codim,
            self.norm_sq * c * c,
            self.lambda_max,
            levels,
        )
        .expect("scaling preserves table invariants")
    }
}

/// How coefficients are obtained while building a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientMethod {
    /// Closed form where available, quadrature otherwise.
    #[default]
    Auto,
    ClosedForm,
    /// Quadrature at the given resolution, or the minimal exact one.
    Quadrature(Option<usize>),
}

enum Evaluator<'a> {
    Closed(ClosedForm<'a>),
    Quad(Option<crate::measures::QuadratureRule>),
}

impl Evaluator<'_> {
    fn coefficient(&self, measure: &MeasureSpec, index: &EigenIndex) -> Result<Complex64> {
        match self {
            Evaluator::Closed(c) => c.coefficient(index),
            Evaluator::Quad(rule) => Ok(fourier_coefficient(measure, index, rule.as_ref())?.value),
        }
    }
}

fn evaluator<'a>(measure: &'a MeasureSpec, lambda_max: f64, method: CoefficientMethod) -> Result<Evaluator<'a>> {
    let quad = |res: Option<usize>| -> Result<Evaluator<'a>> {
        if matches!(measure.submanifold(), crate::measures::Submanifold::Point(_)) {
            return Ok(Evaluator::Quad(None));
        }
        let res = res.unwrap_or_else(|| measure.required_resolution(lambda_max));
        Ok(Evaluator::Quad(Some(quadrature_for(measure, res, lambda_max)?)))
    };
    match method {
        CoefficientMethod::ClosedForm => Ok(Evaluator::Closed(ClosedForm::new(measure, lambda_max)?)),
        CoefficientMethod::Quadrature(res) => quad(res),
        CoefficientMethod::Auto => match ClosedForm::new(measure, lambda_max) {
            Ok(c) => Ok(Evaluator::Closed(c)),
            Err(Error::Unsupported(_)) => quad(None),
            Err(e) => Err(e),
        },
    }
}

pub fn build_coefficient_table(
    catalog: SpectralCatalog,
    measure: &MeasureSpec,
    lambda_max: f64,
) -> Result<CoefficientTable> {
    build_coefficient_table_with(catalog, measure, lambda_max, CoefficientMethod::Auto, EnumerationBudget::default())
}

/// Level-aggregated table: one entry per distinct eigenvalue `<= lambda_max`.
pub fn build_coefficient_table_with(
    catalog: SpectralCatalog,
    measure: &MeasureSpec,
    lambda_max: f64,
    method: CoefficientMethod,
    budget: EnumerationBudget,
) -> Result<CoefficientTable> {
    if catalog != measure.ambient() {
        return Err(Error::InvalidArgument(format!(
            "measure lives on {}, not {catalog}",
            measure.ambient()
        )));
    }
    let levels = enumerate_levels_with_budget(catalog, lambda_max, budget)?;
    let eval = evaluator(measure, lambda_max, method)?;
    let weights: Vec<LevelWeight> = levels
        .par_iter()
        .map(|level| {
            let mut w = KahanSum::new();
            for idx in &level.indices {
                w.add(eval.coefficient(measure, idx)?.norm_sqr());
            }
            Ok(LevelWeight {
                lambda: level.lambda as f64,
                weight: w.value(),
            })
        })
        .collect::<Result<_>>()?;
    CoefficientTable::from_levels(
        catalog,
        measure.descriptor(),
        measure.codim(),
        measure.density_norm_sq(),
        lambda_max,
        weights,
    )
}

/// Per-index coefficients, needed to evaluate the heat flow pointwise.
#[derive(Debug, Clone)]
pub struct IndexedCoefficients {
    pub catalog: SpectralCatalog,
    pub lambda_max: f64,
    pub entries: Vec<(EigenIndex, f64, Complex64)>,
}

pub fn build_indexed_coefficients(measure: &MeasureSpec, lambda_max: f64) -> Result<IndexedCoefficients> {
    let catalog = measure.ambient();
    let levels = enumerate_levels_with_budget(catalog, lambda_max, EnumerationBudget::default())?;
    let eval = evaluator(measure, lambda_max, CoefficientMethod::Auto)?;
    let entries = levels
        .par_iter()
        .flat_map_iter(|level| {
            let eval = &eval;
            level
                .indices
                .iter()
                .map(move |idx| Ok((*idx, level.lambda as f64, eval.coefficient(measure, idx)?)))
        })
        .collect::<Result<_>>()?;
    Ok(IndexedCoefficients {
        catalog,
        lambda_max,
        entries,
    })
}

/// `alpha(T)`: total weight of levels with `lambda < T`.
pub fn counting_sum(table: &CoefficientTable, t: f64) -> Result<f64> {
    if t > table.lambda_max {
        return Err(Error::OutOfRange {
            what: "T",
            requested: t,
            available: table.lambda_max,
        });
    }
    let below = table.levels.partition_point(|l| l.lambda < t);
    Ok(table.cumulative[below])
}

/// `T^{k/2} norm_sq / ((4 pi)^{k/2} Gamma(k/2 + 1))`.
pub fn predicted_counting(k: usize, norm_sq: f64, t: f64) -> f64 {
    if k == 0 {
        return norm_sq;
    }
    let half = k as f64 / 2.0;
    t.powf(half) * norm_sq / ((4.0 * PI).powf(half) * gamma(half + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingSample {
    pub t: f64,
    pub alpha: f64,
    pub predicted: f64,
    /// `alpha / predicted`, NaN when the prediction vanishes.
    pub ratio: f64,
    /// Prediction is zero while `alpha` is not.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountingCurve {
    pub samples: Vec<CountingSample>,
    /// Log-uniform average of the ratio over the top decade of the grid.
    pub windowed_ratio: f64,
}

impl CountingCurve {
    pub fn last_ratio(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.ratio)
    }

    /// Samples with `T` in `[T_top / 10, T_top]`.
    pub fn top_decade(&self) -> &[CountingSample] {
        let Some(top) = self.samples.last().map(|s| s.t) else {
            return &[];
        };
        let start = self.samples.partition_point(|s| s.t < top / 10.0);
        &self.samples[start..]
    }
}

/// `count` log-spaced thresholds in `[t_min, t_max]`, each moved to the midpoint
/// between the two table levels around it. Duplicates after snapping are dropped.
pub fn midpoint_grid(table: &CoefficientTable, t_min: f64, t_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max >= t_min) || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < t_min <= t_max and count > 0, got [{t_min}, {t_max}] x {count}"
        )));
    }
    if t_max > table.lambda_max {
        return Err(Error::OutOfRange {
            what: "T",
            requested: t_max,
            available: table.lambda_max,
        });
    }
    let lv = &table.levels;
    let mut out: Vec<f64> = Vec::with_capacity(count);
    for i in 0..count {
        let frac = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
        let target = t_min * (t_max / t_min).powf(frac);
        let above = lv.partition_point(|l| l.lambda < target);
        let snapped = match (above.checked_sub(1).map(|j| lv[j].lambda), lv.get(above).map(|l| l.lambda)) {
            (Some(lo), Some(hi)) => {
                // Nearer of the midpoints on either side of `target`.
                let mid = 0.5 * (lo + hi);
                let prev_mid = above
                    .checked_sub(2)
                    .map(|j| 0.5 * (lv[j].lambda + lo));
                match prev_mid {
                    Some(pm) if (target - pm).abs() < (target - mid).abs() => pm,
                    _ => mid,
                }
            }
            (Some(lo), None) => lo + 0.5,
            (None, Some(hi)) => hi / 2.0,
            (None, None) => target,
        };
        let snapped = snapped.min(table.lambda_max);
        if out.last().is_none_or(|&p| snapped > p) {
            out.push(snapped);
        }
    }
    Ok(out)
}

pub fn convergence_diagnostic(table: &CoefficientTable, t_grid: &[f64]) -> Result<CountingCurve> {
    let mut samples = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let alpha = counting_sum(table, t)?;
        let predicted = predicted_counting(table.codim, table.norm_sq, t);
        let ratio = if predicted > 0.0 { alpha / predicted } else { f64::NAN };
        let flagged = predicted == 0.0 && alpha > 0.0;
        if flagged {
            log::warn!("T = {t}: predicted value is zero while alpha = {alpha}");
        }
        samples.push(CountingSample {
            t,
            alpha,
            predicted,
            ratio,
            flagged,
        });
    }
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut curve = CountingCurve {
        samples,
        windowed_ratio: f64::NAN,
    };
    curve.windowed_ratio = log_average(curve.top_decade().iter().map(|s| (s.t, s.ratio)));
    Ok(curve)
}

/// Trapezoidal average in `log t`; a single point averages to itself.
pub(crate) fn log_average(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.filter(|p| p.1.is_finite()).map(|(t, v)| (t.ln(), v)).collect();
    match pts.len() {
        0 => f64::NAN,
        1 => pts[0].1,
        _ => {
            let span = pts.last().unwrap().0 - pts[0].0;
            if span <= 0.0 {
                return pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            }
            let mut acc = KahanSum::new();
            for w in pts.windows(2) {
                acc.add(0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0));
            }
            acc.value() / span
        }
    }
}

/// `\int e^{-tT} d alpha(T)` as a Stieltjes sum over the jumps of `alpha`, ascending in `T`.
pub fn stieltjes_laplace(table: &CoefficientTable, t: f64) -> f64 {
    let mut acc = KahanSum::new();
    for l in &table.levels {
        if l.weight != 0.0 {
            acc.add(l.weight * (-t * l.lambda).exp());
        }
    }
    acc.value()
}

/// Content hash identifying the table of a measure up to `lambda_max`.
pub fn table_key(measure: &MeasureSpec, lambda_max: f64) -> String {
    let mut h = Sha256::new();
    h.update(measure.descriptor().as_bytes());
    h.update(b"|lambda_max=");
    h.update(lambda_max.to_le_bytes());
    hex_digest(h)
}

fn hex_digest(h: Sha256) -> String {
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub const TABLE_MAGIC: &[u8; 4] = b"SSPT";
pub const TABLE_VERSION: u32 = 1;

/// Serialized layout, all integers and doubles little-endian:
///
/// ```text
/// magic "SSPT" | version u32
/// catalog str | descriptor str | key str          (str = u32 length + UTF-8)
/// codim u32 | norm_sq f64 | lambda_max f64 | n u64
/// lambda f64 x n | weight f64 x n
/// sha256 of everything above (32 bytes)
/// ```
pub fn write_table(table: &CoefficientTable, key: &str, mut out: impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(64 + 16 * table.levels.len());
    buf.extend_from_slice(TABLE_MAGIC);
    buf.extend_from_slice(&TABLE_VERSION.to_le_bytes());
    for s in [catalog_tag(table.catalog).as_str(), table.descriptor.as_str(), key] {
        buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
        buf.extend_from_slice(s.as_bytes());
    }
    buf.extend_from_slice(&(table.codim as u32).to_le_bytes());
    buf.extend_from_slice(&table.norm_sq.to_le_bytes());
    buf.extend_from_slice(&table.lambda_max.to_le_bytes());
    buf.extend_from_slice(&(table.levels.len() as u64).to_le_bytes());
    for l in &table.levels {
        buf.extend_from_slice(&l.lambda.to_le_bytes());
    }
    for l in &table.levels {
        buf.extend_from_slice(&l.weight.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    out.write_all(&buf)?;
    Ok(())
}

/// Parses a table written by [`write_table`], returning it with its stored key.
pub fn read_table(mut input: impl Read) -> Result<(CoefficientTable, String)> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() < 8 + 32 {
        return Err(Error::Format("file too short".into()));
    }
    let (payload, digest) = buf.split_at(buf.len() - 32);
    let mut r = Cursor { data: payload, pos: 0 };
    if r.take(4)? != TABLE_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != TABLE_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    if Sha256::digest(payload).as_slice() != digest {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let catalog = parse_catalog_tag(&r.string()?)?;
    let descriptor = r.string()?;
    let key = r.string()?;
    let codim = r.u32()? as usize;
    let norm_sq = r.f64()?;
    let lambda_max = r.f64()?;
    let n = r.u64()? as usize;
    if r.remaining() != 16 * n {
        return Err(Error::Format("body length does not match level count".into()));
    }
    let lambdas: Vec<f64> = (0..n).map(|_| r.f64()).collect::<Result<_>>()?;
    let weights: Vec<f64> = (0..n).map(|_| r.f64()).collect::<Result<_>>()?;
    let levels = lambdas
        .into_iter()
        .zip(weights)
        .map(|(lambda, weight)| LevelWeight { lambda, weight })
        .collect();
    let table = CoefficientTable::from_levels(catalog, descriptor, codim, norm_sq, lambda_max, levels)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((table, key))
}

fn catalog_tag(c: SpectralCatalog) -> String {
    match c {
        SpectralCatalog::FlatTorus(m) => format!("torus{m}"),
        SpectralCatalog::Sphere2 => "sphere2".into(),
    }
}

fn parse_catalog_tag(s: &str) -> Result<SpectralCatalog> {
    if s == "sphere2" {
        return Ok(SpectralCatalog::Sphere2);
    }
    s.strip_prefix("torus")
        .and_then(|d| d.parse().ok())
        .map(SpectralCatalog::torus)
        .transpose()?
        .ok_or_else(|| Error::Format(format!("unknown catalog {s:?}")))
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of file".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("invalid UTF-8".into()))
    }
}
