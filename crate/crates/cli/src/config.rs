//! Experiment configuration files.
//!
//! The format is one `key = value` assignment per line. Keys are dotted
//! (`catalog.kind`, `grid.T.max`), `#` starts a comment, blank lines are ignored
//! and a key may appear at most once. Values are plain text; lists are
//! comma-separated. Density terms are `;`-separated, each written as
//! `[f1 f2 ...] re [im]` for trig polynomials or `l q re [im]` for spherical
//! harmonic expansions.
//!
//! ```text
//! name = torus2-delta
//! catalog.kind = torus
//! catalog.dimension = 2
//! measure.kind = point
//! measure.location = 1.0, 1.0
//! spectrum.lambda_max = 1e6
//! grid.T.min = 1e5
//! grid.T.max = 1e6
//! grid.T.count = 40
//! suites = counting
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use subspec_core::density::{Density, HarmonicPoly, TrigPoly};
use subspec_core::heat::TRUNCATION_PRODUCT;
use subspec_core::measures::{MeasureSpec, Submanifold};
use subspec_core::spectra::SpectralCatalog;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Counting,
    Heat,
    Karamata,
    Curvature,
    LaplaceMethod,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Counting => "counting",
            Suite::Heat => "heat",
            Suite::Karamata => "karamata",
            Suite::Curvature => "curvature",
            Suite::LaplaceMethod => "laplace_method",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "counting" => Suite::Counting,
            "heat" => Suite::Heat,
            "karamata" => Suite::Karamata,
            "curvature" => Suite::Curvature,
            "laplace_method" => Suite::LaplaceMethod,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    /// Read and write the table cache.
    Use,
    /// Ignore the cache entirely.
    Off,
    /// Rebuild the table and overwrite the cached copy.
    Refresh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceProfile {
    Default,
    /// Every tolerance halved, and the Laplace exponent window shrunk about its centre.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|ratio - 1|` for the counting curve (last sample, or the windowed ratio).
    pub counting_ratio: f64,
    /// `max |ratio - 1|` over the heat grid.
    pub heat_ratio: f64,
    /// Relative deviation of the fitted heat exponent from `k/2` (absolute when `k = 0`).
    pub karamata_exponent: f64,
    pub karamata_alpha: f64,
    pub riccati: f64,
    pub hessian: f64,
    pub laplace_value: f64,
    pub laplace_exponent: (f64, f64),
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            counting_ratio: 0.05,
            heat_ratio: 0.03,
            karamata_exponent: 0.02,
            karamata_alpha: 0.03,
            riccati: 1e-6,
            hessian: 1e-6,
            laplace_value: 1e-2,
            laplace_exponent: (0.4, 0.6),
        }
    }
}

impl Tolerances {
    pub fn with_profile(self, profile: ToleranceProfile) -> Self {
        match profile {
            ToleranceProfile::Default => self,
            ToleranceProfile::Strict => {
                let (lo, hi) = self.laplace_exponent;
                let (mid, half) = (0.5 * (lo + hi), 0.25 * (hi - lo));
                Self {
                    counting_ratio: self.counting_ratio / 2.0,
                    heat_ratio: self.heat_ratio / 2.0,
                    karamata_exponent: self.karamata_exponent / 2.0,
                    karamata_alpha: self.karamata_alpha / 2.0,
                    riccati: self.riccati / 2.0,
                    hessian: self.hessian / 2.0,
                    laplace_value: self.laplace_value / 2.0,
                    laplace_exponent: (mid - half, mid + half),
                }
            }
        }
    }
}

/// Hessian probes at distances `d` from the support along its first normal direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub distances: Vec<f64>,
    /// Intrinsic coordinates of the foot point.
    pub foot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSpec {
    pub profiles: usize,
    pub seed: u64,
    pub s_start: f64,
    pub s_end: f64,
    pub steps: usize,
}

impl Default for RiccatiSpec {
    fn default() -> Self {
        Self {
            profiles: 20,
            seed: 1,
            s_start: 1e-3,
            s_end: 1.5,
            steps: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceSpec {
    pub distance: f64,
    pub g: TrigPoly,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub catalog: SpectralCatalog,
    pub measure: MeasureSpec,
    pub lambda_max: f64,
    pub counting_grid: Option<GridSpec>,
    pub heat_grid: Option<GridSpec>,
    /// Sorted in execution order.
    pub suites: Vec<Suite>,
    pub output_dir: PathBuf,
    pub cache_policy: CachePolicy,
    /// Judge the counting curve by its windowed ratio instead of the last sample.
    pub counting_windowed: bool,
    pub probe: ProbeSpec,
    pub riccati: RiccatiSpec,
    pub laplace: Option<LaplaceSpec>,
    pub tolerances: Tolerances,
    /// The text the configuration was parsed from.
    pub source: String,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.name.is_empty() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Assignments::parse(text)?;
        let cfg = Self::from_assignments(&mut kv, text)?;
        if let Some(key) = kv.unused().next() {
            return Err(field(key, "unknown key"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn has(&self, suite: Suite) -> bool {
        self.suites.contains(&suite)
    }

    fn from_assignments(kv: &mut Assignments, text: &str) -> Result<Self> {
        let name = kv.take("name").unwrap_or_default();
        let catalog = match kv.require("catalog.kind")?.as_str() {
            "torus" => {
                let m: usize = kv.parse_or("catalog.dimension", 2)?;
                SpectralCatalog::torus(m).map_err(|e| field("catalog.dimension", e))?
            }
            "sphere2" => {
                if let Some(m) = kv.take("catalog.dimension") {
                    if m != "2" {
                        return Err(field("catalog.dimension", "sphere2 has dimension 2"));
                    }
                }
                SpectralCatalog::Sphere2
            }
            other => return Err(field("catalog.kind", format!("expected torus or sphere2, got {other:?}"))),
        };
        let measure = parse_measure(kv, catalog)?;
        let lambda_max = kv.parse_required::<f64>("spectrum.lambda_max")?;

        let counting_grid = parse_grid(kv, "grid.T")?;
        let heat_grid = parse_grid(kv, "grid.t")?;

        let mut suites = Vec::new();
        if let Some(list) = kv.take("suites") {
            for s in split_list(&list) {
                let suite = Suite::parse(s).ok_or_else(|| field("suites", format!("unknown suite {s:?}")))?;
                if !suites.contains(&suite) {
                    suites.push(suite);
                }
            }
        }
        suites.sort();

        let output_dir = PathBuf::from(kv.take("output.dir").unwrap_or_else(|| "out".into()));
        let cache_policy = match kv.take("cache.policy").as_deref() {
            None | Some("use") => CachePolicy::Use,
            Some("off") => CachePolicy::Off,
            Some("refresh") => CachePolicy::Refresh,
            Some(other) => return Err(field("cache.policy", format!("expected use, off or refresh, got {other:?}"))),
        };
        let counting_windowed = kv.parse_or("counting.windowed", false)?;

        let probe = ProbeSpec {
            distances: match kv.take("probe.distances") {
                Some(v) => parse_floats("probe.distances", &v)?,
                None => (1..=10).map(|i| 0.05 * i as f64).collect(),
            },
            foot: match kv.take("probe.foot") {
                Some(v) => parse_floats("probe.foot", &v)?,
                None => vec![0.0; measure.dim()],
            },
        };

        let defaults = RiccatiSpec::default();
        let riccati = RiccatiSpec {
            profiles: kv.parse_or("riccati.profiles", defaults.profiles)?,
            seed: kv.parse_or("riccati.seed", defaults.seed)?,
            s_start: kv.parse_or("riccati.s_start", defaults.s_start)?,
            s_end: kv.parse_or("riccati.s_end", defaults.s_end)?,
            steps: kv.parse_or("riccati.steps", defaults.steps)?,
        };

        let laplace = match kv.take("laplace.distance") {
            None => None,
            Some(d) => {
                let distance = parse_float("laplace.distance", &d)?;
                let g = match kv.take("laplace.g") {
                    Some(v) => parse_trig("laplace.g", &v, measure.dim())?,
                    None => TrigPoly::constant(measure.dim(), 1.0),
                };
                let times = match kv.take("laplace.times") {
                    Some(v) => parse_floats("laplace.times", &v)?,
                    None => vec![1e-2, 1e-3, 1e-4],
                };
                Some(LaplaceSpec { distance, g, times })
            }
        };

        let d = Tolerances::default();
        let (exp_lo, exp_hi) = d.laplace_exponent;
        let tolerances = Tolerances {
            counting_ratio: kv.parse_or("tolerance.counting_ratio", d.counting_ratio)?,
            heat_ratio: kv.parse_or("tolerance.heat_ratio", d.heat_ratio)?,
            karamata_exponent: kv.parse_or("tolerance.karamata_exponent", d.karamata_exponent)?,
            karamata_alpha: kv.parse_or("tolerance.karamata_alpha", d.karamata_alpha)?,
            riccati: kv.parse_or("tolerance.riccati", d.riccati)?,
            hessian: kv.parse_or("tolerance.hessian", d.hessian)?,
            laplace_value: kv.parse_or("tolerance.laplace_value", d.laplace_value)?,
            laplace_exponent: (
                kv.parse_or("tolerance.laplace_exponent.min", exp_lo)?,
                kv.parse_or("tolerance.laplace_exponent.max", exp_hi)?,
            ),
        };

        Ok(Self {
            name,
            catalog,
            measure,
            lambda_max,
            counting_grid,
            heat_grid,
            suites,
            output_dir,
            cache_policy,
            counting_windowed,
            probe,
            riccati,
            laplace,
            tolerances,
            source: text.to_string(),
        })
    }

    /// Checks every suite precondition that can be decided before computing anything.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_max.is_finite() && self.lambda_max >= 0.0) {
            return Err(field("spectrum.lambda_max", "must be finite and non-negative"));
        }
        let needs_table = self.has(Suite::Counting) || self.has(Suite::Heat) || self.has(Suite::Karamata);
        if needs_table && self.lambda_max < 1.0 {
            return Err(field("spectrum.lambda_max", "must be at least 1 to build a coefficient table"));
        }
        if self.has(Suite::Counting) || self.has(Suite::Karamata) {
            let g = self.counting_grid.ok_or_else(|| field("grid.T.min", "the counting suites need grid.T"))?;
            if g.max > self.lambda_max {
                return Err(field(
                    "grid.T.max",
                    format!("{} exceeds spectrum.lambda_max = {}", g.max, self.lambda_max),
                ));
            }
        }
        if self.has(Suite::Heat) || self.has(Suite::Karamata) {
            let g = self.heat_grid.ok_or_else(|| field("grid.t.min", "the heat suites need grid.t"))?;
            let minimal = TRUNCATION_PRODUCT / self.lambda_max;
            if g.min < minimal {
                return Err(field(
                    "grid.t.min",
                    format!("{} is below the truncation limit {minimal} for this lambda_max", g.min),
                ));
            }
        }
        if self.has(Suite::Karamata) && !(self.has(Suite::Counting) && self.has(Suite::Heat)) {
            return Err(field("suites", "karamata needs both counting and heat"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerance.counting_ratio", t.counting_ratio),
            ("tolerance.heat_ratio", t.heat_ratio),
            ("tolerance.karamata_exponent", t.karamata_exponent),
            ("tolerance.karamata_alpha", t.karamata_alpha),
            ("tolerance.riccati", t.riccati),
            ("tolerance.hessian", t.hessian),
            ("tolerance.laplace_value", t.laplace_value),
        ] {
            if !(v > 0.0) {
                return Err(field(name, "must be positive"));
            }
        }
        if self.has(Suite::Curvature) {
            let r = &self.riccati;
            if !(r.s_start > 0.0 && r.s_end > r.s_start) || r.steps == 0 {
                return Err(field("riccati.s_start", "need 0 < s_start < s_end and steps > 0"));
            }
            if self.measure.dim() > 0 {
                if self.probe.foot.len() != self.measure.dim() {
                    return Err(field("probe.foot", format!("needs {} coordinates", self.measure.dim())));
                }
                let limit = self.tubular_radius();
                if let Some(&d) = self.probe.distances.iter().find(|&&d| !(d >= 0.0 && d < limit)) {
                    return Err(field("probe.distances", format!("{d} is outside [0, {limit})")));
                }
            }
        }
        if self.has(Suite::LaplaceMethod) {
            let l = self
                .laplace
                .as_ref()
                .ok_or_else(|| field("laplace.distance", "the laplace_method suite needs laplace.distance"))?;
            if !(l.distance >= 0.0 && l.distance < self.tubular_radius()) {
                return Err(field("laplace.distance", "must lie inside the tubular radius"));
            }
            if l.times.len() < 2 || l.times.iter().any(|&t| !(t > 0.0)) {
                return Err(field("laplace.times", "need at least two positive times"));
            }
        }
        Ok(())
    }

    fn tubular_radius(&self) -> f64 {
        match (self.catalog, self.measure.submanifold()) {
            (_, Submanifold::FullManifold) => f64::INFINITY,
            (SpectralCatalog::Sphere2, _) => std::f64::consts::FRAC_PI_2,
            _ => std::f64::consts::PI,
        }
    }
}

fn field(name: &str, message: impl ToString) -> CliError {
    CliError::Config {
        field: name.to_string(),
        message: message.to_string(),
    }
}

struct Assignments {
    values: BTreeMap<String, String>,
}

impl Assignments {
    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                field(&format!("line {}", lineno + 1), format!("expected key = value, got {line:?}"))
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(field(&format!("line {}", lineno + 1), format!("bad key {key:?}")));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(field(key, "assigned more than once"));
            }
        }
        Ok(Self { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| field(key, "missing"))
    }

    fn parse_required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.require(key)?;
        v.parse().map_err(|_| field(key, format!("cannot parse {v:?}")))
    }

    fn parse_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            Some(v) => v.parse().map_err(|_| field(key, format!("cannot parse {v:?}"))),
            None => Ok(default),
        }
    }

    fn unused(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_float(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| field(key, format!("cannot parse {v:?} as a number")))?;
    if !x.is_finite() {
        return Err(field(key, "must be finite"));
    }
    Ok(x)
}

fn parse_floats(key: &str, v: &str) -> Result<Vec<f64>> {
    split_list(v).map(|s| parse_float(key, s)).collect()
}

fn parse_grid(kv: &mut Assignments, prefix: &str) -> Result<Option<GridSpec>> {
    let (kmin, kmax, kcount) = (format!("{prefix}.min"), format!("{prefix}.max"), format!("{prefix}.count"));
    let min = kv.take(&kmin);
    let max = kv.take(&kmax);
    let count = kv.take(&kcount);
    if min.is_none() && max.is_none() && count.is_none() {
        return Ok(None);
    }
    let min = parse_float(&kmin, &min.ok_or_else(|| field(&kmin, "missing"))?)?;
    let max = parse_float(&kmax, &max.ok_or_else(|| field(&kmax, "missing"))?)?;
    let count: usize = match count {
        Some(c) => c.parse().map_err(|_| field(&kcount, format!("cannot parse {c:?}")))?,
        None => 20,
    };
    if !(min > 0.0) {
        return Err(field(&kmin, "must be positive"));
    }
    if max < min {
        return Err(field(&kmax, "must not be below the minimum"));
    }
    if count == 0 {
        return Err(field(&kcount, "must be positive"));
    }
    Ok(Some(GridSpec { min, max, count }))
}

fn parse_measure(kv: &mut Assignments, catalog: SpectralCatalog) -> Result<MeasureSpec> {
    let m = catalog.dimension();
    let kind = kv.require("measure.kind")?;
    let measure = match kind.as_str() {
        "point" => {
            let loc = match kv.take("measure.location") {
                Some(v) => parse_floats("measure.location", &v)?,
                None => vec![0.0; m],
            };
            let weight = match kv.take("measure.weight") {
                Some(v) => parse_float("measure.weight", &v)?,
                None => 1.0,
            };
            MeasureSpec::point(catalog, &loc, weight).map_err(|e| field("measure.location", e))?
        }
        "subtorus" => {
            let dim: usize = kv.parse_required("measure.subtorus_dim")?;
            let offset = match kv.take("measure.offset") {
                Some(v) => parse_floats("measure.offset", &v)?,
                None => vec![0.0; m.saturating_sub(dim)],
            };
            let density = density_or_one(kv, dim)?;
            MeasureSpec::subtorus(catalog, dim, &offset, density).map_err(|e| field("measure.offset", e))?
        }
        "equator" => {
            if catalog != SpectralCatalog::Sphere2 {
                return Err(field("measure.kind", "the equator lives on sphere2"));
            }
            MeasureSpec::equator(density_or_one(kv, 1)?).map_err(|e| field("measure.density", e))?
        }
        "full" => {
            let density = match (kv.take("measure.density"), kv.take("measure.harmonic")) {
                (Some(_), Some(_)) => {
                    return Err(field("measure.harmonic", "give either measure.density or measure.harmonic"))
                }
                (Some(v), None) => Density::Trig(parse_trig("measure.density", &v, m)?),
                (None, Some(v)) => Density::Harmonic(parse_harmonic("measure.harmonic", &v)?),
                (None, None) => Density::Trig(TrigPoly::constant(m, 1.0)),
            };
            MeasureSpec::full(catalog, density).map_err(|e| field("measure.density", e))?
        }
        other => {
            return Err(field(
                "measure.kind",
                format!("expected point, subtorus, equator or full, got {other:?}"),
            ))
        }
    };
    Ok(measure)
}

fn density_or_one(kv: &mut Assignments, dim: usize) -> Result<TrigPoly> {
    match kv.take("measure.density") {
        Some(v) => parse_trig("measure.density", &v, dim),
        None => Ok(TrigPoly::constant(dim, 1.0)),
    }
}

fn parse_complex(key: &str, parts: &[&str]) -> Result<Complex64> {
    match parts {
        [re] => Ok(Complex64::new(parse_float(key, re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse_float(key, re)?, parse_float(key, im)?)),
        _ => Err(field(key, format!("expected re [im], got {:?}", parts.join(" ")))),
    }
}

/// `[f1 f2] re [im]; ...`
pub(crate) fn parse_trig(key: &str, v: &str, dim: usize) -> Result<TrigPoly> {
    let mut p = TrigPoly::new(dim);
    for term in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let rest = term
            .strip_prefix('[')
            .ok_or_else(|| field(key, format!("term {term:?} must start with [frequencies]")))?;
        let (freq, coeff) = rest
            .split_once(']')
            .ok_or_else(|| field(key, format!("unclosed bracket in {term:?}")))?;
        let freq: Vec<i32> = freq
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| field(key, format!("bad frequency {s:?}"))))
            .collect::<Result<_>>()?;
        let parts: Vec<&str> = coeff.split_whitespace().collect();
        p = p.with_term(&freq, parse_complex(key, &parts)?).map_err(|e| field(key, e))?;
    }
    Ok(p)
}

/// `l q re [im]; ...`
fn parse_harmonic(key: &str, v: &str) -> Result<HarmonicPoly> {
    let mut p = HarmonicPoly::new();
    for term in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = term.split_whitespace().collect();
        if parts.len() < 3 {
            return Err(field(key, format!("expected l q re [im], got {term:?}")));
        }
        let l: u32 = parts[0].parse().map_err(|_| field(key, format!("bad degree {:?}", parts[0])))?;
        let q: i32 = parts[1].parse().map_err(|_| field(key, format!("bad order {:?}", parts[1])))?;
        p = p.with_term(l, q, parse_complex(key, &parts[2..])?).map_err(|e| field(key, e))?;
    }
    Ok(p)
}
