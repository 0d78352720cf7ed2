use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use subspec_core::counting::{
    build_coefficient_table, convergence_diagnostic, midpoint_grid, table_key, CoefficientTable, CountingCurve,
};
use subspec_core::curvature::{
    laplace_method_value, laplace_min_resolution, laplace_rate, hessian_bounds, model_shape_value, rho_hessian_fd,
    riccati_integrate, sphere_shape_bounds, GeodesicProbeConfig,
};
use subspec_core::heat::{heat_diagnostic, karamata_crosscheck, log_uniform, CrosscheckStatus, HeatCurve};
use subspec_core::measures::Submanifold;
use subspec_core::spectra::SpectralCatalog;

use crate::cache::{cache_lookup, cache_store};
use crate::config::{ExperimentConfig, Suite, ToleranceProfile, Tolerances};
use crate::error::Result;
use crate::report::{fmt_f64, Csv};

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Overrides `output.dir`.
    pub output_dir: Option<PathBuf>,
    /// `None` disables the table cache regardless of the configured policy.
    pub cache_root: Option<PathBuf>,
    pub profile: ToleranceProfile,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            output_dir: None,
            cache_root: Some(crate::cache::default_cache_root()),
            profile: ToleranceProfile::Default,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSource {
    NotNeeded,
    Built,
    Cached,
}

/// One pass/fail test of a reported number against `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: Suite, name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            suite,
            name: name.to_string(),
            value,
            lo,
            hi,
            passed: value >= lo && value <= hi,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Provenance {
    /// SHA-256 of the configuration text.
    pub config_hash: String,
    pub version: &'static str,
    pub wall_time: Duration,
    pub table_key: Option<String>,
    pub table_source: TableSource,
    pub profile: ToleranceProfile,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub output_dir: PathBuf,
    pub csv_paths: Vec<(Suite, PathBuf)>,
    pub plot_paths: Vec<PathBuf>,
    /// `summary.csv`, absent when no checks ran.
    pub summary_path: Option<PathBuf>,
    pub provenance_path: PathBuf,
    pub checks: Vec<Check>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    tol: Tolerances,
    out: PathBuf,
    csv_paths: Vec<(Suite, PathBuf)>,
    plot_paths: Vec<PathBuf>,
    checks: Vec<Check>,
}

pub fn run_experiment(cfg: &ExperimentConfig, options: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let out = options.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&out)?;
    let mut runner = Runner {
        cfg,
        tol: cfg.tolerances.with_profile(options.profile),
        out: out.clone(),
        csv_paths: Vec::new(),
        plot_paths: Vec::new(),
        checks: Vec::new(),
    };

    let needs_table = cfg.has(Suite::Counting) || cfg.has(Suite::Heat);
    let (table, key, source) = if needs_table {
        let (t, k, s) = obtain_table(cfg, options)?;
        (Some(t), Some(k), s)
    } else {
        (None, None, TableSource::NotNeeded)
    };

    let mut counting = None;
    let mut heat = None;
    for &suite in &cfg.suites {
        match suite {
            Suite::Counting => counting = Some(runner.counting(table.as_ref().unwrap())?),
            Suite::Heat => heat = Some(runner.heat(table.as_ref().unwrap())?),
            Suite::Karamata => {
                runner.karamata(heat.as_ref().unwrap(), counting.as_ref().unwrap(), table.as_ref().unwrap().codim)?
            }
            Suite::Curvature => runner.curvature()?,
            Suite::LaplaceMethod => runner.laplace()?,
        }
    }

    let summary_path = if runner.checks.is_empty() {
        None
    } else {
        let mut csv = Csv::new(&["suite", "check", "value", "lo", "hi", "passed"]);
        for c in &runner.checks {
            csv.row_text(vec![
                c.suite.name().to_string(),
                c.name.clone(),
                fmt_f64(c.value),
                fmt_f64(c.lo),
                fmt_f64(c.hi),
                c.passed.to_string(),
            ]);
        }
        Some(csv.write(&out.join("summary.csv"))?)
    };

    let provenance = Provenance {
        config_hash: hex(&Sha256::digest(cfg.source.as_bytes())),
        version: env!("CARGO_PKG_VERSION"),
        wall_time: start.elapsed(),
        table_key: key,
        table_source: source,
        profile: options.profile,
    };
    let provenance_path = out.join("provenance.txt");
    fs::write(&provenance_path, provenance_text(cfg, &provenance))?;

    Ok(RunReport {
        name: cfg.name.clone(),
        output_dir: out,
        csv_paths: runner.csv_paths,
        plot_paths: runner.plot_paths,
        summary_path,
        provenance_path,
        checks: runner.checks,
        provenance,
    })
}

fn obtain_table(cfg: &ExperimentConfig, options: &RunOptions) -> Result<(CoefficientTable, String, TableSource)> {
    use crate::config::CachePolicy;
    let key = table_key(&cfg.measure, cfg.lambda_max);
    let root = match (&options.cache_root, cfg.cache_policy) {
        (Some(root), CachePolicy::Use | CachePolicy::Refresh) => Some(root.as_path()),
        _ => None,
    };
    if let (Some(root), CachePolicy::Use) = (root, cfg.cache_policy) {
        if let Some(table) = cache_lookup(root, &key) {
            log::info!("using cached table {key}");
            return Ok((table, key, TableSource::Cached));
        }
    }
    log::info!("building coefficient table for {} up to {}", cfg.measure.descriptor(), cfg.lambda_max);
    let table = build_coefficient_table(cfg.catalog, &cfg.measure, cfg.lambda_max)?;
    if let Some(root) = root {
        cache_store(root, &key, &table)?;
    }
    Ok((table, key, TableSource::Built))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn provenance_text(cfg: &ExperimentConfig, p: &Provenance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "name = {}", cfg.name);
    let _ = writeln!(s, "config_sha256 = {}", p.config_hash);
    let _ = writeln!(s, "version = {}", p.version);
    let _ = writeln!(s, "wall_time_s = {}", p.wall_time.as_secs_f64());
    let _ = writeln!(s, "table_key = {}", p.table_key.as_deref().unwrap_or("-"));
    let _ = writeln!(s, "table_source = {:?}", p.table_source);
    let _ = writeln!(s, "tolerance_profile = {:?}", p.profile);
    s
}

fn plot_script(data: &str, xlabel: &str, ylabel: &str, columns: &str, logy: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set logscale x");
    if logy {
        let _ = writeln!(s, "set logscale y");
    }
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    let _ = writeln!(s, "plot '{data}' using {columns} with linespoints");
    s
}

impl Runner<'_> {
    fn emit(&mut self, suite: Suite, file: &str, csv: Csv) -> Result<()> {
        let path = csv.write(&self.out.join(file))?;
        self.csv_paths.push((suite, path));
        Ok(())
    }

    fn emit_plot(&mut self, file: &str, script: String) -> Result<()> {
        let path = self.out.join(file);
        fs::write(&path, script)?;
        self.plot_paths.push(path);
        Ok(())
    }

    fn push(&mut self, suite: Suite, name: &str, value: f64, lo: f64, hi: f64) {
        self.checks.push(Check::new(suite, name, value, lo, hi));
    }

    fn counting(&mut self, table: &CoefficientTable) -> Result<CountingCurve> {
        let g = self.cfg.counting_grid.expect("validated");
        let grid = midpoint_grid(table, g.min, g.max, g.count)?;
        let curve = convergence_diagnostic(table, &grid)?;
        let mut csv = Csv::new(&["T[eigenvalue]", "alpha", "alpha_pred", "ratio", "flagged"]);
        for s in &curve.samples {
            csv.row_text(vec![
                fmt_f64(s.t),
                fmt_f64(s.alpha),
                fmt_f64(s.predicted),
                fmt_f64(s.ratio),
                s.flagged.to_string(),
            ]);
        }
        self.emit(Suite::Counting, "counting.csv", csv)?;
        self.emit_plot("counting.gp", plot_script("counting.csv", "T", "alpha / prediction", "1:4", false))?;
        let tol = self.tol.counting_ratio;
        let (name, value) = if self.cfg.counting_windowed {
            ("counting_windowed_ratio", curve.windowed_ratio)
        } else {
            ("counting_last_ratio", curve.last_ratio())
        };
        self.push(Suite::Counting, name, value, 1.0 - tol, 1.0 + tol);
        Ok(curve)
    }

    fn heat(&mut self, table: &CoefficientTable) -> Result<HeatCurve> {
        let g = self.cfg.heat_grid.expect("validated");
        let curve = heat_diagnostic(table, &log_uniform(g.min, g.max, g.count))?;
        let mut csv = Csv::new(&["t[1/eigenvalue]", "norm_sq", "tail_bound", "predicted", "ratio"]);
        for s in &curve.samples {
            csv.row(&[s.t, s.norm_sq, s.tail_bound, s.predicted, s.ratio]);
        }
        self.emit(Suite::Heat, "heat.csv", csv)?;
        self.emit_plot("heat.gp", plot_script("heat.csv", "t", "heat norm / prediction", "1:5", false))?;
        let dev = curve.samples.iter().map(|s| (s.ratio - 1.0).abs()).fold(0.0, f64::max);
        self.push(Suite::Heat, "heat_max_ratio_deviation", dev, 0.0, self.tol.heat_ratio);
        Ok(curve)
    }

    fn karamata(&mut self, heat: &HeatCurve, counting: &CountingCurve, k: usize) -> Result<()> {
        let rec = karamata_crosscheck(heat, counting, k)?;
        let mut csv = Csv::new(&["T[eigenvalue]", "alpha", "alpha_tauberian", "relative_deviation"]);
        for &(t, a, p) in &rec.comparisons {
            csv.row(&[t, a, p, (p - a).abs() / a.abs()]);
        }
        self.emit(Suite::Karamata, "karamata.csv", csv)?;
        let target = k as f64 / 2.0;
        let mut fit = Csv::new(&["fitted_exponent", "target_exponent", "amplitude", "fit_residual"]);
        fit.row(&[rec.fitted_exponent, target, rec.amplitude, rec.fit_residual]);
        self.emit(Suite::Karamata, "karamata_fit.csv", fit)?;
        let tol = self.tol.karamata_exponent;
        let half_width = if k == 0 { tol } else { tol * target };
        self.push(Suite::Karamata, "karamata_exponent", rec.fitted_exponent, target - half_width, target + half_width);
        self.push(
            Suite::Karamata,
            "karamata_alpha_deviation",
            rec.max_relative_deviation,
            0.0,
            self.tol.karamata_alpha,
        );
        let conclusive = if rec.status == CrosscheckStatus::Conclusive { 1.0 } else { 0.0 };
        self.push(Suite::Karamata, "karamata_conclusive", conclusive, 1.0, 1.0);
        Ok(())
    }

    fn curvature(&mut self) -> Result<()> {
        let r = &self.cfg.riccati;
        let mut closed = Csv::new(&["K", "s", "k", "k_closed", "abs_error"]);
        let mut worst: f64 = 0.0;
        for kk in [-1.0, 0.0, 1.0] {
            let trace = riccati_integrate(|_| kk, r.s_start, r.s_end, r.steps)?;
            for &(s, k) in &trace.samples {
                let want = model_shape_value(kk, s)?;
                let err = (k - want).abs();
                worst = worst.max(err);
                closed.row(&[kk, s, k, want, err]);
            }
        }
        self.emit(Suite::Curvature, "riccati_closed.csv", closed)?;
        self.push(Suite::Curvature, "riccati_closed_form_max_error", worst, 0.0, self.tol.riccati);

        // Random smooth profiles with |K| <= 1, compared against the lambda = 1 envelope.
        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
        let mut env = Csv::new(&["profile", "s", "k", "lo", "hi", "violation"]);
        let mut violations = 0usize;
        let s_end = r.s_end.min(FRAC_PI_2);
        for p in 0..r.profiles {
            let terms: Vec<(f64, f64, f64)> =
                (0..3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..10.0), rng.gen_range(0.0..6.3))).collect();
            let scale = terms.iter().map(|t| t.0.abs()).sum::<f64>().max(1.0);
            let profile = |s: f64| terms.iter().map(|&(a, w, ph)| a * (w * s + ph).sin()).sum::<f64>() / scale;
            let trace = riccati_integrate(profile, r.s_start, s_end, r.steps)?;
            let bad = trace.envelope_violations(1.0, self.tol.riccati);
            violations += bad.len();
            for &(s, k) in &trace.samples {
                let b = sphere_shape_bounds(1.0, s)?;
                let flagged = bad.iter().any(|v| v.0 == s);
                env.row_text(vec![
                    p.to_string(),
                    fmt_f64(s),
                    fmt_f64(k),
                    fmt_f64(b.lo),
                    fmt_f64(b.hi),
                    flagged.to_string(),
                ]);
            }
        }
        self.emit(Suite::Curvature, "riccati_envelope.csv", env)?;
        self.push(Suite::Curvature, "riccati_envelope_violations", violations as f64, 0.0, 0.0);

        let measure = &self.cfg.measure;
        if measure.dim() == 0 {
            return Ok(());
        }
        let (kappa, lambda) = (measure.sff_bound(), measure.curvature_bound());
        let mut csv = Csv::new(&["d", "hessian", "error_estimate", "lo", "hi"]);
        let mut excess: f64 = 0.0;
        for &d in &self.cfg.probe.distances {
            let cfg = self.probe(d)?;
            let h = rho_hessian_fd(&cfg)?;
            let (lo, hi) = if d > 0.0 { hessian_bounds(d, kappa, lambda)? } else { (2.0, 2.0) };
            excess = excess.max(lo - h.value).max(h.value - hi);
            csv.row(&[d, h.value, h.error_estimate, lo, hi]);
        }
        self.emit(Suite::Curvature, "hessian.csv", csv)?;
        self.push(Suite::Curvature, "hessian_envelope_excess", excess, f64::NEG_INFINITY, self.tol.hessian);
        Ok(())
    }

    /// Probe at distance `d` from the support, displaced along its first normal direction.
    fn probe(&self, d: f64) -> Result<GeodesicProbeConfig> {
        let measure = &self.cfg.measure;
        let foot = &self.cfg.probe.foot;
        let n = measure.dim();
        let mut x = measure.embed(foot);
        match (self.cfg.catalog, measure.submanifold()) {
            (SpectralCatalog::Sphere2, _) => x[0] = FRAC_PI_2 - d,
            (_, Submanifold::SubTorus { dim, .. }) => x[*dim] += d,
            _ => {}
        }
        let mut direction = vec![0.0; n];
        direction[0] = 1.0;
        Ok(GeodesicProbeConfig::new(measure.clone(), &x, &direction)?)
    }

    fn laplace(&mut self) -> Result<()> {
        let spec = self.cfg.laplace.as_ref().expect("validated");
        let probe = self.probe(spec.distance)?;
        let mut times = spec.times.clone();
        times.sort_by(|a, b| b.total_cmp(a));
        let mut csv = Csv::new(&["t[1/eigenvalue]", "resolution", "value", "limit_target", "abs_error"]);
        let mut last_err = f64::NAN;
        for &t in &times {
            let res = laplace_min_resolution(t).max(64);
            let v = laplace_method_value(&probe, &spec.g, t, res)?;
            last_err = (v.value - v.limit_target).abs();
            csv.row_text(vec![
                fmt_f64(t),
                res.to_string(),
                fmt_f64(v.value),
                fmt_f64(v.limit_target),
                fmt_f64(last_err),
            ]);
        }
        self.emit(Suite::LaplaceMethod, "laplace.csv", csv)?;
        let rate = laplace_rate(&probe, &spec.g, &times)?;
        let mut fit = Csv::new(&["exponent", "constant"]);
        fit.row(&[rate.exponent, rate.constant]);
        self.emit(Suite::LaplaceMethod, "laplace_fit.csv", fit)?;
        self.emit_plot("laplace.gp", plot_script("laplace.csv", "t", "|value - limit|", "1:5", true))?;
        self.push(Suite::LaplaceMethod, "laplace_value_error", last_err, 0.0, self.tol.laplace_value);
        let (lo, hi) = self.tol.laplace_exponent;
        self.push(Suite::LaplaceMethod, "laplace_exponent", rate.exponent, lo, hi);
        Ok(())
    }
}
