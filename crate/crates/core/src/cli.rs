//! Command-line front end. Every command renders its whole output into a
//! buffer before anything is written, so a failure never leaves half a CSV
//! behind and errors never interleave with data.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::heterodyne::{density_closed, density_series, sample_with, HeterodyneModel};
use crate::phase::{optimize_signal_split, phase_density_gaussian, PhaseDistribution, SensitivityResult};
use crate::verify::{run_all, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Relative tolerance of the series column in `density`.
pub const SERIES_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Density,
    PhaseDist,
    Sample,
    Sensitivity,
    Optimize,
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::PhaseDist => "phase-dist",
            Command::Sample => "sample",
            Command::Sensitivity => "sensitivity",
            Command::Optimize => "optimize",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "hetphase", version, about = "Heterodyne phase detection with twin beams")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Twin-beam parameter λ in [0, 1)
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long = "w-re", default_value_t = 0.0, allow_negative_numbers = true)]
    pub w_re: f64,
    #[arg(long = "w-im", default_value_t = 0.0, allow_negative_numbers = true)]
    pub w_im: f64,
    /// Detector quantum efficiency in (0, 1]
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub eta: f64,
    /// Photon budget for `optimize`
    #[arg(long, allow_negative_numbers = true)]
    pub nbar: Option<f64>,
    #[arg(long = "nbar-min", allow_negative_numbers = true)]
    pub nbar_min: Option<f64>,
    #[arg(long = "nbar-max", allow_negative_numbers = true)]
    pub nbar_max: Option<f64>,
    #[arg(long = "nbar-points", default_value_t = 10)]
    pub nbar_points: usize,
    #[arg(long = "grid-points", default_value_t = 1024)]
    pub grid_points: usize,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Significant digits of every printed float
    #[arg(long, default_value_t = 12)]
    pub precision: usize,
    /// Output file (standard output when absent)
    #[arg(long = "out")]
    pub out_path: Option<PathBuf>,
    #[arg(long = "inject-variance-perturbation", hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub variance_perturbation: f64,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl RunConfig {
    /// `#`-prefixed line recording every setting.
    pub fn metadata(&self) -> String {
        format!(
            "# hetphase command={} lambda={} w_re={} w_im={} eta={} nbar={} nbar_min={} nbar_max={} nbar_points={} grid_points={} count={} seed={} precision={}",
            self.command.name(),
            opt(&self.lambda),
            self.w_re,
            self.w_im,
            self.eta,
            opt(&self.nbar),
            opt(&self.nbar_min),
            opt(&self.nbar_max),
            self.nbar_points,
            self.grid_points,
            opt(&self.count),
            self.seed,
            self.precision,
        )
    }

    fn w(&self) -> Complex64 {
        Complex64::new(self.w_re, self.w_im)
    }

    fn model(&self) -> Result<HeterodyneModel> {
        let lambda = self.lambda.ok_or_else(|| usage(format!("{} requires --lambda", self.command.name())))?;
        HeterodyneModel::from_parts(lambda, self.w(), self.eta)
    }

    fn validate(&self) -> Result<()> {
        if self.precision == 0 || self.precision > 17 {
            return Err(usage(format!("--precision must lie in 1..=17, got {}", self.precision)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(usage(format!("--eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.w_re.is_finite() && self.w_im.is_finite()) {
            return Err(usage("signal amplitude must be finite".into()));
        }
        Ok(())
    }
}

fn usage(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

struct Csv {
    buf: String,
    precision: usize,
}

impl Csv {
    fn new(cfg: &RunConfig, header: &str) -> Self {
        let mut buf = cfg.metadata();
        buf.push('\n');
        buf.push_str(header);
        buf.push('\n');
        Self { buf, precision: cfg.precision }
    }

    fn num(&self, x: f64) -> String {
        format!("{:.*e}", self.precision - 1, x)
    }

    fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }
}

pub fn run_density(cfg: &RunConfig, exec: Execution) -> Result<String> {
    let model = cfg.model()?;
    let g = cfg.grid_points;
    if g < 2 {
        return Err(usage("--grid-points must be at least 2".into()));
    }
    let d = model.variance().sqrt();
    let step = 8.0 * d / (g - 1) as f64;
    let lo = model.w - Complex64::new(4.0 * d, 4.0 * d);
    let with_series = model.eta == 1.0;
    let mut csv = Csv::new(cfg, "re_z,im_z,density_closed,density_series");
    let rows = exec.map_indexed(g * g, |k| -> Result<(Complex64, f64, Option<f64>)> {
        let (i, j) = (k / g, k % g);
        let z = lo + Complex64::new(j as f64 * step, i as f64 * step);
        let series = if with_series { Some(density_series(z, &model, SERIES_TOL)?) } else { None };
        Ok((z, density_closed(z, &model), series))
    });
    for r in rows {
        let (z, closed, series) = r?;
        let s = series.map_or_else(String::new, |v| csv.num(v));
        let fields = [csv.num(z.re), csv.num(z.im), csv.num(closed), s];
        csv.row(&fields);
    }
    Ok(csv.buf)
}

pub fn run_phase_dist(cfg: &RunConfig, exec: Execution) -> Result<String> {
    let model = cfg.model()?;
    if cfg.grid_points < 2 {
        return Err(usage("--grid-points must be at least 2".into()));
    }
    let dist = PhaseDistribution::compute(&model, cfg.grid_points, exec)?;
    let mut csv = Csv::new(cfg, "phi,p_exact,p_gaussian");
    for (&phi, &p) in dist.grid.iter().zip(&dist.density) {
        let gauss = phase_density_gaussian(phi, &model).map_or_else(|_| String::new(), |v| csv.num(v));
        let fields = [csv.num(phi), csv.num(p), gauss];
        csv.row(&fields);
    }
    let _ = writeln!(csv.buf, "# integral={}", csv.num(dist.integral()));
    Ok(csv.buf)
}

pub fn run_sample(cfg: &RunConfig, exec: Execution) -> Result<String> {
    let model = cfg.model()?;
    let count = cfg.count.ok_or_else(|| usage("sample requires --count".into()))?;
    if count == 0 {
        return Err(usage("--count must be at least 1".into()));
    }
    let batch = sample_with(&model, count, cfg.seed, exec)?;
    let mut csv = Csv::new(cfg, "index,re_z,im_z,arg_z");
    for (i, z) in batch.outcomes.iter().enumerate() {
        let fields = [i.to_string(), csv.num(z.re), csv.num(z.im), csv.num(z.arg())];
        csv.row(&fields);
    }
    Ok(csv.buf)
}

const SENSITIVITY_HEADER: &str = "nbar,w_sq_opt,lambda_opt,gain,delta_phi_gauss,delta_phi_exact,product";

fn sensitivity_row(csv: &mut Csv, r: &SensitivityResult) {
    let fields = [
        csv.num(r.nbar),
        csv.num(r.w_sq_opt),
        csv.num(r.lambda_opt),
        csv.num(r.gain),
        csv.num(r.delta_phi_gauss),
        csv.num(r.delta_phi_exact),
        csv.num(r.product),
    ];
    csv.row(&fields);
}

/// `points` log-spaced budgets from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || points == 0 {
        return Err(usage(format!("invalid n̄ range [{lo}, {hi}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln();
    Ok((0..points)
        .map(|k| if k + 1 == points { hi } else { lo * (ratio * k as f64 / (points - 1) as f64).exp() })
        .collect())
}

pub fn run_sensitivity(cfg: &RunConfig, exec: Execution) -> Result<String> {
    let lo = cfg.nbar_min.ok_or_else(|| usage("sensitivity requires --nbar-min".into()))?;
    let hi = cfg.nbar_max.ok_or_else(|| usage("sensitivity requires --nbar-max".into()))?;
    let budgets = log_spaced(lo, hi, cfg.nbar_points)?;
    let rows = exec.map_slice(&budgets, |&n| optimize_signal_split(n, cfg.eta));
    let mut csv = Csv::new(cfg, SENSITIVITY_HEADER);
    for r in rows {
        sensitivity_row(&mut csv, &r?);
    }
    Ok(csv.buf)
}

pub fn run_optimize(cfg: &RunConfig) -> Result<String> {
    let nbar = cfg.nbar.ok_or_else(|| usage("optimize requires --nbar".into()))?;
    let r = optimize_signal_split(nbar, cfg.eta)?;
    let mut csv = Csv::new(cfg, SENSITIVITY_HEADER);
    sensitivity_row(&mut csv, &r);
    Ok(csv.buf)
}

/// Returns the report text and whether every suite passed.
pub fn run_verify(cfg: &RunConfig, exec: Execution) -> Result<(String, bool, Option<String>)> {
    let opts = VerifyOptions { variance_perturbation: cfg.variance_perturbation, exec };
    let report = run_all(&opts)?;
    let mut out = String::new();
    for s in &report.suites {
        let _ = writeln!(out, "{s}");
    }
    let _ = writeln!(out, "elapsed {:.2} s", report.elapsed.as_secs_f64());
    let warning = report.over_budget().then(|| {
        format!("warning: verification took {:.1} s, above the 60 s budget", report.elapsed.as_secs_f64())
    });
    Ok((out, report.all_passed(), warning))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn emit(cfg: &RunConfig, text: &str, stdout: &mut dyn Write) -> std::io::Result<()> {
    match &cfg.out_path {
        Some(path) => std::fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    if let Err(e) = cfg.validate() {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_USAGE;
    }
    let exec = Execution::best();
    let result = match cfg.command {
        Command::Density => run_density(&cfg, exec),
        Command::PhaseDist => run_phase_dist(&cfg, exec),
        Command::Sample => run_sample(&cfg, exec),
        Command::Sensitivity => run_sensitivity(&cfg, exec),
        Command::Optimize => run_optimize(&cfg),
        Command::Verify => match run_verify(&cfg, exec) {
            Ok((text, passed, warning)) => {
                if let Some(w) = warning {
                    let _ = writeln!(stderr, "{w}");
                }
                if let Err(e) = emit(&cfg, &text, stdout) {
                    let _ = writeln!(stderr, "error: cannot write output: {e}");
                    return EXIT_USAGE;
                }
                return if passed { EXIT_OK } else { EXIT_NUMERICAL };
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(text) => match emit(&cfg, &text, stdout) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                EXIT_USAGE
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
