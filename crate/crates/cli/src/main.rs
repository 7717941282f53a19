mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use xoit::nuclide::phonon_bounds;
use xoit::spectrum::{compute_spectrum, dip_metrics, find_peaks, uniform_grid, DipMetrics, SpectrumParams};
use xoit::validation::{self, ValidationOptions};
use xoit::{derive, franck_condon, Error, CODATA_2018};

use config::{merge, resolve, resolve_config, GridArgs, PhysicsArgs, Resolved};

#[derive(Parser)]
#[command(name = "xoit", version, about = "Optomechanically tunable nuclear x-ray absorption spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List nuclear transitions with η, n_min, n_max and validity
    #[command(allow_negative_numbers = true)]
    Nuclides {
        #[command(flatten)]
        physics: PhysicsArgs,
        /// JSON config file; flags take precedence
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TableFormat::Table)]
        format: TableFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute one absorption spectrum
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
        format: DataFormat,
        /// Data file; without it the data goes to stdout and the summary to stderr
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recompute the spectrum over a list of parameter values
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Swept quantity; values use the units of the matching flag
        #[arg(long = "var", value_enum)]
        var: SweepVar,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "linspace", required_unless_present = "linspace")]
        values: Vec<f64>,
        /// START,STOP,COUNT evenly spaced values
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        linspace: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
        format: DataFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance suite; exit 1 if any criterion fails
    Validate {
        /// Write the machine-readable report here
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum)]
        gamma_convention: Option<config::ConventionArg>,
        /// Harness self-test: replace ħ (J·s) with a wrong value
        #[arg(long, hide = true)]
        inject_hbar_j_s: Option<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SweepVar {
    /// Laser power, nW
    Power,
    /// Phonon occupation n
    N,
    /// Photon-fluctuation occupation v
    V,
    /// Rabi frequency Ω, rad/s
    Omega,
    /// Cavity decay κ / 2π, MHz
    Kappa,
}

enum Failure {
    Usage(Error),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(Error::Io(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Nuclides { physics, config, format, output } => cmd_nuclides(physics, config, format, output),
        Command::Spectrum { physics, grid, config, format, output } => cmd_spectrum(physics, grid, config, format, output),
        Command::Sweep { physics, grid, config, var, values, linspace, format, output } => {
            cmd_sweep(physics, grid, config, var, values, linspace, format, output)
        }
        Command::Validate { report, gamma_convention, inject_hbar_j_s } => {
            cmd_validate(report, gamma_convention, inject_hbar_j_s)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn to_json_line<T: Serialize>(value: &T) -> Result<String, Error> {
    Ok(serde_json::to_string(value)?)
}

fn cmd_nuclides(physics: PhysicsArgs, config: Option<PathBuf>, format: TableFormat, output: Option<PathBuf>) -> Result<(), Failure> {
    let (physics, _) = merge(config.as_deref(), physics, GridArgs::default())?;
    let conv = physics.convention();
    let selected = match &physics.nuclide {
        Some(_) => vec![physics.nuclide()?],
        None => physics.nuclide_pool()?,
    };
    let base = physics.optomech()?;
    let mut rows = Vec::new();
    for nuc in &selected {
        let d = derive(&base, nuc)?;
        let bounds = phonon_bounds(d.eta)?;
        rows.push(json!({
            "name": nuc.name(),
            "energy_kev": nuc.energy_ev() / 1e3,
            "gamma_rad_s": nuc.gamma(),
            "gamma_mhz": conv.to_mhz(nuc.gamma()),
            "eta": d.eta,
            "n_min": bounds.n_min,
            "n_max": bounds.n_max,
            "n_min_e7_printed": bounds.n_min_e7_rounded(),
            "n": base.n,
            "eta_sqrt_n": d.eta * (base.n as f64).sqrt(),
            "validity": franck_condon::validity(d.eta, base.n as f64),
        }));
    }
    let mut out = open_output(output.as_deref())?;
    match format {
        TableFormat::Json => {
            let doc = json!({ "gamma_convention": conv, "config": base, "nuclides": rows });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?)?;
        }
        TableFormat::Csv => {
            writeln!(out, "name,energy_kev,gamma_mhz,gamma_rad_s,eta,n_min,n_max,eta_sqrt_n,validity")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                    r["name"].as_str().unwrap_or_default(),
                    r["energy_kev"],
                    r["gamma_mhz"].as_f64().unwrap_or(f64::NAN),
                    r["gamma_rad_s"].as_f64().unwrap_or(f64::NAN),
                    r["eta"].as_f64().unwrap_or(f64::NAN),
                    r["n_min"].as_f64().unwrap_or(f64::NAN),
                    r["n_max"].as_f64().unwrap_or(f64::NAN),
                    r["eta_sqrt_n"].as_f64().unwrap_or(f64::NAN),
                    r["validity"].as_str().unwrap_or_default(),
                )?;
            }
        }
        TableFormat::Table => {
            writeln!(out, "gamma convention: {}   n = {}", conv.as_str(), base.n)?;
            writeln!(
                out,
                "{:<7} {:>10} {:>11} {:>10} {:>12} {:>12} {:>10}  validity",
                "nuclide", "E (keV)", "Γ (MHz)", "η (1e-5)", "n_min (1e7)", "n_max (1e7)", "η√n"
            )?;
            for r in &rows {
                let f = |k: &str| r[k].as_f64().unwrap_or(f64::NAN);
                writeln!(
                    out,
                    "{:<7} {:>10.4} {:>11.3e} {:>10.4} {:>12.4e} {:>12.4e} {:>10.3e}  {}",
                    r["name"].as_str().unwrap_or_default(),
                    f("energy_kev"),
                    f("gamma_mhz"),
                    f("eta") * 1e5,
                    f("n_min") / 1e7,
                    f("n_max") / 1e7,
                    f("eta_sqrt_n"),
                    r["validity"].as_str().unwrap_or_default(),
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn spectrum_params(r: &Resolved) -> SpectrumParams {
    SpectrumParams::from_derived(&r.derived)
}

fn warn_regime(r: &Resolved) {
    for w in r.derived.flags.warnings() {
        eprintln!("warning: {w}");
    }
}

fn write_summary(out: &mut dyn Write, r: &Resolved, dip: &DipMetrics, peaks: &[xoit::spectrum::Peak]) -> io::Result<()> {
    let d = &r.derived;
    let tau = std::f64::consts::TAU;
    writeln!(out, "nuclide {}  E = {} eV  Γ = {:.6e} rad/s ({})", r.nuclide.name(), r.nuclide.energy_ev(), d.gamma, r.gamma_convention.as_str())?;
    writeln!(
        out,
        "n = {}  v = {}  η = {:.6e}  η√n = {:.4}  n̄_cav = {:.6e}",
        r.config.n,
        r.config.v,
        d.eta,
        d.eta * (r.config.n as f64).sqrt(),
        d.n_cav
    )?;
    writeln!(
        out,
        "G = {:.6e} rad/s (2π × {:.4} Hz)  ω_m = {:.6e} rad/s  s = {:.6e} rad/s  Ω = {:.6e} rad/s",
        d.g,
        d.g / tau,
        d.omega_m,
        d.s,
        d.rabi
    )?;
    let split = match dip.split.half_split() {
        Some(h) => format!("±{h:.6e} rad/s (±{:.4} ω_m)", h / d.omega_m),
        None => "unsplit".to_string(),
    };
    writeln!(out, "dip: A(0) = {:.6e}  contrast = {:.4}  split = {split}", dip.center_absorption, dip.contrast)?;
    writeln!(
        out,
        "regime: red_detuned = {}  perturbative = {}  sidebands_resolved = {}  validity = {:?}",
        d.flags.red_detuned, d.flags.perturbative, d.flags.sidebands_resolved, d.flags.validity
    )?;
    writeln!(out, "peaks ({}):", peaks.len())?;
    writeln!(out, "  {:>14} {:>10} {:>14}", "Δ (rad/s)", "Δ/ω_m", "absorption")?;
    for p in peaks {
        writeln!(out, "  {:>14.6e} {:>10.5} {:>14.6e}", p.delta, p.delta / d.omega_m, p.height)?;
    }
    Ok(())
}

fn cmd_spectrum(
    physics: PhysicsArgs,
    grid: GridArgs,
    config: Option<PathBuf>,
    format: DataFormat,
    output: Option<PathBuf>,
) -> Result<(), Failure> {
    let (physics, grid) = merge(config.as_deref(), physics, grid)?;
    let r = resolve(&physics, &grid)?;
    warn_regime(&r);
    let p = spectrum_params(&r);
    let deltas = uniform_grid(r.grid_span_omega_m * r.derived.omega_m, r.grid_points)?;
    let mut s = compute_spectrum(&deltas, r.config.n, &p)?.with_source(&r.nuclide, r.gamma_convention, &r.config, &r.derived);
    let dip = dip_metrics(r.config.n, &p)?;
    let peaks = find_peaks(&s);
    if r.normalize {
        s = s.normalized()?;
    }

    let mut out = open_output(output.as_deref())?;
    match format {
        DataFormat::Csv => {
            writeln!(out, "# resolved: {}", to_json_line(&r)?)?;
            s.write_csv(&mut out)?;
        }
        DataFormat::Json => writeln!(out, "{}", s.to_json()?)?,
    }
    out.flush()?;
    drop(out);

    if output.is_some() {
        write_summary(&mut io::stdout().lock(), &r, &dip, &peaks)?;
    } else {
        write_summary(&mut io::stderr().lock(), &r, &dip, &peaks)?;
    }
    Ok(())
}

fn sweep_values(values: Vec<f64>, linspace: Option<Vec<f64>>) -> Result<Vec<f64>, Error> {
    let values = match linspace {
        Some(spec) => {
            let [start, stop, count] = spec[..] else {
                return Err(Error::Input("--linspace takes START,STOP,COUNT".into()));
            };
            if !(count >= 2.0 && count.fract() == 0.0) {
                return Err(Error::Input(format!("--linspace count must be an integer >= 2, got {count}")));
            }
            let k = count as usize;
            (0..k).map(|i| start + (stop - start) * i as f64 / (k - 1) as f64).collect()
        }
        None => values,
    };
    if values.len() < 2 {
        return Err(Error::Input(format!("a sweep needs at least 2 values, got {}", values.len())));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("sweep value {v} is not finite")));
    }
    Ok(values)
}

fn apply_sweep(base: &PhysicsArgs, var: SweepVar, value: f64) -> Result<PhysicsArgs, Error> {
    let count = |x: f64| {
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as u64)
        } else {
            Err(Error::Input(format!("sweep value {x} is not a non-negative integer")))
        }
    };
    let mut p = base.clone();
    match var {
        SweepVar::Power => p.power_nw = Some(value),
        SweepVar::N => p.n = Some(count(value)?),
        SweepVar::V => p.v = Some(count(value)?),
        SweepVar::Omega => p.rabi_rad_s = Some(value),
        SweepVar::Kappa => p.kappa_mhz_2pi = Some(value),
    }
    Ok(p)
}

#[derive(Serialize)]
struct SweepPoint {
    value: f64,
    config: xoit::OptomechConfig,
    derived: xoit::DerivedOptomech,
    dip: DipMetrics,
    points: Vec<xoit::spectrum::SpectrumPoint>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    physics: PhysicsArgs,
    grid: GridArgs,
    config: Option<PathBuf>,
    var: SweepVar,
    values: Vec<f64>,
    linspace: Option<Vec<f64>>,
    format: DataFormat,
    output: Option<PathBuf>,
) -> Result<(), Failure> {
    let values = sweep_values(values, linspace)?;
    let (mut physics, grid) = merge(config.as_deref(), physics, grid)?;
    let base = resolve(&physics, &grid)?;
    // Ω is fixed once from the base point so the sweep compares like with like
    if var != SweepVar::Omega {
        physics.rabi_rad_s = Some(base.config.rabi);
    }

    let mut points = Vec::with_capacity(values.len());
    for &value in &values {
        let p = apply_sweep(&physics, var, value)?;
        let (cfg, derived) = resolve_config(&p, &base.nuclide)?;
        let params = SpectrumParams::from_derived(&derived);
        let deltas = uniform_grid(base.grid_span_omega_m * derived.omega_m, base.grid_points)?;
        let mut s = compute_spectrum(&deltas, cfg.n, &params)?;
        let dip = dip_metrics(cfg.n, &params)?;
        if base.normalize {
            s = s.normalized()?;
        }
        for w in derived.flags.warnings() {
            eprintln!("warning: {} = {value}: {w}", sweep_name(var));
        }
        points.push(SweepPoint { value, config: cfg, derived, dip, points: s.points });
    }

    let mut out = open_output(output.as_deref())?;
    match format {
        DataFormat::Csv => {
            writeln!(out, "# resolved: {}", to_json_line(&base)?)?;
            writeln!(out, "# sweep: {}", sweep_name(var))?;
            writeln!(
                out,
                "{},g_rad_s,omega_m_rad_s,eta_sqrt_n,validity,contrast,center_absorption,half_split_rad_s,delta_rad_s,delta_over_omega_m,absorption",
                sweep_name(var)
            )?;
            for sp in &points {
                let d = &sp.derived;
                let validity = serde_json::to_value(d.flags.validity).map_err(Error::from)?;
                let split = sp.dip.split.half_split().map(|h| format!("{h:e}")).unwrap_or_default();
                let head = format!(
                    "{:e},{:e},{:e},{:e},{},{:e},{:e},{}",
                    sp.value,
                    d.g,
                    d.omega_m,
                    d.eta * (sp.config.n as f64).sqrt(),
                    validity.as_str().unwrap_or_default(),
                    sp.dip.contrast,
                    sp.dip.center_absorption,
                    split
                );
                for pt in &sp.points {
                    writeln!(out, "{head},{:e},{:e},{:e}", pt.delta, pt.delta / d.omega_m, pt.absorption)?;
                }
            }
        }
        DataFormat::Json => {
            let doc = json!({ "sweep": var, "resolved": base, "points": points });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?)?;
        }
    }
    out.flush()?;
    drop(out);

    let mut summary: Box<dyn Write> = if output.is_some() { Box::new(io::stdout().lock()) } else { Box::new(io::stderr().lock()) };
    writeln!(summary, "{:>14} {:>10} {:>14} {:>10}", sweep_name(var), "contrast", "A(0)", "validity")?;
    for sp in &points {
        writeln!(
            summary,
            "{:>14.6e} {:>10.4} {:>14.6e} {:>10?}",
            sp.value, sp.dip.contrast, sp.dip.center_absorption, sp.derived.flags.validity
        )?;
    }
    Ok(())
}

fn sweep_name(var: SweepVar) -> &'static str {
    match var {
        SweepVar::Power => "power_nw",
        SweepVar::N => "n",
        SweepVar::V => "v",
        SweepVar::Omega => "rabi_rad_s",
        SweepVar::Kappa => "kappa_mhz_2pi",
    }
}

fn cmd_validate(
    report_path: Option<PathBuf>,
    convention: Option<config::ConventionArg>,
    inject_hbar: Option<f64>,
) -> Result<(), Failure> {
    let mut options = ValidationOptions::default();
    if let Some(c) = convention {
        options.gamma_convention = c.into();
    }
    if let Some(hbar) = inject_hbar {
        options.constants = xoit::PhysicalConstants { hbar, ..CODATA_2018 };
    }
    let report = validation::run(&options);
    if let Some(path) = &report_path {
        let mut f = BufWriter::new(File::create(path)?);
        writeln!(f, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
        f.flush()?;
    }
    let mut out = io::stdout().lock();
    for line in report.summary_lines() {
        writeln!(out, "{line}")?;
    }
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    writeln!(out, "{passed}/{} criteria passed in {:.2} s", report.criteria.len(), report.metadata.elapsed_s)?;
    if report.passed {
        Ok(())
    } else {
        let names: Vec<String> = report.failed().map(|c| format!("criterion {} {}", c.id, c.name)).collect();
        Err(Failure::Validation(names.join(", ")))
    }
}
