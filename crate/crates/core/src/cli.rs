//! `lnfem` command-line front end.
//!
//! Exit codes: 0 on success, 1 on a solver failure or a failed check, 2 on a usage or
//! configuration error. `LNFEM_WORKERS` sets the number of worker threads.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::{CasePreset, ConfigError, RunConfig};
use crate::fem::FrequencyContext;
use crate::greens::{samples_from_solution, solve_point_source_with};
use crate::identities::{
    check_discrete_ddgt, check_lossless_identity_failure, check_thermal_equilibrium,
};
use crate::medium::{MediumSpec, SLAB_THICKNESS};
use crate::mesh::{build_mesh, default_padding, Mesh1D, PmlSpec, Region};
use crate::micromodes::{build_box_problem, calibration_error, default_eta, diagonalize, ModeSet};
use crate::output::{
    format_e12, write_modes_csv, write_oracle_csv, OracleResidual, PurcellSpectrum,
};
use crate::purcell::{sweep, ModeInput, SweepSetup};
use crate::scattering::{solve_scattering_with, Direction};

/// Environment variable overriding the worker-thread count.
pub const WORKERS_ENV: &str = "LNFEM_WORKERS";

const ECHO_BEGIN: &str = "config begin";
const ECHO_END: &str = "config end";

#[derive(Debug, Parser)]
#[command(
    name = "lnfem",
    version,
    about = "Purcell factors and field identities near a lossy slab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Purcell-factor sweep over the configured frequency grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Reference scenario overriding the medium and atom settings.
        #[arg(long)]
        case: Option<String>,
        /// Output CSV path, overriding `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Green-operator identities and the thermal-equilibrium balance.
    CheckIdentities {
        #[arg(long)]
        config: PathBuf,
    },
    /// FEM versus transfer-matrix comparison.
    OracleCompare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-box mode decomposition of the microscopic model.
    Modes {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    CheckFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Solver(_) | CliError::CheckFailed(_) | CliError::Io(_) => 1,
        }
    }
}

fn solver<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Solver(e.to_string())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = worker_pool().and_then(|pool| pool.install(|| dispatch(cli.command)));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lnfem: {e}");
            e.exit_code()
        }
    }
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "{WORKERS_ENV} must be a positive integer (got `{v}`)"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Sweep { config, case, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(c) = case {
                cfg.apply_case(c.parse::<CasePreset>()?);
            }
            if let Some(o) = out {
                cfg.output.path = Some(o);
            }
            cfg.validate()?;
            cmd_sweep(&cfg)
        }
        Command::CheckIdentities { config } => cmd_check_identities(&RunConfig::load(&config)?),
        Command::OracleCompare { config } => cmd_oracle_compare(&RunConfig::load(&config)?),
        Command::Modes { config } => cmd_modes(&RunConfig::load(&config)?),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// The open-domain mesh a config describes, with the atom and thermal-check
/// positions as nodes.
pub fn sweep_mesh(cfg: &RunConfig) -> Result<Mesh1D, ConfigError> {
    let medium = cfg.medium_spec()?;
    let obs = [cfg.atom_position()?, cfg.tec_point()];
    Ok(build_mesh(
        &medium,
        cfg.padding()?,
        cfg.mesh.ppw,
        cfg.sweep.max,
        cfg.pml()?,
        &obs,
    )?)
}

fn mesh_stats(mesh: &Mesh1D) -> String {
    format!(
        "mesh: nodes={} elements={} slab_elements={} pml_elements={} h_target={} h_max={} domain=[{}, {}]",
        mesh.n_nodes(),
        mesh.n_elements(),
        mesh.count_region(Region::Slab),
        mesh.count_region(Region::PmlLeft) + mesh.count_region(Region::PmlRight),
        format_e12(mesh.target_h()),
        format_e12(mesh.max_element_length()),
        format_e12(mesh.lower()),
        format_e12(mesh.upper()),
    )
}

/// Recovers the configuration echoed in a spectrum file's metadata header.
pub fn config_from_metadata(csv: &str) -> Result<RunConfig, ConfigError> {
    let lines = crate::output::metadata_lines(csv);
    let start = lines.iter().position(|l| *l == ECHO_BEGIN);
    let end = lines.iter().position(|l| *l == ECHO_END);
    match (start, end) {
        (Some(s), Some(e)) if s < e => RunConfig::from_toml_str(&lines[s + 1..e].join("\n")),
        _ => Err(ConfigError::Invalid("no config echo in metadata".into())),
    }
}

fn build_modes(
    cfg: &RunConfig,
    medium: &MediumSpec,
    probes: &[f64],
) -> Result<(ModeSet, f64), CliError> {
    let bath = &cfg.modes.bath;
    let gevp =
        build_box_problem(medium, bath, cfg.modes.ppw, cfg.sweep.max, probes).map_err(solver)?;
    let modes = diagonalize(&gevp, (0.0, f64::INFINITY)).map_err(solver)?;
    let eta = cfg
        .modes
        .eta
        .unwrap_or_else(|| default_eta(bath.box_length));
    Ok((modes, eta))
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let medium = cfg.medium_spec()?;
    let x_a = cfg.atom_position()?;
    let mesh = sweep_mesh(cfg)?;
    if let Some(p) = &cfg.output.mesh_dump {
        mesh.write_csv(open_output(Some(p))?)?;
    }
    let modes = if cfg.methods.modes {
        Some(build_modes(cfg, &medium, &[x_a])?)
    } else {
        None
    };
    if let (Some((m, _)), Some(p)) = (&modes, &cfg.output.modes_csv) {
        let mut out = open_output(Some(p))?;
        write_modes_csv(m, &[("xa".to_string(), x_a)], &mut out)?;
        out.flush()?;
    }
    let setup = SweepSetup {
        mesh: &mesh,
        medium,
        x_a,
        omegas: cfg.frequencies(),
        methods: cfg.methods,
        scheme: cfg.mesh.mass,
        points_per_element: cfg.mesh.points_per_element,
        tec_point: cfg.tec_point(),
        modes: modes.as_ref().map(|(m, eta)| ModeInput {
            modes: m,
            eta: *eta,
        }),
    };
    let records = sweep(&setup).map_err(solver)?;

    let mut spectrum = PurcellSpectrum::new(records);
    spectrum.push_meta("lnfem sweep");
    spectrum.push_meta(format!(
        "version: {} {}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    ));
    spectrum.push_meta(format!("workers: {}", rayon::current_num_threads()));
    spectrum.push_meta(ECHO_BEGIN);
    spectrum.push_meta(cfg.to_toml_string()?);
    spectrum.push_meta(ECHO_END);
    spectrum.push_meta(mesh_stats(&mesh));
    if let Some((m, eta)) = &modes {
        spectrum.push_meta(format!("modes: count={} eta={}", m.len(), format_e12(*eta)));
    }
    spectrum.push_meta(format!(
        "wall_time_s: {:.3}",
        started.elapsed().as_secs_f64()
    ));
    let mut out = open_output(cfg.output.path.as_deref())?;
    spectrum.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Coarse open-domain mesh used for the dense identity checks.
fn verification_mesh(cfg: &RunConfig, medium: &MediumSpec) -> Result<Mesh1D, ConfigError> {
    Ok(build_mesh(
        medium,
        default_padding(medium, cfg.sweep.min),
        cfg.identities.ppw,
        cfg.sweep.max,
        PmlSpec::for_band(cfg.sweep.min),
        &[0.0, cfg.tec_point()],
    )?)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_check_identities(cfg: &RunConfig) -> Result<(), CliError> {
    let th = &cfg.identities;
    let medium = cfg.medium_spec()?;
    let vacuum = MediumSpec::vacuum();
    let vac_mesh = verification_mesh(cfg, &vacuum)?;
    let med_mesh = verification_mesh(cfg, &medium)?;
    let tec_mesh = sweep_mesh(cfg)?;
    let tec_x = cfg.tec_point();
    let mut failures = 0usize;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:<8} {:<34} {:>20} {:>12}  result",
        "k", "check", "value", "threshold"
    )?;
    let mut row = |k: f64, name: &str, value: f64, limit: String, ok: bool| -> io::Result<()> {
        if !ok {
            failures += 1;
        }
        writeln!(
            out,
            "{k:<8} {name:<34} {:>20} {limit:>12}  {}",
            format_e12(value),
            verdict(ok)
        )
    };
    for &k in &th.frequencies {
        for (label, m, mesh) in [
            ("vacuum", &vacuum, &vac_mesh),
            ("medium", &medium, &med_mesh),
        ] {
            let sys = crate::fem::assemble_with(mesh, m, k, cfg.mesh.mass);
            let r = check_discrete_ddgt(&sys, th.dof_cap).map_err(solver)?;
            let v = r.unwrap_or(0.0);
            row(
                k,
                &format!("ddgt ({label})"),
                v,
                format!("<{:e}", th.ddgt_threshold),
                v < th.ddgt_threshold,
            )?;
        }
        let lossless = check_lossless_identity_failure(
            &vac_mesh,
            &vacuum,
            k,
            cfg.mesh.mass,
            th.dof_cap,
            |_| true,
        )
        .map_err(solver)?
        .unwrap_or(0.0);
        row(
            k,
            "lossless identity failure (vacuum)",
            lossless,
            format!(">{}", th.lossless_min),
            lossless > th.lossless_min,
        )?;
        let tec = check_thermal_equilibrium(&tec_mesh, &medium, k, tec_x, tec_x).map_err(solver)?;
        row(
            k,
            "thermal balance (medium)",
            tec.relative,
            format!("<{}", th.tec_threshold),
            tec.relative < th.tec_threshold,
        )?;
    }
    out.flush()?;
    if failures > 0 {
        return Err(CliError::CheckFailed(format!(
            "{failures} identity check(s) failed"
        )));
    }
    Ok(())
}

/// FEM-versus-oracle residuals at one frequency, both incidence directions.
pub fn oracle_residuals(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    k: f64,
    probes: &[f64],
    x_a: f64,
    cfg_mass: crate::fem::MassScheme,
) -> Result<Vec<OracleResidual>, CliError> {
    let ctx = FrequencyContext::new(mesh, medium, k, cfg_mass).map_err(solver)?;
    let g = solve_point_source_with(&ctx, mesh, x_a).map_err(solver)?;
    let mut samples_x: Vec<f64> = samples_from_solution(&g, mesh, medium, 4)
        .map_err(solver)?
        .quad_points;
    samples_x.extend_from_slice(probes);
    let mut g_scale: f64 = 0.0;
    let mut g_err: f64 = 0.0;
    for &x in &samples_x {
        let exact = crate::oracle::tmm_green(medium, k, x_a, x);
        let got = g.at(mesh, x).map_err(solver)?;
        g_scale = g_scale.max(exact.norm());
        g_err = g_err.max((got - exact).norm());
    }
    let green_error = g_err / g_scale;
    let mut rows = Vec::new();
    for d in Direction::BOTH {
        let sol = solve_scattering_with(&ctx, mesh, medium, d).map_err(solver)?;
        let (r, t) = sol.extract_r_t(mesh).map_err(solver)?;
        let (ro, to) = crate::oracle::tmm_reflection_transmission(medium, k, d);
        let scale = ro.norm().max(to.norm());
        // unit incident amplitude is the floor: near-zero fields inside or behind an
        // opaque slab come from cancelling incident and scattered parts
        let mut f_err: f64 = 0.0;
        let mut f_scale: f64 = 1.0;
        for &x in probes {
            let got = sol.total_field_at(mesh, x).map_err(solver)?;
            let exact = crate::oracle::tmm_field(medium, k, d, x);
            f_err = f_err.max((got - exact).norm());
            f_scale = f_scale.max(exact.norm());
        }
        rows.push(OracleResidual {
            k,
            direction: match d {
                Direction::Forward => "forward",
                Direction::Backward => "backward",
            },
            r_error: (r - ro).norm() / scale,
            t_error: (t - to).norm() / scale,
            field_error: f_err / f_scale,
            green_error,
        });
    }
    Ok(rows)
}

pub fn cmd_oracle_compare(cfg: &RunConfig) -> Result<(), CliError> {
    use rayon::prelude::*;
    let medium = cfg.medium_spec()?;
    let mesh = sweep_mesh(cfg)?;
    let x_a = cfg.atom_position()?;
    let probes = [0.0, SLAB_THICKNESS];
    let ks = crate::purcell::linspace(cfg.sweep.min, cfg.sweep.max, cfg.oracle.count);
    let rows: Vec<OracleResidual> = ks
        .par_iter()
        .map(|&k| oracle_residuals(&mesh, &medium, k, &probes, x_a, cfg.mesh.mass))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut out = open_output(cfg.output.oracle_csv.as_deref())?;
    write_oracle_csv(&rows, &mut out)?;
    out.flush()?;
    let worst = rows.iter().map(OracleResidual::worst).fold(0.0, f64::max);
    eprintln!(
        "oracle-compare: {} frequencies, worst relative residual {} (tolerance {})",
        ks.len(),
        format_e12(worst),
        cfg.oracle.tolerance
    );
    if worst >= cfg.oracle.tolerance {
        return Err(CliError::CheckFailed(format!(
            "FEM/oracle residual {worst:e} exceeds tolerance {:e}",
            cfg.oracle.tolerance
        )));
    }
    Ok(())
}

pub fn cmd_modes(cfg: &RunConfig) -> Result<(), CliError> {
    let medium = cfg.medium_spec()?;
    let x_a = cfg.atom_position()?;
    cfg.modes
        .bath
        .validate(&medium)
        .map_err(|e| CliError::Config(ConfigError::Invalid(e.to_string())))?;
    let bath = &cfg.modes.bath;
    let gevp =
        build_box_problem(&medium, bath, cfg.modes.ppw, cfg.sweep.max, &[x_a]).map_err(solver)?;
    if !medium.is_vacuum() {
        let err = calibration_error(&gevp, &medium, bath.fit_band, cfg.modes.calibration_points)
            .map_err(solver)?;
        eprintln!(
            "modes: effective susceptibility error {} over {:?}",
            format_e12(err),
            bath.fit_band
        );
    }
    let modes = diagonalize(&gevp, (0.0, f64::INFINITY)).map_err(solver)?;
    let eta = cfg
        .modes
        .eta
        .unwrap_or_else(|| default_eta(bath.box_length));
    eprintln!(
        "modes: dim={} modes={} orthonormality={} eta={}",
        gevp.dim(),
        modes.len(),
        format_e12(modes.orthonormality_residual),
        format_e12(eta)
    );
    let mut out = open_output(cfg.output.modes_csv.as_deref())?;
    write_modes_csv(&modes, &[("xa".to_string(), x_a)], &mut out)?;
    out.flush()?;
    if let Some(path) = &cfg.output.path {
        let mut records = Vec::new();
        for w in cfg.frequencies() {
            let pf = crate::micromodes::ser_modes(&modes, x_a, w, eta)
                .map_err(|e| CliError::Solver(format!("at omega = {w}: {e}")))?;
            records.push(crate::purcell::PurcellRecord {
                omega_a: w,
                x_a,
                pf_sfa: None,
                pf_b: None,
                pf_m: None,
                pf_modified_ln: None,
                pf_original_ln: None,
                pf_modes: Some(pf),
                tec_residual: None,
            });
        }
        let mut spectrum = PurcellSpectrum::new(records);
        spectrum.push_meta("lnfem modes");
        spectrum.push_meta(format!(
            "version: {} {}",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        ));
        spectrum.push_meta(ECHO_BEGIN);
        spectrum.push_meta(cfg.to_toml_string()?);
        spectrum.push_meta(ECHO_END);
        let mut out = open_output(Some(path))?;
        spectrum.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}
