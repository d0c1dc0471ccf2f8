//! Purcell-factor sweep for one of the preset cases, written as the spectrum CSV.
//!
//! `cargo run --release --example purcell_sweep -- 2B` (default 1A).

use langevin_fem::config::{CasePreset, RunConfig};
use langevin_fem::fem::MassScheme;
use langevin_fem::greens::DEFAULT_POINTS_PER_ELEMENT;
use langevin_fem::mesh::build_mesh;
use langevin_fem::output::PurcellSpectrum;
use langevin_fem::purcell::{sweep, Methods, SweepSetup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case: CasePreset = std::env::args().nth(1).as_deref().unwrap_or("1A").parse()?;
    let cfg = RunConfig::preset(case);
    let medium = cfg.medium_spec()?;
    let x_a = cfg.atom_position()?;
    let mesh = build_mesh(
        &medium,
        cfg.padding()?,
        cfg.mesh.ppw,
        cfg.sweep.max,
        cfg.pml()?,
        &[x_a, cfg.tec_point()],
    )?;

    let setup = SweepSetup {
        mesh: &mesh,
        medium,
        x_a,
        omegas: cfg.frequencies(),
        methods: Methods::default(),
        scheme: MassScheme::default(),
        points_per_element: DEFAULT_POINTS_PER_ELEMENT,
        tec_point: cfg.tec_point(),
        modes: None,
    };
    let mut spectrum = PurcellSpectrum::new(sweep(&setup)?);
    spectrum.push_meta(format!("case {case:?}, {} nodes", mesh.n_nodes()));
    spectrum.write_csv(std::io::stdout().lock())?;
    Ok(())
}
