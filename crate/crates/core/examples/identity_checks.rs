//! Discrete Green-operator identities and the thermal balance at a few frequencies.

use langevin_fem::identities::{identity_report, DEFAULT_DOF_CAP};
use langevin_fem::medium::{MediumSpec, SLAB_THICKNESS};
use langevin_fem::mesh::{build_mesh, default_padding, PmlSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, medium) in [
        ("vacuum", MediumSpec::vacuum()),
        ("case1", MediumSpec::case1()),
    ] {
        let mesh = build_mesh(
            &medium,
            default_padding(&medium, 300.0),
            15.0,
            700.0,
            PmlSpec::for_band(300.0),
            &[0.0, SLAB_THICKNESS],
        )?;
        println!("{name}: {} nodes", mesh.n_nodes());
        for k in [300.0, 500.0, 700.0] {
            let r = identity_report(&mesh, &medium, k, SLAB_THICKNESS, DEFAULT_DOF_CAP)?;
            let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
            println!(
                "  k={k:<5} ddgt {:>10}  lossless-only {:>10}  thermal {:.3e}",
                show(r.ddgt_residual),
                show(r.lossless_identity_residual),
                r.tec_residual
            );
        }
    }
    Ok(())
}
