//! Plane waves on the Case 2 slab: FEM reflection, transmission and absorption
//! next to the transfer-matrix values.

use langevin_fem::medium::{MediumSpec, SLAB_THICKNESS};
use langevin_fem::mesh::{build_mesh, default_padding, PmlSpec};
use langevin_fem::oracle::{tmm_absorbed_fraction, tmm_reflection_transmission};
use langevin_fem::scattering::{solve_scattering, Direction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let medium = MediumSpec::case2();
    let mesh = build_mesh(
        &medium,
        default_padding(&medium, 300.0),
        40.0,
        700.0,
        PmlSpec::for_band(300.0),
        &[0.0, SLAB_THICKNESS],
    )?;

    println!("k,direction,|r|,|r|_tmm,|t|,|t|_tmm,absorbed,absorbed_tmm");
    for k in [300.0, 450.0, 500.0, 550.0, 700.0] {
        for dir in Direction::BOTH {
            let sol = solve_scattering(&mesh, &medium, k, dir)?;
            let (r, t) = sol.extract_r_t(&mesh)?;
            let (r0, t0) = tmm_reflection_transmission(&medium, k, dir);
            println!(
                "{k},{dir:?},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5}",
                r.norm(),
                r0.norm(),
                t.norm(),
                t0.norm(),
                sol.absorbed_fraction(&mesh, &medium)?,
                tmm_absorbed_fraction(&medium, k, dir),
            );
        }
    }

    // full profile of one solution, for plotting
    if let Some(path) = std::env::args().nth(1) {
        let sol = solve_scattering(&mesh, &medium, 500.0, Direction::Forward)?;
        sol.write_profile_csv(&mesh, std::fs::File::create(&path)?)?;
        eprintln!("profile written to {path}");
    }
    Ok(())
}
