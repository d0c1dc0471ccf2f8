//! Builds the open-domain mesh used by a sweep and prints its layout.
//!
//! Pass `--csv` to dump every node with its region instead of the summary.

use langevin_fem::medium::{MediumSpec, SLAB_THICKNESS};
use langevin_fem::mesh::{build_mesh, default_padding, PmlSpec, Region};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let medium = MediumSpec::case1();
    let mesh = build_mesh(
        &medium,
        default_padding(&medium, 300.0),
        40.0,
        700.0,
        PmlSpec::for_band(300.0),
        &[0.0, SLAB_THICKNESS],
    )?;

    if std::env::args().any(|a| a == "--csv") {
        mesh.write_csv(std::io::stdout().lock())?;
        return Ok(());
    }

    println!("domain      [{:.5}, {:.5}]", mesh.lower(), mesh.upper());
    println!("pml starts  ±{:.5}", mesh.pml_inner());
    println!("nodes       {}", mesh.n_nodes());
    println!(
        "target h    {:.3e} (largest {:.3e})",
        mesh.target_h(),
        mesh.max_element_length()
    );
    for region in [
        Region::PmlLeft,
        Region::Vacuum,
        Region::Slab,
        Region::PmlRight,
    ] {
        println!(
            "{:<11} {} elements",
            region.label(),
            mesh.count_region(region)
        );
    }
    if let Some((l, r)) = mesh.probes() {
        println!("probes      {l:.5}, {r:.5}");
    }
    Ok(())
}
