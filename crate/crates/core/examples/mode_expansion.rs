//! Microscopic field, polarization and bath model in a closed box: calibration of
//! the effective susceptibility, then the Lorentzian-smoothed emission rate at the
//! Case 1 slab center against the Green's-function value.

use langevin_fem::medium::MediumSpec;
use langevin_fem::micromodes::{
    build_box_problem, calibration_error, default_eta, diagonalize, ser_modes, BathConfig,
};
use langevin_fem::oracle::tmm_green;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let medium = MediumSpec::case1();
    let bath = BathConfig::default();
    let x_a = 0.0;
    let gevp = build_box_problem(&medium, &bath, 15.0, bath.nu_max, &[x_a])?;
    eprintln!(
        "dimension {} ({} field dofs), calibration error {:.2e}",
        gevp.dim(),
        gevp.n_field(),
        calibration_error(&gevp, &medium, bath.fit_band, 41)?
    );

    let modes = diagonalize(&gevp, (1.0, 1000.0))?;
    eprintln!(
        "{} modes below 1000, orthonormality residual {:.1e}",
        modes.len(),
        modes.orthonormality_residual
    );

    let eta = default_eta(bath.box_length);
    println!("omega,pf_modes,pf_exact");
    for i in 0..=8 {
        let w = 300.0 + 50.0 * i as f64;
        let pf = ser_modes(&modes, x_a, w, eta)?;
        let exact = 2.0 * w * tmm_green(&medium, w, x_a, x_a).im;
        println!("{w},{pf:.5},{exact:.5}");
    }
    Ok(())
}
