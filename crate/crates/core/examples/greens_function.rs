//! Green's function of the Case 1 slab for a source at the slab center, compared
//! pointwise with the analytic solution.

use langevin_fem::greens::{sample_slab, solve_point_source};
use langevin_fem::medium::{MediumSpec, SLAB_THICKNESS};
use langevin_fem::mesh::{build_mesh, default_padding, PmlSpec};
use langevin_fem::oracle::tmm_green;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let medium = MediumSpec::case1();
    let k = 500.0;
    let x_src = 0.0;
    let mesh = build_mesh(
        &medium,
        default_padding(&medium, 300.0),
        40.0,
        700.0,
        PmlSpec::for_band(300.0),
        &[x_src, SLAB_THICKNESS],
    )?;

    let g = solve_point_source(&mesh, &medium, k, x_src)?;
    println!("x,re_fem,im_fem,re_exact,im_exact");
    for i in 0..=20 {
        let x = -0.1 + 0.01 * i as f64;
        let fem = g.at(&mesh, x)?;
        let exact = tmm_green(&medium, k, x, x_src);
        println!(
            "{x:.3},{:.6e},{:.6e},{:.6e},{:.6e}",
            fem.re, fem.im, exact.re, exact.im
        );
    }

    let s = sample_slab(&mesh, &medium, k, x_src, 4)?;
    eprintln!(
        "G(x_a, x_a) = {:.6} (exact {:.6}), {} slab samples, Σ w χ_I |G|² = {:.4e}",
        s.self_value,
        tmm_green(&medium, k, x_src, x_src),
        s.values.len(),
        s.loss_weighted_norm()
    );
    Ok(())
}
