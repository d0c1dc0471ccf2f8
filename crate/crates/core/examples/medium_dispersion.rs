//! Lorentz susceptibility and refractive index of the two slab presets.
//!
//! Run with `cargo run --example medium_dispersion`.

use langevin_fem::medium::MediumSpec;

fn main() {
    let cases = [
        ("case1", MediumSpec::case1()),
        ("case2", MediumSpec::case2()),
    ];
    println!("case,omega,chi_re,chi_im,n_re,n_im");
    for (name, m) in &cases {
        for i in 0..=16 {
            let w = 300.0 + 25.0 * i as f64;
            let chi = m.susceptibility(w);
            let n = m.slab_index(w);
            println!(
                "{name},{w},{:.6e},{:.6e},{:.6e},{:.6e}",
                chi.re, chi.im, n.re, n.im
            );
        }
    }
    for (name, m) in &cases {
        eprintln!(
            "{name}: thickness {} m, peak Re n up to 700 = {:.4}",
            m.thickness(),
            m.peak_index(700.0)
        );
    }
}
