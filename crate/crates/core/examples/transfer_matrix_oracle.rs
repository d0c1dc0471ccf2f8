//! The analytic single-slab solution on its own: spectra of reflection,
//! transmission, absorption and the local Purcell factor at both atom sites.

use langevin_fem::medium::{MediumSpec, SLAB_THICKNESS};
use langevin_fem::oracle::{tmm_absorbed_fraction, tmm_green, tmm_reflection_transmission};
use langevin_fem::purcell::linspace;
use langevin_fem::scattering::Direction;

fn main() {
    let gamma = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50.0);
    let medium = MediumSpec::new(100.0, 500.0, gamma, SLAB_THICKNESS / 2.0).expect("valid medium");

    println!("k,R,T,A,pf_a,pf_b");
    for k in linspace(300.0, 700.0, 41) {
        let (r, t) = tmm_reflection_transmission(&medium, k, Direction::Forward);
        let a = tmm_absorbed_fraction(&medium, k, Direction::Forward);
        let pf = |x: f64| 2.0 * k * tmm_green(&medium, k, x, x).im;
        println!(
            "{k},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.norm_sqr(),
            t.norm_sqr(),
            a,
            pf(0.0),
            pf(SLAB_THICKNESS)
        );
    }
}
