//! Closed-form transfer-matrix oracle for a single homogeneous slab in vacuum.
//!
//! Nothing here touches the finite-element code. Conventions match the scattering
//! module: unit incident amplitude, `r` referenced to the incidence face, and `t`
//! defined as the ratio of total to incident field on the far side (so `t = 1` for
//! an empty slab).

use num_complex::Complex64;

use crate::medium::MediumSpec;
use crate::quadrature::GaussLegendre;
use crate::scattering::Direction;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Vacuum and slab wavenumbers at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerStack {
    pub half_length: f64,
    pub k: f64,
    pub k_slab: Complex64,
}

impl LayerStack {
    pub fn new(medium: &MediumSpec, k: f64) -> Self {
        Self {
            half_length: medium.slab_half_length,
            k,
            k_slab: medium.slab_index(k) * k,
        }
    }

    fn kappa(&self) -> Complex64 {
        self.k_slab / self.k
    }

    /// Single-interface and propagation factors: `(r1, τ1, r2, τ2, P)`.
    fn fresnel(&self) -> (Complex64, Complex64, Complex64, Complex64, Complex64) {
        let kap = self.kappa();
        let r1 = (ONE - kap) / (ONE + kap);
        let t1 = 2.0 / (ONE + kap);
        let r2 = -r1;
        let t2 = 2.0 * kap / (ONE + kap);
        let p = (I * self.k_slab * (2.0 * self.half_length)).exp();
        (r1, t1, r2, t2, p)
    }

    /// `(r, t_face)`: reflection at the incidence face and face-to-face transmission.
    fn airy(&self) -> (Complex64, Complex64) {
        let (r1, t1, r2, t2, p) = self.fresnel();
        let den = ONE - r2 * r2 * p * p;
        (r1 + t1 * t2 * r2 * p * p / den, t1 * t2 * p / den)
    }
}

/// Reflection and transmission coefficients.
///
/// `r` is the reflected amplitude at the incidence face per unit incident amplitude
/// there; `t` is `Φ_tot / Φ_inc` anywhere on the far side.
pub fn tmm_reflection_transmission(
    medium: &MediumSpec,
    k: f64,
    _direction: Direction,
) -> (Complex64, Complex64) {
    let stack = LayerStack::new(medium, k);
    let (r, t_face) = stack.airy();
    let t = t_face * (-I * k * 2.0 * stack.half_length).exp();
    (r, t)
}

/// Total field for a unit plane wave `e^{i d k x}`.
pub fn tmm_field(medium: &MediumSpec, k: f64, direction: Direction, x: f64) -> Complex64 {
    tmm_field_and_derivative(medium, k, direction, x).0
}

/// Total field and its `x` derivative.
pub fn tmm_field_and_derivative(
    medium: &MediumSpec,
    k: f64,
    direction: Direction,
    x: f64,
) -> (Complex64, Complex64) {
    if direction == Direction::Backward {
        let (u, du) = tmm_field_and_derivative(medium, k, Direction::Forward, -x);
        return (u, -du);
    }
    let stack = LayerStack::new(medium, k);
    let a = stack.half_length;
    let (r, t_face) = stack.airy();
    let (_, t1, r2, _, p) = stack.fresnel();
    let inc_face = (-I * k * a).exp();
    if x < -a {
        let inc = (I * k * x).exp();
        let refl = r * inc_face * (-I * k * (x + a)).exp();
        (inc + refl, I * k * (inc - refl))
    } else if x <= a {
        let ks = stack.k_slab;
        let amp_fwd = inc_face * t1 / (ONE - r2 * r2 * p * p);
        let amp_bwd = amp_fwd * p * r2;
        let f = amp_fwd * (I * ks * (x + a)).exp();
        let b = amp_bwd * (-I * ks * (x - a)).exp();
        (f + b, I * ks * (f - b))
    } else {
        let u = inc_face * t_face * (I * k * (x - a)).exp();
        (u, I * k * u)
    }
}

/// Right-outgoing homogeneous solution: `e^{ik(x-a)}` right of the slab.
fn outgoing_right(stack: &LayerStack, x: f64) -> (Complex64, Complex64) {
    let k = stack.k;
    let ks = stack.k_slab;
    let a = stack.half_length;
    if x >= a {
        let u = (I * k * (x - a)).exp();
        return (u, I * k * u);
    }
    let slab = |y: f64| {
        let z = ks * (y - a);
        let (c, s) = (z.cos(), z.sin());
        (c + I * k / ks * s, -ks * s + I * k * c)
    };
    if x >= -a {
        return slab(x);
    }
    let (u1, du1) = slab(-a);
    let z = k * (x + a);
    (
        u1 * z.cos() + du1 / k * z.sin(),
        -u1 * k * z.sin() + du1 * z.cos(),
    )
}

/// Layered-medium Green's function solving `(d²/dx² + k² ε_r) G = -δ(x - x')`.
pub fn tmm_green(medium: &MediumSpec, k: f64, x: f64, x_prime: f64) -> Complex64 {
    let stack = LayerStack::new(medium, k);
    let right = |y: f64| outgoing_right(&stack, y);
    let left = |y: f64| {
        let (u, du) = outgoing_right(&stack, -y);
        (u, -du)
    };
    let (ul, dul) = left(0.0);
    let (ur, dur) = right(0.0);
    let wronskian = ul * dur - dul * ur;
    let (lo, hi) = if x <= x_prime {
        (x, x_prime)
    } else {
        (x_prime, x)
    };
    -left(lo).0 * right(hi).0 / wronskian
}

/// `k ∫_slab χ_I |Φ_tot|² dx` by composite Gauss–Legendre on the analytic field.
pub fn tmm_absorbed_fraction(medium: &MediumSpec, k: f64, direction: Direction) -> f64 {
    let chi_i = medium.susceptibility(k).im;
    if chi_i == 0.0 {
        return 0.0;
    }
    let gl = GaussLegendre::new(20);
    let a = medium.slab_half_length;
    let panels = 64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = -a + 2.0 * a * p as f64 / panels as f64;
        let hi = -a + 2.0 * a * (p + 1) as f64 / panels as f64;
        acc += gl.integrate(lo, hi, |x| tmm_field(medium, k, direction, x).norm_sqr());
    }
    k * chi_i * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn empty_slab_is_transparent() {
        let m = MediumSpec::vacuum();
        let (r, t) = tmm_reflection_transmission(&m, 437.0, Direction::Forward);
        assert!(r.norm() < 1e-15);
        assert!((t - ONE).norm() < 1e-14);
        for x in [-0.2, 0.0, 0.01, 0.3] {
            let u = tmm_field(&m, 437.0, Direction::Forward, x);
            assert!((u - (I * 437.0 * x).exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn opaque_at_resonance_for_high_loss() {
        let (_, t) = tmm_reflection_transmission(&MediumSpec::case1(), 500.0, Direction::Forward);
        assert!(t.norm() < 0.01, "{}", t.norm());
    }

    #[test]
    fn reflection_is_direction_independent() {
        let m = MediumSpec::case2();
        let a = tmm_reflection_transmission(&m, 480.0, Direction::Forward);
        let b = tmm_reflection_transmission(&m, 480.0, Direction::Backward);
        assert_eq!(a, b);
    }

    #[test]
    fn continuity_at_faces() {
        for m in [MediumSpec::case1(), MediumSpec::case2()] {
            for k in [300.0, 497.0, 650.0] {
                for d in [Direction::Forward, Direction::Backward] {
                    for face in [-m.slab_half_length, m.slab_half_length] {
                        let eps = 1e-14;
                        let (u0, d0) = tmm_field_and_derivative(&m, k, d, face - eps);
                        let (u1, d1) = tmm_field_and_derivative(&m, k, d, face + eps);
                        assert!((u0 - u1).norm() < 1e-9 * u0.norm().max(1.0));
                        assert!((d0 - d1).norm() < 1e-8 * k);
                    }
                }
            }
        }
    }

    #[test]
    fn green_reduces_to_free_space() {
        let m = MediumSpec::vacuum();
        let k = 500.0;
        for (x, xp) in [(0.0, 0.0), (0.1, -0.05), (-0.2, 0.0625)] {
            let g = tmm_green(&m, k, x, xp);
            let exact = I * (I * k * f64::abs(x - xp)).exp() / (2.0 * k);
            assert!(rel(g, exact) < 1e-12);
        }
    }

    #[test]
    fn green_reciprocity_and_passivity() {
        let m = MediumSpec::case1();
        for (x, xp) in [(0.0625, -0.01), (0.0, 0.2), (-0.1, 0.02)] {
            let a = tmm_green(&m, 500.0, x, xp);
            let b = tmm_green(&m, 500.0, xp, x);
            assert!(rel(a, b) < 1e-12);
        }
        for x in [-0.2, 0.0, 0.03, 0.0625] {
            assert!(tmm_green(&m, 430.0, x, x).im > 0.0);
        }
    }

    #[test]
    fn green_satisfies_jump_condition() {
        let m = MediumSpec::case2();
        let k = 455.0;
        let xs = 0.01;
        let dx = 1e-7;
        let d_right = (tmm_green(&m, k, xs + 2.0 * dx, xs) - tmm_green(&m, k, xs + dx, xs)) / dx;
        let d_left = (tmm_green(&m, k, xs - dx, xs) - tmm_green(&m, k, xs - 2.0 * dx, xs)) / dx;
        let jump = d_right - d_left;
        assert!((jump + ONE).norm() < 1e-4, "{jump}");
    }

    #[test]
    fn energy_balance_closes() {
        for m in [MediumSpec::case1(), MediumSpec::case2()] {
            for k in [300.0, 420.0, 500.0, 555.0, 700.0] {
                for d in [Direction::Forward, Direction::Backward] {
                    let (r, t) = tmm_reflection_transmission(&m, k, d);
                    let lost = 1.0 - r.norm_sqr() - t.norm_sqr();
                    let absorbed = tmm_absorbed_fraction(&m, k, d);
                    assert!(
                        (lost - absorbed).abs() < 1e-10 * lost.max(1e-3),
                        "{k} {lost} {absorbed}"
                    );
                }
            }
        }
    }

    #[test]
    fn mirror_symmetry() {
        let m = MediumSpec::case2();
        for x in [-0.1, -0.02, 0.0, 0.0625] {
            let a = tmm_field(&m, 520.0, Direction::Forward, x);
            let b = tmm_field(&m, 520.0, Direction::Backward, -x);
            assert_eq!(a, b);
        }
    }
}
