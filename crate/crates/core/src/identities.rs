//! Structural checks: the discrete Green-operator identity, its lossless variant,
//! the thermal-equilibrium balance, and a few closed-form helpers.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fem::{assemble_filtered, FemError, FrequencyContext, MassScheme, SystemMatrices};
use crate::greens::{
    samples_from_solution, solve_point_source_with, GreensError, GreensSamples, PointSourceSolution,
};
use crate::medium::MediumSpec;
use crate::mesh::Mesh1D;
use crate::scattering::{solve_scattering_with, Direction, PlaneWaveSolution, ScatteringError};

/// Dof cap above which the column-by-column inverse is refused.
pub const DEFAULT_DOF_CAP: usize = 4000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentityError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error("system has {dofs} unknowns, above the cap of {cap}")]
    TooLarge { dofs: usize, cap: usize },
}

/// Per-frequency summary of all identity residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub k: f64,
    /// `None` when the identity degenerates to `0 = 0`.
    pub ddgt_residual: Option<f64>,
    /// `None` when no PML is present (nothing to demonstrate).
    pub lossless_identity_residual: Option<f64>,
    pub tec_residual: f64,
}

fn unit(n: usize, j: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    e[j] = Complex64::new(1.0, 0.0);
    e
}

/// `‖Im G + G Im(S) G† − k² G Im(M) G†‖_max / ‖Im G‖_max` with `G = L⁻¹`.
///
/// `G` is symmetric, so column `j` of `G A G†` is `L⁻¹ (A conj(g_j))`: two solves per
/// column and no dense products. Returns `None` when `Im G` vanishes identically.
pub fn check_discrete_ddgt(
    system: &SystemMatrices,
    dof_cap: usize,
) -> Result<Option<f64>, IdentityError> {
    let n = system.dof_count();
    if n > dof_cap {
        return Err(IdentityError::TooLarge {
            dofs: n,
            cap: dof_cap,
        });
    }
    let fact = system.factorize()?;
    let k2 = system.k * system.k;
    let loss = system.stiffness.imag().combine(
        Complex64::new(1.0, 0.0),
        &system.mass.imag(),
        Complex64::from(-k2),
    );
    let per_column: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| -> Result<(f64, f64), IdentityError> {
            let g = fact.solve(&unit(n, j))?;
            let conj: Vec<Complex64> = g.iter().map(|z| z.conj()).collect();
            let w = fact.solve(&loss.mul_vec(&conj))?;
            let mut res: f64 = 0.0;
            let mut img: f64 = 0.0;
            for (gi, wi) in g.iter().zip(&w) {
                res = res.max((Complex64::new(gi.im, 0.0) + wi).norm());
                img = img.max(gi.im.abs());
            }
            Ok((res, img))
        })
        .collect::<Result<_, _>>()?;
    let res = per_column.iter().map(|p| p.0).fold(0.0, f64::max);
    let img = per_column.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok((img > 0.0).then(|| res / img))
}

/// Residual of `Im G = k² G Im(M_phys) G†`, where `M_phys` keeps only non-PML
/// elements, restricted to node pairs that both pass `keep`.
///
/// With radiation loss this identity is incomplete: the stretched PML draws energy
/// through `Im S` (and its own share of `Im M`), which the medium term cannot see.
/// Returns `None` for a mesh without PML.
pub fn check_lossless_identity_failure(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    k: f64,
    scheme: MassScheme,
    dof_cap: usize,
    keep: impl Fn(f64) -> bool + Sync,
) -> Result<Option<f64>, IdentityError> {
    if !mesh.has_pml() {
        return Ok(None);
    }
    let ctx = FrequencyContext::new(mesh, medium, k, scheme)?;
    let n = ctx.system.dof_count();
    if n > dof_cap {
        return Err(IdentityError::TooLarge {
            dofs: n,
            cap: dof_cap,
        });
    }
    let phys = assemble_filtered(mesh, medium, k, scheme, |r| !r.is_pml());
    let m_imag = phys.mass.imag();
    let nodes = mesh.nodes();
    let chosen: Vec<usize> = (0..n)
        .filter(|&j| {
            let x = nodes[ctx.system.node_of_dof(j)];
            !mesh.in_pml(x) && keep(x)
        })
        .collect();
    let per_column: Vec<(f64, f64)> = chosen
        .par_iter()
        .map(|&j| -> Result<(f64, f64), IdentityError> {
            let g = ctx.factorization.solve(&unit(n, j))?;
            let conj: Vec<Complex64> = g.iter().map(|z| z.conj() * (k * k)).collect();
            let w = ctx.factorization.solve(&m_imag.mul_vec(&conj))?;
            let mut res: f64 = 0.0;
            let mut img: f64 = 0.0;
            for &i in &chosen {
                let r = Complex64::new(g[i].im, 0.0) - w[i];
                res = res.max(r.norm());
                img = img.max(g[i].im.abs());
            }
            Ok((res, img))
        })
        .collect::<Result<_, _>>()?;
    let res = per_column.iter().map(|p| p.0).fold(0.0, f64::max);
    let img = per_column.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok((img > 0.0).then(|| res / img))
}

/// Both sides of the thermal-equilibrium balance at `(x_α, x_β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalCheck {
    /// `Im G(x_α, x_β) − k² ∫ χ_I G(x_α, x') G*(x', x_β) dx'`.
    pub lhs: Complex64,
    /// `(1/4k) Σ_± Φ_tot(x_α) Φ_tot*(x_β)`.
    pub rhs: Complex64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|)`.
    pub relative: f64,
    /// `|lhs − rhs| / sqrt(Im G(x_α, x_α) Im G(x_β, x_β))`, meaningful where the
    /// boundary term itself is tiny (deep inside an opaque slab).
    pub scaled: f64,
}

/// Evaluates the balance from already solved point sources at `x_α`, `x_β` and the
/// two plane waves.
pub fn thermal_balance(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    g_alpha: &PointSourceSolution,
    g_beta: &PointSourceSolution,
    planes: &[PlaneWaveSolution],
    points_per_element: usize,
) -> Result<ThermalCheck, IdentityError> {
    let k = g_alpha.k;
    let xa = g_alpha.source;
    let xb = g_beta.source;
    let sa: GreensSamples = samples_from_solution(g_alpha, mesh, medium, points_per_element)?;
    let sb: GreensSamples = samples_from_solution(g_beta, mesh, medium, points_per_element)?;
    let mut overlap = Complex64::new(0.0, 0.0);
    for q in 0..sa.values.len() {
        overlap += sa.weights[q] * sa.loss[q] * sa.values[q] * sb.values[q].conj();
    }
    let g_ab = g_beta.at(mesh, xa)?;
    let lhs = Complex64::new(g_ab.im, 0.0) - k * k * overlap;
    let mut rhs = Complex64::new(0.0, 0.0);
    for p in planes {
        let ua = p.total_field_at(mesh, xa)? / p.amplitude;
        let ub = p.total_field_at(mesh, xb)? / p.amplitude;
        rhs += ua * ub.conj();
    }
    rhs /= 4.0 * k;
    let diff = (lhs - rhs).norm();
    let scale = lhs.norm().max(rhs.norm());
    let relative = if scale > 0.0 { diff / scale } else { 0.0 };
    let local = (sa.self_value.im * sb.self_value.im).abs().sqrt();
    let scaled = if local > 0.0 { diff / local } else { 0.0 };
    Ok(ThermalCheck {
        lhs,
        rhs,
        relative,
        scaled,
    })
}

/// Runs all solves needed for the balance at one frequency.
pub fn check_thermal_equilibrium(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    k: f64,
    x_alpha: f64,
    x_beta: f64,
) -> Result<ThermalCheck, IdentityError> {
    let ctx = FrequencyContext::new(mesh, medium, k, MassScheme::default())?;
    let ga = solve_point_source_with(&ctx, mesh, x_alpha)?;
    let gb = if x_beta == x_alpha {
        ga.clone()
    } else {
        solve_point_source_with(&ctx, mesh, x_beta)?
    };
    let planes = Direction::BOTH
        .iter()
        .map(|d| solve_scattering_with(&ctx, mesh, medium, *d))
        .collect::<Result<Vec<_>, _>>()?;
    thermal_balance(
        mesh,
        medium,
        &ga,
        &gb,
        &planes,
        crate::greens::DEFAULT_POINTS_PER_ELEMENT,
    )
}

/// `A(x_b, x_src) = −2 Im G(x_b, x_src)`.
pub fn spectral_function(
    g: &PointSourceSolution,
    mesh: &Mesh1D,
    x_b: f64,
) -> Result<f64, IdentityError> {
    Ok(-2.0 * g.at(mesh, x_b)?.im)
}

/// `A(x_a, x_a)` from slab samples.
pub fn spectral_self(greens: &GreensSamples) -> f64 {
    -2.0 * greens.self_value.im
}

/// Mean photon number and mean energy (in units of `ħω`) of a thermal mode, given
/// `k_B T / ħω`.
pub fn thermal_occupation(temperature_ratio: f64) -> (f64, f64) {
    let n = if temperature_ratio <= 0.0 {
        0.0
    } else {
        1.0 / (1.0 / temperature_ratio).exp_m1()
    };
    (n, n + 0.5)
}

/// All residuals at one frequency on a verification mesh.
pub fn identity_report(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    k: f64,
    tec_point: f64,
    dof_cap: usize,
) -> Result<IdentityReport, IdentityError> {
    let system = crate::fem::assemble(mesh, medium, k);
    let ddgt_residual = check_discrete_ddgt(&system, dof_cap)?;
    let lossless_identity_residual =
        check_lossless_identity_failure(mesh, medium, k, MassScheme::default(), dof_cap, |_| true)?;
    let tec = check_thermal_equilibrium(mesh, medium, k, tec_point, tec_point)?;
    Ok(IdentityReport {
        k,
        ddgt_residual,
        lossless_identity_residual,
        tec_residual: tec.relative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::greens::sample_slab;
    use crate::medium::SLAB_THICKNESS;
    use crate::mesh::{build_box_mesh, build_mesh, default_padding, PmlSpec};

    fn verification_mesh(m: &MediumSpec, ppw: f64) -> Mesh1D {
        build_mesh(
            m,
            default_padding(m, 300.0),
            ppw,
            700.0,
            PmlSpec::for_band(300.0),
            &[0.0, SLAB_THICKNESS],
        )
        .unwrap()
    }

    #[test]
    fn ddgt_holds_to_machine_precision() {
        for m in [
            MediumSpec::vacuum(),
            MediumSpec::case1(),
            MediumSpec::case2(),
        ] {
            let mesh = verification_mesh(&m, 15.0);
            let sys = assemble(&mesh, &m, 500.0);
            let r = check_discrete_ddgt(&sys, DEFAULT_DOF_CAP).unwrap().unwrap();
            assert!(r < 1e-10, "{r}");
        }
    }

    #[test]
    fn identities_hold_with_consistent_mass() {
        let m = MediumSpec::case2();
        let mesh = verification_mesh(&m, 15.0);
        let sys = crate::fem::assemble_with(&mesh, &m, 480.0, MassScheme::Consistent);
        assert!(check_discrete_ddgt(&sys, DEFAULT_DOF_CAP).unwrap().unwrap() < 1e-10);
        let vac = MediumSpec::vacuum();
        let vmesh = verification_mesh(&vac, 15.0);
        let r = check_lossless_identity_failure(
            &vmesh,
            &vac,
            480.0,
            MassScheme::Consistent,
            DEFAULT_DOF_CAP,
            |_| true,
        )
        .unwrap()
        .unwrap();
        assert!(r > 0.5, "{r}");
    }

    #[test]
    fn ddgt_degenerates_in_closed_lossless_box() {
        let m = MediumSpec::vacuum();
        let mesh = build_box_mesh(&m, 0.3, 15.0, 700.0, &[]).unwrap();
        let sys = assemble(&mesh, &m, 503.3);
        assert_eq!(check_discrete_ddgt(&sys, DEFAULT_DOF_CAP).unwrap(), None);
        assert_eq!(
            check_lossless_identity_failure(
                &mesh,
                &m,
                503.3,
                MassScheme::Blended,
                DEFAULT_DOF_CAP,
                |_| true
            )
            .unwrap(),
            None
        );
    }

    #[test]
    fn dof_cap_enforced() {
        let m = MediumSpec::vacuum();
        let mesh = verification_mesh(&m, 15.0);
        let sys = assemble(&mesh, &m, 500.0);
        assert!(matches!(
            check_discrete_ddgt(&sys, 10),
            Err(IdentityError::TooLarge { .. })
        ));
    }

    #[test]
    fn lossless_identity_fails_with_radiation() {
        let m = MediumSpec::vacuum();
        let mesh = verification_mesh(&m, 15.0);
        let r = check_lossless_identity_failure(
            &mesh,
            &m,
            500.0,
            MassScheme::Blended,
            DEFAULT_DOF_CAP,
            |_| true,
        )
        .unwrap()
        .unwrap();
        assert!(r > 0.5, "{r}");
    }

    #[test]
    fn lossless_identity_nearly_holds_deep_in_opaque_slab() {
        let m = MediumSpec::case1();
        let mesh = verification_mesh(&m, 15.0);
        let a = m.slab_half_length;
        let r = check_lossless_identity_failure(
            &mesh,
            &m,
            500.0,
            MassScheme::Blended,
            DEFAULT_DOF_CAP,
            |x| x.abs() <= 0.3 * a,
        )
        .unwrap()
        .unwrap();
        assert!(r < 0.1, "{r}");
    }

    #[test]
    fn vacuum_thermal_balance() {
        let m = MediumSpec::vacuum();
        let mesh = verification_mesh(&m, 80.0);
        let c = check_thermal_equilibrium(&mesh, &m, 500.0, 0.0, 0.0).unwrap();
        assert!((c.rhs.re - 1e-3).abs() < 1e-15);
        assert!(c.relative < 1e-3, "{}", c.relative);
    }

    #[test]
    fn slab_thermal_balance_at_xb() {
        for m in [MediumSpec::case1(), MediumSpec::case2()] {
            let mesh = verification_mesh(&m, 40.0);
            for k in [300.0, 480.0, 500.0, 700.0] {
                let c = check_thermal_equilibrium(&mesh, &m, k, SLAB_THICKNESS, SLAB_THICKNESS)
                    .unwrap();
                assert!(c.relative < 0.01, "{k}: {}", c.relative);
            }
        }
    }

    #[test]
    fn off_diagonal_balance() {
        let m = MediumSpec::case2();
        let mesh = verification_mesh(&m, 40.0);
        let c = check_thermal_equilibrium(&mesh, &m, 520.0, 0.0, SLAB_THICKNESS).unwrap();
        assert!(c.scaled < 0.01, "{}", c.scaled);
    }

    #[test]
    fn spectral_function_relations() {
        let m = MediumSpec::vacuum();
        let mesh = verification_mesh(&m, 80.0);
        let s = sample_slab(&mesh, &m, 500.0, 0.0, 4).unwrap();
        assert!((spectral_self(&s) + 1.0 / 500.0).abs() < 1e-3 / 500.0);
        let pf = crate::purcell::gamma_sfa(&s);
        assert!((pf + 500.0 * spectral_self(&s)).abs() < 1e-15);

        let m = MediumSpec::case2();
        let mesh = verification_mesh(&m, 40.0);
        let ctx = FrequencyContext::new(&mesh, &m, 470.0, MassScheme::Blended).unwrap();
        let ga = solve_point_source_with(&ctx, &mesh, 0.0).unwrap();
        let gb = solve_point_source_with(&ctx, &mesh, SLAB_THICKNESS).unwrap();
        let ab = spectral_function(&ga, &mesh, SLAB_THICKNESS).unwrap();
        let ba = spectral_function(&gb, &mesh, 0.0).unwrap();
        assert!((ab - ba).abs() < 1e-10 * ab.abs());
    }

    #[test]
    fn occupation_numbers() {
        assert_eq!(thermal_occupation(0.0), (0.0, 0.5));
        let (n, th) = thermal_occupation(1.0 / 2f64.ln());
        assert!((n - 1.0).abs() < 1e-12 && (th - 1.5).abs() < 1e-12);
        let (n, _) = thermal_occupation(1e4);
        assert!((n - 1e4).abs() / 1e4 < 1e-4);
    }

    #[test]
    fn report_bundles_everything() {
        let m = MediumSpec::case1();
        let mesh = verification_mesh(&m, 15.0);
        let r = identity_report(&mesh, &m, 450.0, SLAB_THICKNESS, DEFAULT_DOF_CAP).unwrap();
        assert!(r.ddgt_residual.unwrap() < 1e-10);
        assert!(r.lossless_identity_residual.unwrap() > 0.0);
        assert!(r.tec_residual >= 0.0);
    }
}
