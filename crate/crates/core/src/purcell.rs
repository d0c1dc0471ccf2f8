//! Purcell factors from the Green's function, from boundary- plus medium-assisted
//! fields, and from medium-assisted fields alone; frequency sweeps.
//!
//! Every quantity is already divided by the free-space rate, so the dipole moment,
//! `ħ`, `ε_0` and `c` never appear.

use rayon::prelude::*;
use thiserror::Error;

use crate::fem::{FemError, FrequencyContext, MassScheme};
use crate::greens::{
    samples_from_solution, solve_point_source_with, GreensError, GreensSamples, PointSourceSolution,
};
use crate::identities::{thermal_balance, ThermalCheck};
use crate::medium::MediumSpec;
use crate::mesh::Mesh1D;
use crate::micromodes::{ser_modes, ModeSet, ModesError};
use crate::scattering::{solve_scattering_with, Direction, PlaneWaveSolution, ScatteringError};

/// `2k Im G(x_a, x_a)`.
pub fn gamma_sfa(greens: &GreensSamples) -> f64 {
    2.0 * greens.k * greens.self_value.im
}

/// `½ Σ_± |Φ_tot(x_a) / amplitude|²`.
pub fn gamma_boundary(
    solutions: &[PlaneWaveSolution],
    mesh: &Mesh1D,
    x_a: f64,
) -> Result<f64, ScatteringError> {
    let mut acc = 0.0;
    for s in solutions {
        acc += (s.total_field_at(mesh, x_a)? / s.amplitude).norm_sqr();
    }
    Ok(0.5 * acc)
}

/// `2k³ Σ_q w_q χ_I(x'_q) |G(x_a, x'_q)|²`.
pub fn gamma_medium(greens: &GreensSamples) -> f64 {
    2.0 * greens.k.powi(3) * greens.loss_weighted_norm()
}

pub fn gamma_modified_ln(boundary: f64, medium: f64) -> f64 {
    boundary + medium
}

/// The original formulation keeps only the medium-assisted part.
pub fn gamma_original_ln(medium: f64) -> f64 {
    medium
}

/// Which Purcell estimates a sweep produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Methods {
    pub sfa: bool,
    pub modified_ln: bool,
    pub original_ln: bool,
    pub modes: bool,
    pub thermal: bool,
}

impl Default for Methods {
    fn default() -> Self {
        Self {
            sfa: true,
            modified_ln: true,
            original_ln: true,
            modes: false,
            thermal: true,
        }
    }
}

impl Methods {
    pub fn any(&self) -> bool {
        self.sfa || self.modified_ln || self.original_ln || self.modes
    }
}

/// One sweep point. Disabled methods are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurcellRecord {
    pub omega_a: f64,
    pub x_a: f64,
    pub pf_sfa: Option<f64>,
    pub pf_b: Option<f64>,
    pub pf_m: Option<f64>,
    pub pf_modified_ln: Option<f64>,
    pub pf_original_ln: Option<f64>,
    pub pf_modes: Option<f64>,
    pub tec_residual: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(transparent)]
    Modes(#[from] ModesError),
    #[error(transparent)]
    Identity(#[from] crate::identities::IdentityError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("sweep failed at ω = {omega}: {source}")]
pub struct SweepError {
    pub omega: f64,
    #[source]
    pub source: PointError,
}

/// Mode-expansion inputs for the microscopic estimate.
#[derive(Debug, Clone, Copy)]
pub struct ModeInput<'a> {
    pub modes: &'a ModeSet,
    pub eta: f64,
}

/// Everything a sweep needs; the mesh must contain `x_a` (and `tec_point`) as nodes.
#[derive(Debug, Clone)]
pub struct SweepSetup<'a> {
    pub mesh: &'a Mesh1D,
    pub medium: MediumSpec,
    pub x_a: f64,
    pub omegas: Vec<f64>,
    pub methods: Methods,
    pub scheme: MassScheme,
    pub points_per_element: usize,
    /// Where the thermal-equilibrium balance is checked (`x_α = x_β`).
    pub tec_point: f64,
    pub modes: Option<ModeInput<'a>>,
}

/// Full set of solves at one frequency: one factorization, two plane waves, and one
/// point source (a second one when the thermal check point differs from `x_a`).
pub fn evaluate_point(setup: &SweepSetup<'_>, omega: f64) -> Result<PurcellRecord, PointError> {
    let SweepSetup {
        mesh,
        medium,
        x_a,
        methods,
        ..
    } = setup;
    let needs_fem = methods.sfa || methods.modified_ln || methods.original_ln || methods.thermal;
    let mut rec = PurcellRecord {
        omega_a: omega,
        x_a: *x_a,
        pf_sfa: None,
        pf_b: None,
        pf_m: None,
        pf_modified_ln: None,
        pf_original_ln: None,
        pf_modes: None,
        tec_residual: None,
    };
    if needs_fem {
        let ctx = FrequencyContext::new(mesh, medium, omega, setup.scheme)?;
        let g = solve_point_source_with(&ctx, mesh, *x_a)?;
        let samples = samples_from_solution(&g, mesh, medium, setup.points_per_element)?;
        let need_planes = methods.modified_ln || methods.thermal;
        let planes: Vec<PlaneWaveSolution> = if need_planes {
            Direction::BOTH
                .iter()
                .map(|d| solve_scattering_with(&ctx, mesh, medium, *d))
                .collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };
        if methods.sfa {
            rec.pf_sfa = Some(gamma_sfa(&samples));
        }
        let pf_m = gamma_medium(&samples);
        if methods.modified_ln {
            let pf_b = gamma_boundary(&planes, mesh, *x_a)?;
            rec.pf_b = Some(pf_b);
            rec.pf_m = Some(pf_m);
            rec.pf_modified_ln = Some(gamma_modified_ln(pf_b, pf_m));
        }
        if methods.original_ln {
            rec.pf_m = Some(pf_m);
            rec.pf_original_ln = Some(gamma_original_ln(pf_m));
        }
        if methods.thermal {
            let check = thermal_at(setup, &ctx, &g, &planes)?;
            rec.tec_residual = Some(check.relative);
        }
    }
    if methods.modes {
        if let Some(input) = &setup.modes {
            rec.pf_modes = Some(ser_modes(input.modes, *x_a, omega, input.eta)?);
        }
    }
    Ok(rec)
}

fn thermal_at(
    setup: &SweepSetup<'_>,
    ctx: &FrequencyContext,
    g_atom: &PointSourceSolution,
    planes: &[PlaneWaveSolution],
) -> Result<ThermalCheck, PointError> {
    let x = setup.tec_point;
    let own;
    let g = if x == setup.x_a {
        g_atom
    } else {
        own = solve_point_source_with(ctx, setup.mesh, x)?;
        &own
    };
    Ok(thermal_balance(
        setup.mesh,
        &setup.medium,
        g,
        g,
        planes,
        setup.points_per_element,
    )?)
}

/// Evaluates every frequency in parallel and returns records sorted by `ω_a`.
pub fn sweep(setup: &SweepSetup<'_>) -> Result<Vec<PurcellRecord>, SweepError> {
    let mut records: Vec<PurcellRecord> = setup
        .omegas
        .par_iter()
        .map(|&w| evaluate_point(setup, w).map_err(|source| SweepError { omega: w, source }))
        .collect::<Result<_, _>>()?;
    records.sort_by(|a, b| a.omega_a.total_cmp(&b.omega_a));
    Ok(records)
}

/// `n` evenly spaced frequencies from `lo` to `hi` inclusive (`[lo]` when `n == 1`).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::SLAB_THICKNESS;
    use crate::mesh::{build_mesh, default_padding, PmlSpec};

    fn setup_for<'a>(
        mesh: &'a Mesh1D,
        medium: MediumSpec,
        x_a: f64,
        omegas: Vec<f64>,
    ) -> SweepSetup<'a> {
        SweepSetup {
            mesh,
            medium,
            x_a,
            omegas,
            methods: Methods::default(),
            scheme: MassScheme::Blended,
            points_per_element: 4,
            tec_point: SLAB_THICKNESS,
            modes: None,
        }
    }

    fn mesh_for(m: &MediumSpec, ppw: f64) -> Mesh1D {
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
    fn vacuum_identities() {
        let m = MediumSpec::vacuum();
        let mesh = mesh_for(&m, 80.0);
        let recs = sweep(&setup_for(&mesh, m, 0.0, linspace(300.0, 700.0, 5))).unwrap();
        for r in recs {
            assert!((r.pf_sfa.unwrap() - 1.0).abs() < 1e-3, "{r:?}");
            assert!((r.pf_modified_ln.unwrap() - 1.0).abs() < 1e-3);
            assert_eq!(r.pf_original_ln, Some(0.0));
            assert!(r.tec_residual.unwrap() < 1e-3);
        }
    }

    #[test]
    fn case_1a_regime() {
        let m = MediumSpec::case1();
        let mesh = mesh_for(&m, 40.0);
        let r = evaluate_point(&setup_for(&mesh, m, 0.0, vec![]), 500.0).unwrap();
        let (pf1, pf3) = (r.pf_sfa.unwrap(), r.pf_modified_ln.unwrap());
        assert!(r.pf_m.unwrap() > 0.9 * pf3);
        assert!(r.pf_b.unwrap() / pf3 < 0.1);
        assert!((pf3 - pf1).abs() / pf1 < 0.02);
        assert!((r.pf_original_ln.unwrap() - pf1).abs() / pf1 < 0.1);
        assert_eq!(r.pf_modified_ln.unwrap(), r.pf_b.unwrap() + r.pf_m.unwrap());
    }

    #[test]
    fn case_1b_original_model_deviates() {
        let m = MediumSpec::case1();
        let mesh = mesh_for(&m, 40.0);
        let r = evaluate_point(&setup_for(&mesh, m, SLAB_THICKNESS, vec![]), 500.0).unwrap();
        let pf1 = r.pf_sfa.unwrap();
        let d4 = (r.pf_original_ln.unwrap() - pf1).abs();
        let d3 = (r.pf_modified_ln.unwrap() - pf1).abs();
        assert!(d4 > d3);
        assert!(r.tec_residual.unwrap() < 0.01);
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let m = MediumSpec::case2();
        let mesh = mesh_for(&m, 40.0);
        let mut s = setup_for(&mesh, m, SLAB_THICKNESS, vec![]);
        let a = evaluate_point(&s, 480.0).unwrap().pf_m.unwrap();
        s.points_per_element = 8;
        let b = evaluate_point(&s, 480.0).unwrap().pf_m.unwrap();
        assert!((a - b).abs() / a < 1e-3);
    }

    #[test]
    fn disabled_methods_are_empty() {
        let m = MediumSpec::case2();
        let mesh = mesh_for(&m, 20.0);
        let mut s = setup_for(&mesh, m, 0.0, vec![400.0]);
        s.methods = Methods {
            sfa: true,
            modified_ln: false,
            original_ln: false,
            modes: false,
            thermal: false,
        };
        let r = &sweep(&s).unwrap()[0];
        assert!(r.pf_sfa.is_some());
        assert!(r.pf_b.is_none() && r.pf_m.is_none() && r.pf_modes.is_none());
        assert!(r.tec_residual.is_none());
    }

    #[test]
    fn sorted_output_and_error_carries_frequency() {
        let m = MediumSpec::case1();
        let mesh = mesh_for(&m, 20.0);
        let recs = sweep(&setup_for(&mesh, m, 0.0, vec![600.0, 300.0, 450.0])).unwrap();
        let ws: Vec<f64> = recs.iter().map(|r| r.omega_a).collect();
        assert_eq!(ws, vec![300.0, 450.0, 600.0]);
        let bad = sweep(&setup_for(&mesh, m, 0.0123456, vec![500.0])).unwrap_err();
        assert_eq!(bad.omega, 500.0);
    }

    #[test]
    fn grid() {
        assert_eq!(linspace(300.0, 700.0, 1), vec![300.0]);
        let g = linspace(300.0, 700.0, 101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[50], 500.0);
        assert_eq!(g[100], 700.0);
    }
}
