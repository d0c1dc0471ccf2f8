//! Numerical Green's function from a unit nodal load, and its samples over the slab.

use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

use crate::fem::{FemError, FrequencyContext, MassScheme, NodalField};
use crate::medium::MediumSpec;
use crate::mesh::Mesh1D;
use crate::quadrature::GaussLegendre;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default slab quadrature points per element.
pub const DEFAULT_POINTS_PER_ELEMENT: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreensError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("source position {0} m is not a mesh node")]
    SourceNotNode(f64),
    #[error("source position {0} m lies in the PML or on a Dirichlet wall")]
    SourceOutsideInterior(f64),
    #[error("at least 2 quadrature points per element are required (got {0})")]
    TooFewPoints(usize),
}

/// `G(·, x_src)` at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSourceSolution {
    pub k: f64,
    pub source: f64,
    pub field: NodalField,
}

impl PointSourceSolution {
    pub fn at(&self, mesh: &Mesh1D, x: f64) -> Result<Complex64, GreensError> {
        Ok(self.field.evaluate(mesh, x)?)
    }

    /// Writes `x,re,im` rows of `G(x, x_src)` at every node.
    pub fn write_profile_csv<W: Write>(&self, mesh: &Mesh1D, mut out: W) -> std::io::Result<()> {
        use crate::output::format_e12 as f;
        writeln!(out, "x,re,im")?;
        for (x, g) in mesh.nodes().iter().zip(&self.field.values) {
            writeln!(out, "{},{},{}", f(*x), f(g.re), f(g.im))?;
        }
        Ok(())
    }
}

/// `G(x_a, x'_q)` at slab quadrature points plus `G(x_a, x_a)`, from a single solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensSamples {
    pub k: f64,
    pub observation: f64,
    pub quad_points: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `Im χ` at each quadrature point.
    pub loss: Vec<f64>,
    pub self_value: Complex64,
}

impl GreensSamples {
    /// `Σ_q w_q χ_I(x'_q) |G(x_a, x'_q)|²`.
    pub fn loss_weighted_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .zip(&self.loss)
            .map(|((g, w), l)| w * l * g.norm_sqr())
            .sum()
    }
}

/// Assembles, factorizes and solves with the default mass scheme.
pub fn solve_point_source(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    k: f64,
    x_src: f64,
) -> Result<PointSourceSolution, GreensError> {
    let ctx = FrequencyContext::new(mesh, medium, k, MassScheme::default())?;
    solve_point_source_with(&ctx, mesh, x_src)
}

/// Unit load on the node at `x_src`; the result is `G(x, x_src)` with
/// `(d²/dx² + k² ε_r) G = -δ`.
pub fn solve_point_source_with(
    ctx: &FrequencyContext,
    mesh: &Mesh1D,
    x_src: f64,
) -> Result<PointSourceSolution, GreensError> {
    let i = mesh
        .node_index(x_src)
        .ok_or(GreensError::SourceNotNode(x_src))?;
    if mesh.in_pml(x_src) || i == 0 || i + 1 == mesh.n_nodes() {
        return Err(GreensError::SourceOutsideInterior(x_src));
    }
    let mut load = vec![ZERO; mesh.n_nodes()];
    load[i] = ONE;
    Ok(PointSourceSolution {
        k: ctx.k,
        source: x_src,
        field: ctx.solve_nodal_load(&load)?,
    })
}

pub fn sample_slab(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    k: f64,
    x_a: f64,
    points_per_element: usize,
) -> Result<GreensSamples, GreensError> {
    let ctx = FrequencyContext::new(mesh, medium, k, MassScheme::default())?;
    let g = solve_point_source_with(&ctx, mesh, x_a)?;
    samples_from_solution(&g, mesh, medium, points_per_element)
}

/// Evaluates a solved `G(·, x_a)` on the slab quadrature, relying on `G(x_a, x') =
/// G(x', x_a)`.
pub fn samples_from_solution(
    g: &PointSourceSolution,
    mesh: &Mesh1D,
    medium: &MediumSpec,
    points_per_element: usize,
) -> Result<GreensSamples, GreensError> {
    if points_per_element < 2 {
        return Err(GreensError::TooFewPoints(points_per_element));
    }
    let gl = GaussLegendre::new(points_per_element);
    let n = mesh.count_region(crate::mesh::Region::Slab) * points_per_element;
    let mut quad_points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut loss = Vec::with_capacity(n);
    for e in mesh.slab_elements() {
        let (a, b) = mesh.element(e);
        let (u0, u1) = (g.field.values[e], g.field.values[e + 1]);
        for (x, w) in gl.mapped(a, b) {
            let t = (x - a) / (b - a);
            quad_points.push(x);
            weights.push(w);
            values.push(u0 * (1.0 - t) + u1 * t);
            loss.push(medium.susceptibility_at(x, g.k).im);
        }
    }
    Ok(GreensSamples {
        k: g.k,
        observation: g.source,
        quad_points,
        weights,
        values,
        loss,
        self_value: g.at(mesh, g.source)?,
    })
}
