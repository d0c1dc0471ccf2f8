//! Linear finite elements for `-(d/dx)(1/s)(d/dx) u - k² ε_r s u`, PML folded into
//! both matrices, homogeneous Dirichlet walls at both mesh ends.
//!
//! Degrees of freedom are the interior nodes: dof `j` lives on node `j + 1`.

use num_complex::Complex64;
use thiserror::Error;

use crate::medium::MediumSpec;
use crate::mesh::{Mesh1D, Region};
use crate::quadrature::GaussLegendre;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Quadrature points per element used for every element integral.
pub const ELEMENT_QUADRATURE_POINTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("singular Helmholtz operator at k = {k}: pivot {pivot:.3e} below floor {floor:.3e} (row {row})")]
    SingularOperator {
        k: f64,
        row: usize,
        pivot: f64,
        floor: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("position {0} m is outside the mesh")]
    OutsideMesh(f64),
    #[error("frequency must be positive and finite (got {0})")]
    InvalidFrequency(f64),
}

/// Complex symmetric tridiagonal matrix. `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<Complex64>,
    pub off: Vec<Complex64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![ZERO; n],
            off: vec![ZERO; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        let mut y: Vec<Complex64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Self {
        let mix = |p: &[Complex64], q: &[Complex64]| {
            p.iter().zip(q).map(|(u, v)| a * u + b * v).collect()
        };
        Self {
            diag: mix(&self.diag, &other.diag),
            off: mix(&self.off, &other.off),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            diag: self.diag.iter().map(|z| f(*z)).collect(),
            off: self.off.iter().map(|z| f(*z)).collect(),
        }
    }

    /// Elementwise imaginary part, stored as a real-valued complex matrix.
    pub fn imag(&self) -> Self {
        self.map(|z| Complex64::new(z.im, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.diag.iter().chain(&self.off).all(|z| z.im == 0.0)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].norm();
                if i > 0 {
                    s += self.off[i - 1].norm();
                }
                if i + 1 < n {
                    s += self.off[i].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// `x^T A x` for a real vector.
    pub fn quadratic_form(&self, x: &[f64]) -> Complex64 {
        let n = self.len();
        let mut acc = ZERO;
        for i in 0..n {
            acc += self.diag[i] * x[i] * x[i];
            if i + 1 < n {
                acc += self.off[i] * (2.0 * x[i] * x[i + 1]);
            }
        }
        acc
    }
}

/// Element mass treatment.
///
/// `Blended` averages the consistent and row-sum-lumped element masses. The two
/// schemes have phase errors of opposite sign, so the average cancels the leading
/// dispersion term while keeping second-order amplitude convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassScheme {
    Consistent,
    #[default]
    Blended,
}

/// Stiffness and mass on the interior degrees of freedom at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub stiffness: SymTridiag,
    pub mass: SymTridiag,
    pub k: f64,
    n_nodes: usize,
}

impl SystemMatrices {
    /// Wraps externally built matrices on `dofs = n_nodes - 2` unknowns.
    pub fn from_parts(stiffness: SymTridiag, mass: SymTridiag, k: f64) -> Self {
        assert_eq!(stiffness.len(), mass.len());
        let n_nodes = stiffness.len() + 2;
        Self {
            stiffness,
            mass,
            k,
            n_nodes,
        }
    }

    pub fn dof_count(&self) -> usize {
        self.stiffness.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn node_of_dof(&self, j: usize) -> usize {
        j + 1
    }

    /// `None` for the two Dirichlet nodes.
    pub fn dof_of_node(&self, i: usize) -> Option<usize> {
        (i >= 1 && i + 1 < self.n_nodes).then(|| i - 1)
    }

    /// `L = S - k² M`.
    pub fn operator(&self) -> SymTridiag {
        self.stiffness
            .combine(ONE, &self.mass, Complex64::from(-self.k * self.k))
    }

    pub fn factorize(&self) -> Result<Factorization, FemError> {
        Factorization::new(&self.operator(), self.k)
    }
}

/// Assembles with the default (blended) mass scheme.
pub fn assemble(mesh: &Mesh1D, medium: &MediumSpec, k: f64) -> SystemMatrices {
    assemble_with(mesh, medium, k, MassScheme::default())
}

pub fn assemble_with(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    k: f64,
    scheme: MassScheme,
) -> SystemMatrices {
    assemble_filtered(mesh, medium, k, scheme, |_| true)
}

/// Assembles only the elements whose region passes `keep`; the rest contribute zero.
pub fn assemble_filtered(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    k: f64,
    scheme: MassScheme,
    keep: impl Fn(Region) -> bool,
) -> SystemMatrices {
    let n = mesh.n_nodes();
    let mut s_full = SymTridiag::zeros(n);
    let mut m_full = SymTridiag::zeros(n);
    let gl = GaussLegendre::new(ELEMENT_QUADRATURE_POINTS);
    let eps_slab = ONE + medium.susceptibility(k);
    for e in 0..mesh.n_elements() {
        let region = mesh.region(e);
        if !keep(region) {
            continue;
        }
        let (a, b) = mesh.element(e);
        let h = b - a;
        let eps = if region == Region::Slab {
            eps_slab
        } else {
            ONE
        };
        let (mut inv_s, mut m00, mut m01, mut m11) = (ZERO, ZERO, ZERO, ZERO);
        for (x, w) in gl.mapped(a, b) {
            let s = mesh.stretch_factor(x, k);
            let p0 = (b - x) / h;
            let p1 = 1.0 - p0;
            inv_s += w / s;
            let ws = eps * s * w;
            m00 += ws * p0 * p0;
            m01 += ws * p0 * p1;
            m11 += ws * p1 * p1;
        }
        if scheme == MassScheme::Blended {
            m00 = 0.5 * (2.0 * m00 + m01);
            m11 = 0.5 * (2.0 * m11 + m01);
            m01 *= 0.5;
        }
        let se = inv_s / (h * h);
        s_full.diag[e] += se;
        s_full.diag[e + 1] += se;
        s_full.off[e] -= se;
        m_full.diag[e] += m00;
        m_full.diag[e + 1] += m11;
        m_full.off[e] += m01;
    }
    SystemMatrices {
        stiffness: interior(&s_full),
        mass: interior(&m_full),
        k,
        n_nodes: n,
    }
}

fn interior(full: &SymTridiag) -> SymTridiag {
    let n = full.len();
    if n < 3 {
        return SymTridiag::zeros(0);
    }
    SymTridiag {
        diag: full.diag[1..n - 1].to_vec(),
        off: full.off[1..n - 2].to_vec(),
    }
}

/// Tridiagonal LU with partial pivoting (one extra superdiagonal from row swaps).
///
/// Immutable after construction, so concurrent solves against one factorization are
/// safe.
#[derive(Debug, Clone)]
pub struct Factorization {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl Factorization {
    /// Factorizes `a`; `k` is only used to label a singularity error.
    pub fn new(a: &SymTridiag, k: f64) -> Result<Self, FemError> {
        let n = a.len();
        let floor = 1e-14 * a.norm_inf();
        let mut d = a.diag.clone();
        let mut dl = a.off.clone();
        let mut du = a.off.clone();
        let mut du2 = vec![ZERO; n.saturating_sub(2)];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] != ZERO {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for (row, p) in d.iter().enumerate() {
            let pivot = p.norm();
            if !(pivot > floor) {
                return Err(FemError::SingularOperator {
                    k,
                    row,
                    pivot,
                    floor,
                });
            }
        }
        Ok(Self {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>, FemError> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) -> Result<(), FemError> {
        let n = self.len();
        if b.len() != n {
            return Err(FemError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        if n == 0 {
            return Ok(());
        }
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        Ok(())
    }
}

/// `‖A x - b‖_∞ / (‖A‖_∞ ‖x‖_∞ + ‖b‖_∞)`, the normwise backward error.
pub fn relative_residual(a: &SymTridiag, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = a.mul_vec(x);
    let r = ax
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v).norm())
        .fold(0.0, f64::max);
    let xn = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let bn = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let den = a.norm_inf() * xn + bn;
    if den == 0.0 {
        0.0
    } else {
        r / den
    }
}

/// Nodal values of a solved field, Dirichlet nodes included (as zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub values: Vec<Complex64>,
}

impl NodalField {
    pub fn from_dofs(dofs: &[Complex64]) -> Self {
        let mut values = Vec::with_capacity(dofs.len() + 2);
        values.push(ZERO);
        values.extend_from_slice(dofs);
        values.push(ZERO);
        Self { values }
    }

    pub fn dofs(&self) -> &[Complex64] {
        &self.values[1..self.values.len() - 1]
    }

    /// Linear interpolation inside the containing element.
    pub fn evaluate(&self, mesh: &Mesh1D, x: f64) -> Result<Complex64, FemError> {
        evaluate_field(mesh, &self.values, x)
    }
}

/// Interpolates nodal values (one per mesh node) at `x`.
pub fn evaluate_field(mesh: &Mesh1D, values: &[Complex64], x: f64) -> Result<Complex64, FemError> {
    if values.len() != mesh.n_nodes() {
        return Err(FemError::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: values.len(),
        });
    }
    let (e, t) = mesh.locate(x).ok_or(FemError::OutsideMesh(x))?;
    Ok(values[e] * (1.0 - t) + values[e + 1] * t)
}

/// One assembled and factorized operator, shared by every right-hand side at `k`.
#[derive(Debug, Clone)]
pub struct FrequencyContext {
    pub k: f64,
    pub system: SystemMatrices,
    pub factorization: Factorization,
}

impl FrequencyContext {
    pub fn new(
        mesh: &Mesh1D,
        medium: &MediumSpec,
        k: f64,
        scheme: MassScheme,
    ) -> Result<Self, FemError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(FemError::InvalidFrequency(k));
        }
        let system = assemble_with(mesh, medium, k, scheme);
        let factorization = system.factorize()?;
        Ok(Self {
            k,
            system,
            factorization,
        })
    }

    /// Solves with a load given per mesh node; Dirichlet entries are ignored.
    pub fn solve_nodal_load(&self, load: &[Complex64]) -> Result<NodalField, FemError> {
        let n = self.system.n_nodes();
        if load.len() != n {
            return Err(FemError::DimensionMismatch {
                expected: n,
                got: load.len(),
            });
        }
        let x = self.factorization.solve(&load[1..n - 1])?;
        Ok(NodalField::from_dofs(&x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, build_mesh, PmlSpec};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn uniform_box() -> (Mesh1D, MediumSpec) {
        let m = MediumSpec::vacuum();
        let mesh = build_box_mesh(&m, 0.5, 20.0, 100.0, &[]).unwrap();
        (mesh, m)
    }

    #[test]
    fn textbook_vacuum_matrices() {
        let (mesh, m) = uniform_box();
        let sys = assemble_with(&mesh, &m, 100.0, MassScheme::Consistent);
        // slab faces split the box into uneven segments; check one interior vacuum row
        let e = 2;
        let (a, b) = mesh.element(e);
        let (a2, b2) = mesh.element(e + 1);
        let h = b - a;
        assert!((b2 - a2 - h).abs() < 1e-14);
        let j = e; // dof j sits on node j + 1 = e + 1
        assert!((sys.stiffness.diag[j] - c(2.0 / h, 0.0)).norm() < 1e-9 / h);
        assert!((sys.stiffness.off[j] - c(-1.0 / h, 0.0)).norm() < 1e-9 / h);
        assert!((sys.mass.diag[j] - c(2.0 * h / 3.0, 0.0)).norm() < 1e-15);
        assert!((sys.mass.off[j] - c(h / 6.0, 0.0)).norm() < 1e-15);

        let blended = assemble(&mesh, &m, 100.0);
        assert!((blended.mass.diag[j] - c(5.0 * h / 6.0, 0.0)).norm() < 1e-15);
        assert!((blended.mass.off[j] - c(h / 12.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lossless_closed_system_is_real_and_definite() {
        let (mesh, m) = uniform_box();
        let sys = assemble(&mesh, &m, 100.0);
        assert!(sys.stiffness.is_real() && sys.mass.is_real());
        let n = sys.dof_count();
        let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        assert!(sys.stiffness.quadratic_form(&x).re >= 0.0);
        assert!(sys.mass.quadratic_form(&x).re > 0.0);
    }

    #[test]
    fn slab_mass_scales_with_permittivity() {
        let m = MediumSpec::case1();
        let mesh = build_box_mesh(&m, 0.5, 20.0, 100.0, &[]).unwrap();
        let lossy = assemble(&mesh, &m, 500.0);
        let vac = assemble(&mesh, &MediumSpec::vacuum(), 500.0);
        let e = mesh.slab_elements().nth(3).unwrap();
        let j = e; // node e + 1, interior of slab
        let ratio = lossy.mass.off[j] / vac.mass.off[j];
        assert!((ratio - c(1.0, 0.4)).norm() < 1e-13);
    }

    #[test]
    fn pml_makes_matrices_complex() {
        let m = MediumSpec::vacuum();
        let mesh = build_mesh(&m, 0.05, 20.0, 700.0, PmlSpec::for_band(300.0), &[]).unwrap();
        let sys = assemble(&mesh, &m, 500.0);
        assert!(sys.stiffness.diag[0].im != 0.0);
        assert!(sys.mass.diag[0].im != 0.0);
        let mid = sys.dof_count() / 2;
        assert_eq!(sys.stiffness.diag[mid].im, 0.0);
    }

    #[test]
    fn singular_operator_detected() {
        let z = SymTridiag::zeros(5);
        let sys = SystemMatrices::from_parts(z.clone(), z, 500.0);
        assert!(matches!(
            sys.factorize(),
            Err(FemError::SingularOperator { .. })
        ));
    }

    #[test]
    fn round_trip_and_zero_rhs() {
        let m = MediumSpec::case2();
        let mesh = build_mesh(&m, 0.05, 20.0, 700.0, PmlSpec::for_band(300.0), &[]).unwrap();
        let sys = assemble(&mesh, &m, 480.0);
        let l = sys.operator();
        let f = sys.factorize().unwrap();
        let n = sys.dof_count();
        assert!(f.solve(&vec![ZERO; n]).unwrap().iter().all(|z| *z == ZERO));
        for j in [0, n / 3, n - 1] {
            let mut e = vec![ZERO; n];
            e[j] = ONE;
            let b = l.mul_vec(&e);
            let x = f.solve(&b).unwrap();
            let err = x
                .iter()
                .zip(&e)
                .map(|(u, v)| (u - v).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "{err}");
        }
        let b: Vec<Complex64> = (0..n)
            .map(|i| c((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let x = f.solve(&b).unwrap();
        assert!(relative_residual(&l, &x, &b) < 1e-12);
        assert!(matches!(
            f.solve(&b[1..]),
            Err(FemError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pivoting_handles_zero_leading_diagonal() {
        let a = SymTridiag {
            diag: vec![ZERO, c(2.0, 0.0), c(3.0, 1.0), c(1.0, 0.0)],
            off: vec![c(1.0, 0.0), c(0.5, 0.0), c(0.0, 2.0)],
        };
        let f = Factorization::new(&a, 1.0).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0), c(0.5, 0.5)];
        let x = f.solve(&b).unwrap();
        assert!(relative_residual(&a, &x, &b) < 1e-15);
    }

    #[test]
    fn vacuum_point_source_matches_closed_form() {
        let m = MediumSpec::vacuum();
        let k = 500.0;
        let mesh = build_mesh(&m, 0.1, 40.0, 700.0, PmlSpec::for_band(300.0), &[0.0]).unwrap();
        let ctx = FrequencyContext::new(&mesh, &m, k, MassScheme::Blended).unwrap();
        let i0 = mesh.node_index(0.0).unwrap();
        let mut load = vec![ZERO; mesh.n_nodes()];
        load[i0] = ONE;
        let g = ctx.solve_nodal_load(&load).unwrap();
        let inner = mesh.pml_inner();
        let mut worst: f64 = 0.0;
        for (i, x) in mesh.nodes().iter().enumerate() {
            if x.abs() < inner - 0.01 {
                let exact = c(0.0, 1.0) * Complex64::from_polar(1.0, k * x.abs()) / (2.0 * k);
                worst = worst.max((g.values[i] - exact).norm() / exact.norm());
            }
        }
        assert!(worst < 5e-3, "{worst}");
    }

    #[test]
    fn evaluation_interpolates() {
        let (mesh, _) = uniform_box();
        let vals: Vec<Complex64> = mesh.nodes().iter().map(|x| c(*x, 2.0 * x)).collect();
        let field = NodalField {
            values: vals.clone(),
        };
        let x5 = mesh.nodes()[5];
        assert_eq!(field.evaluate(&mesh, x5).unwrap(), vals[5]);
        let mid = 0.5 * (mesh.nodes()[5] + mesh.nodes()[6]);
        let avg = 0.5 * (vals[5] + vals[6]);
        assert!((field.evaluate(&mesh, mid).unwrap() - avg).norm() < 1e-15);
        let f = NodalField::from_dofs(&vec![ONE; mesh.n_nodes() - 2]);
        assert_eq!(f.evaluate(&mesh, mesh.lower()).unwrap(), ZERO);
        assert!(f.evaluate(&mesh, mesh.upper() + 1.0).is_err());
        let _ = PI;
    }
}
