//! Microscopic field + polarization + bath model in a closed box, diagonalized as a
//! generalized symmetric eigenproblem `K v = ω² B v`.
//!
//! Coordinates: the dual potential `C` on every node (`D = C'`, `H = -Ċ`), one
//! polarization coordinate `Q` per slab element (`P = ω_p Q`), and `n_bins` bath
//! oscillators `y_j` per slab element. Per slab element of length `h` the Lagrangian
//! density is integrated exactly:
//!
//! ```text
//! T = ½ Ċ² + ½ m_Q Q̇² + ½ Σ ẏ_j²
//! V = ½ (C' − ω_p Q)² + ½ (ω_0² − α) Q² + ½ Σ ν_j² (y_j − c_j Q / ν_j²)²
//! ```
//!
//! The field energy `½(C' − ω_p Q)²` is `½ E²`, so the walls (natural boundary for
//! `C`) carry `E = 0`. Bath bins cover `[ν_min, ν_max]` with a `sin²` taper at both
//! ends. Element `s` of `n_s` shifts its bins by `(σ(s) + ½)/n_s` of a bin width,
//! where `σ` is a scrambling permutation, so the offsets are exactly uniform and
//! averaging over elements smooths the discrete bath into a continuum. The
//! reactive shift of the truncated bath is fitted as `α + β ω²` over the calibration
//! band and removed through `α` and the polarization mass `m_Q = 1 + β`.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use thiserror::Error;

use crate::medium::MediumSpec;
use crate::mesh::{build_box_mesh, Mesh1D, MeshError};
use crate::quadrature::GaussLegendre;

const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_9;

/// Stride coprime with `n` closest to `n` times the golden fraction. Stepping through
/// `0..n` with it visits every residue once while scattering neighbours far apart.
fn scramble_stride(n: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    if n <= 2 {
        return 1;
    }
    let target = (n as f64 * GOLDEN_FRACTION).round() as usize;
    (0..n)
        .flat_map(|d| [target.saturating_sub(d), target + d])
        .find(|&c| c > 0 && c < n && gcd(c, n) == 1)
        .unwrap_or(1)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModesError {
    #[error("invalid bath configuration: {0}")]
    InvalidConfig(String),
    #[error("the mode solver needs a closed box; the mesh contains PML elements")]
    PmlPresent,
    #[error("ω = {omega} coincides with bath bin ν = {nu}; resample")]
    BinCollision { omega: f64, nu: f64 },
    #[error("metric matrix is not positive definite (row {0})")]
    MetricNotDefinite(usize),
    #[error("eigensolver failed to converge")]
    EigenFailure,
    #[error("η = {eta} is below twice the local mode spacing {spacing} near ω = {omega}")]
    EtaTooSmall { eta: f64, spacing: f64, omega: f64 },
    #[error("ω = {0} lies outside the computed spectrum")]
    OutsideSpectrum(f64),
    #[error("position {0} m is outside the box")]
    OutsideBox(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Bath discretization and closed-box size.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathConfig {
    pub n_bins: usize,
    pub nu_min: f64,
    pub nu_max: f64,
    /// Width of the `sin²` roll-off at each end of the bath band.
    pub taper: f64,
    pub box_length: f64,
    /// Band over which the bath's reactive shift is fitted, and where the
    /// effective susceptibility is expected to reproduce the Lorentz target.
    pub fit_band: (f64, f64),
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            n_bins: 16,
            nu_min: 50.0,
            nu_max: 1200.0,
            taper: 250.0,
            box_length: 10.0 * crate::medium::SLAB_THICKNESS,
            fit_band: (300.0, 700.0),
        }
    }
}

impl BathConfig {
    pub fn validate(&self, medium: &MediumSpec) -> Result<(), ModesError> {
        let fail = |m: String| Err(ModesError::InvalidConfig(m));
        if self.n_bins < 8 {
            return fail(format!("n_bins must be >= 8 (got {})", self.n_bins));
        }
        if !(self.nu_max > medium.omega_0) {
            return fail(format!("nu_max must exceed omega_0 (got {})", self.nu_max));
        }
        if !(self.nu_min >= 0.0 && self.nu_min < self.nu_max) {
            return fail(format!(
                "nu_min must lie in [0, nu_max) (got {})",
                self.nu_min
            ));
        }
        if !(self.taper >= 0.0 && 2.0 * self.taper <= self.nu_max - self.nu_min) {
            return fail(format!(
                "taper must lie in [0, (nu_max - nu_min)/2] (got {})",
                self.taper
            ));
        }
        if !(self.box_length >= 4.0 * medium.thickness()) {
            return fail(format!(
                "box_length must be at least four slab thicknesses (got {})",
                self.box_length
            ));
        }
        let (lo, hi) = self.fit_band;
        if !(lo > self.nu_min && hi < self.nu_max && lo < hi) {
            return fail(format!(
                "fit band ({lo}, {hi}) must lie strictly inside the bath band"
            ));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.nu_max - self.nu_min) / self.n_bins as f64
    }

    /// Band-edge window `w(ν)`.
    pub fn window(&self, nu: f64) -> f64 {
        let (a, b, t) = (self.nu_min, self.nu_max, self.taper);
        if nu <= a || nu >= b {
            return 0.0;
        }
        let ramp = |d: f64| (0.5 * PI * (d / t).clamp(0.0, 1.0)).sin().powi(2);
        if t > 0.0 && nu < a + t {
            ramp(nu - a)
        } else if t > 0.0 && nu > b - t {
            ramp(b - nu)
        } else {
            1.0
        }
    }
}

/// Fitted reactive correction of the truncated bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathDesign {
    pub bin_width: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Largest deviation of the `α + βω²` fit over the calibration band.
    pub fit_residual: f64,
}

impl BathDesign {
    pub fn polarization_mass(&self) -> f64 {
        1.0 + self.beta
    }
}

/// `Re Σ(ω) = −ω² (2γ/π) PV∫ w(ν) / (ν² − ω²) dν`, the continuum reactive shift.
pub fn bath_reactive_shift(bath: &BathConfig, gamma: f64, omega: f64) -> f64 {
    let (a, b) = (bath.nu_min, bath.nu_max);
    // PV∫ f(ν)/(ν−ω) with f = w/(ν+ω): subtract f(ω) to remove the pole
    let f = |nu: f64| bath.window(nu) / (nu + omega);
    let fw = f(omega);
    let g = |nu: f64| {
        let d = nu - omega;
        if d == 0.0 {
            0.0
        } else {
            (f(nu) - fw) / d
        }
    };
    let mut cuts = vec![a, b, omega, a + bath.taper, b - bath.taper];
    cuts.retain(|c| *c >= a && *c <= b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let gl = GaussLegendre::new(16);
    let mut pv = 0.0;
    for w in cuts.windows(2) {
        let panels = (((w[1] - w[0]) / 5.0).ceil() as usize).max(1);
        for p in 0..panels {
            let lo = w[0] + (w[1] - w[0]) * p as f64 / panels as f64;
            let hi = w[0] + (w[1] - w[0]) * (p + 1) as f64 / panels as f64;
            pv += gl.integrate(lo, hi, g);
        }
    }
    pv += fw * ((b - omega) / (omega - a)).ln();
    -omega * omega * 2.0 * gamma / PI * pv
}

/// Least-squares fit of the reactive shift by `α + β ω²` over the calibration band.
pub fn design_bath(bath: &BathConfig, gamma: f64) -> BathDesign {
    let (lo, hi) = bath.fit_band;
    let samples = 81;
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let w = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            (w * w, bath_reactive_shift(bath, gamma, w))
        })
        .collect();
    let n = samples as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let alpha = (sy - beta * sx) / n;
    let fit_residual = pts
        .iter()
        .map(|(x, y)| (alpha + beta * x - y).abs())
        .fold(0.0, f64::max);
    BathDesign {
        bin_width: bath.bin_width(),
        alpha,
        beta,
        fit_residual,
    }
}

/// Matter degrees of freedom attached to one slab element.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabCell {
    pub element: usize,
    pub h: f64,
    /// Index of `Q`; the bath coordinates follow at `q + 1 ..= q + n_bins`.
    pub q: usize,
    pub nus: Vec<f64>,
    pub couplings: Vec<f64>,
}

/// `K` (dense) and `B` (tridiagonal, stored as diagonal + first off-diagonal).
#[derive(Debug, Clone)]
pub struct Gevp {
    pub k: Mat<f64>,
    pub b_diag: Vec<f64>,
    pub b_off: Vec<f64>,
    pub cells: Vec<SlabCell>,
    pub omega_p: f64,
    pub design: Option<BathDesign>,
    pub mesh: Mesh1D,
}

impl Gevp {
    pub fn dim(&self) -> usize {
        self.b_diag.len()
    }

    pub fn n_field(&self) -> usize {
        self.mesh.n_nodes()
    }

    /// `B` as a dense matrix.
    pub fn b_dense(&self) -> Mat<f64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                self.b_diag[i]
            } else if i + 1 == j {
                self.b_off[i]
            } else if j + 1 == i {
                self.b_off[j]
            } else {
                0.0
            }
        })
    }

    fn b_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = (0..n).map(|i| self.b_diag[i] * x[i]).collect();
        for i in 0..n - 1 {
            y[i] += self.b_off[i] * x[i + 1];
            y[i + 1] += self.b_off[i] * x[i];
        }
        y
    }
}

/// Builds the box mesh and the eigenproblem in one step.
pub fn build_box_problem(
    medium: &MediumSpec,
    bath: &BathConfig,
    ppw: f64,
    k_max: f64,
    observation_points: &[f64],
) -> Result<Gevp, ModesError> {
    bath.validate(medium)?;
    let mesh = build_box_mesh(medium, bath.box_length, ppw, k_max, observation_points)?;
    build_gevp(&mesh, medium, bath)
}

pub fn build_gevp(
    mesh: &Mesh1D,
    medium: &MediumSpec,
    bath: &BathConfig,
) -> Result<Gevp, ModesError> {
    if mesh.has_pml() {
        return Err(ModesError::PmlPresent);
    }
    bath.validate(medium)?;
    let nn = mesh.n_nodes();
    let slab: Vec<usize> = if medium.is_vacuum() {
        Vec::new()
    } else {
        mesh.slab_elements().collect()
    };
    let nb = bath.n_bins;
    let dim = nn + slab.len() * (nb + 1);
    let mut k = Mat::<f64>::zeros(dim, dim);
    let mut b_diag = vec![0.0; dim];
    let mut b_off = vec![0.0; dim - 1];

    // field block: stiffness from ½ C'², blended mass from ½ Ċ²
    for e in 0..mesh.n_elements() {
        let (a, bb) = mesh.element(e);
        let h = bb - a;
        k[(e, e)] += 1.0 / h;
        k[(e + 1, e + 1)] += 1.0 / h;
        k[(e, e + 1)] -= 1.0 / h;
        k[(e + 1, e)] -= 1.0 / h;
        b_diag[e] += 5.0 * h / 12.0;
        b_diag[e + 1] += 5.0 * h / 12.0;
        b_off[e] += h / 12.0;
    }

    let design = (!slab.is_empty()).then(|| design_bath(bath, medium.gamma));
    let mut cells = Vec::with_capacity(slab.len());
    if let Some(d) = &design {
        let wp = medium.omega_p;
        let w0 = medium.omega_0;
        let dnu = d.bin_width;
        let ns = slab.len();
        let stride = scramble_stride(ns);
        for (s, &e) in slab.iter().enumerate() {
            let (a, bb) = mesh.element(e);
            let h = bb - a;
            let q = nn + s * (nb + 1);
            // bin offsets are exactly uniform over the slab, in scrambled spatial order
            let phase = (((s * stride) % ns) as f64 + 0.5) / ns as f64;
            let nus: Vec<f64> = (0..nb)
                .map(|j| bath.nu_min + (j as f64 + phase) * dnu)
                .collect();
            let c2: Vec<f64> = nus
                .iter()
                .map(|nu| 2.0 * medium.gamma / PI * nu * nu * dnu * bath.window(*nu))
                .collect();
            let static_shift: f64 = c2.iter().zip(&nus).map(|(c, nu)| c / (nu * nu)).sum();
            k[(e, q)] += wp;
            k[(q, e)] += wp;
            k[(e + 1, q)] -= wp;
            k[(q, e + 1)] -= wp;
            k[(q, q)] = h * (wp * wp + w0 * w0 - d.alpha + static_shift);
            b_diag[q] = h * d.polarization_mass();
            let couplings: Vec<f64> = c2.iter().map(|c| c.sqrt()).collect();
            for j in 0..nb {
                let y = q + 1 + j;
                k[(q, y)] = -h * couplings[j];
                k[(y, q)] = -h * couplings[j];
                k[(y, y)] = h * nus[j] * nus[j];
                b_diag[y] = h;
            }
            cells.push(SlabCell {
                element: e,
                h,
                q,
                nus,
                couplings,
            });
        }
    }
    Ok(Gevp {
        k,
        b_diag,
        b_off,
        cells,
        omega_p: medium.omega_p,
        design,
        mesh: mesh.clone(),
    })
}

/// Susceptibility seen by the field after eliminating polarization and bath at `ω`.
///
/// Each slab element's matter block is reduced by a Schur complement, with the bath
/// evaluated at `ω + iδ`, `δ = 2 Δν / n_slab`: the spread of bin offsets across
/// elements plays the role of the `+i0` limit. The result is the element average.
pub fn effective_susceptibility(gevp: &Gevp, omega: f64) -> Result<Complex64, ModesError> {
    if gevp.cells.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let design = gevp
        .design
        .as_ref()
        .expect("slab cells imply a bath design");
    let delta = 2.0 * design.bin_width / gevp.cells.len() as f64;
    let z2 = Complex64::new(omega, delta).powi(2);
    let wp = gevp.omega_p;
    let mut acc = Complex64::new(0.0, 0.0);
    for cell in &gevp.cells {
        let q = cell.q;
        let h = cell.h;
        let mut self_q = Complex64::from(gevp.k[(q, q)] - omega * omega * gevp.b_diag[q]);
        for (j, nu) in cell.nus.iter().enumerate() {
            if (omega - nu).abs() <= 1e-12 * nu.abs().max(1.0) {
                return Err(ModesError::BinCollision { omega, nu: *nu });
            }
            let y = q + 1 + j;
            let kqy = gevp.k[(q, y)];
            self_q -= kqy * kqy / (gevp.k[(y, y)] - z2 * gevp.b_diag[y]);
        }
        // in the D = C' coordinate: K_DD = h, K_DQ = −ω_p h
        let kappa = h - (wp * h) * (wp * h) / self_q;
        acc += h / kappa - 1.0;
    }
    Ok(acc / gevp.cells.len() as f64)
}

/// Largest `|χ_d − χ| / |χ|` over `count` evenly spaced frequencies in `band`.
pub fn calibration_error(
    gevp: &Gevp,
    medium: &MediumSpec,
    band: (f64, f64),
    count: usize,
) -> Result<f64, ModesError> {
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let w = band.0 + (band.1 - band.0) * i as f64 / (count.max(2) - 1) as f64;
        let target = medium.susceptibility(w);
        let got = effective_susceptibility(gevp, w)?;
        worst = worst.max((got - target).norm() / target.norm());
    }
    Ok(worst)
}

/// Eigenfrequencies and field profiles of the closed system.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Sorted, strictly positive.
    pub frequencies: Vec<f64>,
    /// `Ẽ_m = E_m / ω_m` at every mesh node, one row per mode.
    pub e_fields: Vec<Vec<f64>>,
    pub nodes: Vec<f64>,
    /// `max |v_m^T B v_n − δ_mn|` over the returned modes.
    pub orthonormality_residual: f64,
    /// Largest imaginary part of any eigenvalue relative to the largest eigenvalue.
    /// Zero by construction: the reduced problem is solved as a symmetric one.
    pub spectrum_imag_max: f64,
}

/// Lower-bidiagonal Cholesky factor of the tridiagonal SPD metric.
struct BidiagonalCholesky {
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl BidiagonalCholesky {
    fn new(d: &[f64], off: &[f64]) -> Result<Self, ModesError> {
        let n = d.len();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut v = d[i];
            if i > 0 {
                v -= sub[i - 1] * sub[i - 1];
            }
            if !(v > 0.0) {
                return Err(ModesError::MetricNotDefinite(i));
            }
            diag[i] = v.sqrt();
            if i + 1 < n {
                sub[i] = off[i] / diag[i];
            }
        }
        Ok(Self { diag, sub })
    }

    /// `x ← L⁻¹ x`.
    fn solve_lower(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            if i > 0 {
                x[i] -= self.sub[i - 1] * x[i - 1];
            }
            x[i] /= self.diag[i];
        }
    }

    /// `x ← L⁻ᵀ x`.
    fn solve_upper(&self, x: &mut [f64]) {
        let n = x.len();
        for i in (0..n).rev() {
            if i + 1 < n {
                x[i] -= self.sub[i] * x[i + 1];
            }
            x[i] /= self.diag[i];
        }
    }
}

/// Solves `K v = ω² B v` and returns modes with `ω_m ∈ [band.0, band.1]`.
///
/// The zero-frequency mode (uniform potential) is always dropped.
pub fn diagonalize(gevp: &Gevp, band: (f64, f64)) -> Result<ModeSet, ModesError> {
    let n = gevp.dim();
    let chol = BidiagonalCholesky::new(&gevp.b_diag, &gevp.b_off)?;

    // A = L⁻¹ K L⁻ᵀ, columns first then rows
    let mut a = gevp.k.clone();
    let mut buf = vec![0.0; n];
    for j in 0..n {
        for (i, v) in buf.iter_mut().enumerate() {
            *v = a[(i, j)];
        }
        chol.solve_lower(&mut buf);
        for (i, v) in buf.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    for i in 0..n {
        for (j, v) in buf.iter_mut().enumerate() {
            *v = a[(i, j)];
        }
        chol.solve_lower(&mut buf);
        for (j, v) in buf.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| ModesError::EigenFailure)?;
    drop(a);
    let lambda: Vec<f64> = eig.S().column_vector().iter().copied().collect();
    let lam_max = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let u = eig.U();

    let selected: Vec<usize> = (0..n)
        .filter(|&m| {
            let l = lambda[m];
            if l <= 1e-9 * lam_max {
                return false;
            }
            let w = l.sqrt();
            w >= band.0 && w <= band.1
        })
        .collect();

    let mesh = &gevp.mesh;
    let nn = mesh.n_nodes();
    let ne = mesh.n_elements();
    let mut cell_of = vec![None; ne];
    for c in &gevp.cells {
        cell_of[c.element] = Some(c.q);
    }
    let mut v = Mat::<f64>::zeros(n, selected.len());
    let mut frequencies = Vec::with_capacity(selected.len());
    let mut e_fields = Vec::with_capacity(selected.len());
    let mut elem = vec![0.0; ne];
    for (col, &m) in selected.iter().enumerate() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = u[(i, m)];
        }
        chol.solve_upper(&mut buf);
        for (i, b) in buf.iter().enumerate() {
            v[(i, col)] = *b;
        }
        let w = lambda[m].sqrt();
        for (e, val) in elem.iter_mut().enumerate() {
            let (x0, x1) = mesh.element(e);
            let mut ee = (buf[e + 1] - buf[e]) / (x1 - x0);
            if let Some(q) = cell_of[e] {
                ee -= gevp.omega_p * buf[q];
            }
            *val = ee / w;
        }
        let mut nodal = vec![0.0; nn];
        for i in 1..nn - 1 {
            nodal[i] = 0.5 * (elem[i - 1] + elem[i]);
        }
        frequencies.push(w);
        e_fields.push(nodal);
    }

    let orthonormality_residual = metric_residual(gevp, &v);
    Ok(ModeSet {
        frequencies,
        e_fields,
        nodes: mesh.nodes().to_vec(),
        orthonormality_residual,
        spectrum_imag_max: 0.0,
    })
}

fn metric_residual(gevp: &Gevp, v: &Mat<f64>) -> f64 {
    let n = v.nrows();
    let m = v.ncols();
    if m == 0 {
        return 0.0;
    }
    let mut bv = Mat::<f64>::zeros(n, m);
    let mut col = vec![0.0; n];
    for j in 0..m {
        for (i, c) in col.iter_mut().enumerate() {
            *c = v[(i, j)];
        }
        for (i, y) in gevp.b_mul(&col).into_iter().enumerate() {
            bv[(i, j)] = y;
        }
    }
    let g = v.transpose() * &bv;
    let mut worst: f64 = 0.0;
    for j in 0..m {
        for i in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `Ẽ_m(x)` by linear interpolation between nodes.
    pub fn e_field_at(&self, m: usize, x: f64) -> Result<f64, ModesError> {
        let nodes = &self.nodes;
        let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
        if !(x >= lo && x <= hi) {
            return Err(ModesError::OutsideBox(x));
        }
        let r = nodes.partition_point(|&n| n <= x).clamp(1, nodes.len() - 1);
        let (a, b) = (nodes[r - 1], nodes[r]);
        let t = (x - a) / (b - a);
        let f = &self.e_fields[m];
        Ok(f[r - 1] * (1.0 - t) + f[r] * t)
    }

    /// Gap between the two modes bracketing `ω`.
    pub fn local_spacing(&self, omega: f64) -> Result<f64, ModesError> {
        let f = &self.frequencies;
        let r = f.partition_point(|&w| w <= omega);
        if r == 0 || r == f.len() {
            return Err(ModesError::OutsideSpectrum(omega));
        }
        Ok(f[r] - f[r - 1])
    }

    /// Number of modes with frequency in `[lo, hi)`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.frequencies
            .iter()
            .filter(|&&w| w >= lo && w < hi)
            .count()
    }
}

/// Default Lorentzian width: four vacuum box-mode spacings.
pub fn default_eta(box_length: f64) -> f64 {
    4.0 * PI / box_length
}

/// Lorentzian-smoothed rate, normalized to the free-space rate:
/// `Σ_m η ω_m |Ẽ_m(x_a)|² / ((ω_a − ω_m)² + η²) / ω_a`.
pub fn ser_modes(modes: &ModeSet, x_a: f64, omega_a: f64, eta: f64) -> Result<f64, ModesError> {
    let spacing = modes.local_spacing(omega_a)?;
    if !(eta >= 2.0 * spacing) {
        return Err(ModesError::EtaTooSmall {
            eta,
            spacing,
            omega: omega_a,
        });
    }
    let mut acc = 0.0;
    for (m, &w) in modes.frequencies.iter().enumerate() {
        let e = modes.e_field_at(m, x_a)?;
        acc += eta * w * e * e / ((omega_a - w).powi(2) + eta * eta);
    }
    Ok(acc / omega_a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_bath() -> BathConfig {
        BathConfig {
            n_bins: 8,
            box_length: 0.25,
            ..BathConfig::default()
        }
    }

    #[test]
    fn window_shape() {
        let b = BathConfig::default();
        assert_eq!(b.window(40.0), 0.0);
        assert_eq!(b.window(600.0), 1.0);
        assert!((b.window(50.0 + 125.0) - 0.5).abs() < 1e-12);
        assert!((b.window(1200.0 - 125.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let m = MediumSpec::case1();
        assert!(BathConfig::default().validate(&m).is_ok());
        let bad = BathConfig {
            n_bins: 4,
            ..BathConfig::default()
        };
        assert!(bad.validate(&m).is_err());
        let bad = BathConfig {
            nu_max: 400.0,
            ..BathConfig::default()
        };
        assert!(bad.validate(&m).is_err());
        let bad = BathConfig {
            box_length: 0.1,
            ..BathConfig::default()
        };
        assert!(bad.validate(&m).is_err());
    }

    #[test]
    fn reactive_shift_matches_brute_force() {
        let bath = BathConfig::default();
        let w = 455.0;
        // symmetric midpoint sum straddling the pole approximates the principal value
        let n = 2_300_000;
        let (a, b) = (bath.nu_min, bath.nu_max);
        let dn = (b - a) / n as f64;
        let mut pv = 0.0;
        for i in 0..n {
            let nu = a + (i as f64 + 0.5) * dn;
            pv += bath.window(nu) / (nu * nu - w * w) * dn;
        }
        let brute = -w * w * 2.0 * 50.0 / PI * pv;
        let got = bath_reactive_shift(&bath, 50.0, w);
        assert!(
            (got - brute).abs() < 1e-3 * brute.abs().max(1.0),
            "{got} {brute}"
        );
    }

    #[test]
    fn empty_slab_gives_box_spectrum() {
        let m = MediumSpec::vacuum();
        let bath = small_bath();
        let gevp = build_box_problem(&m, &bath, 20.0, 700.0, &[0.0]).unwrap();
        assert_eq!(gevp.dim(), gevp.n_field());
        assert_eq!(
            effective_susceptibility(&gevp, 400.0).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let modes = diagonalize(&gevp, (0.0, 400.0)).unwrap();
        let l = bath.box_length;
        for (i, w) in modes.frequencies.iter().enumerate() {
            let exact = (i + 1) as f64 * PI / l;
            assert!((w - exact).abs() < 2e-3 * exact, "{i}: {w} vs {exact}");
        }
        assert!(modes.orthonormality_residual < 1e-10);
    }

    #[test]
    fn metric_is_positive_definite() {
        let m = MediumSpec::case1();
        let gevp = build_box_problem(&m, &small_bath(), 10.0, 700.0, &[]).unwrap();
        let eig = gevp
            .b_dense()
            .self_adjoint_eigenvalues(Side::Lower)
            .unwrap();
        assert!(eig[0] > 0.0);
    }

    #[test]
    fn rejects_pml_mesh() {
        use crate::mesh::{build_mesh, PmlSpec};
        let m = MediumSpec::case1();
        let mesh = build_mesh(&m, 0.05, 10.0, 700.0, PmlSpec::for_band(300.0), &[]).unwrap();
        assert!(matches!(
            build_gevp(&mesh, &m, &BathConfig::default()),
            Err(ModesError::PmlPresent)
        ));
    }

    #[test]
    fn effective_susceptibility_limits() {
        let m = MediumSpec::case1();
        let gevp = build_box_problem(&m, &BathConfig::default(), 10.0, 700.0, &[]).unwrap();
        let low = effective_susceptibility(&gevp, 20.0).unwrap();
        assert!((low - Complex64::new(0.04, 0.0)).norm() < 2e-3, "{low}");
        let res = effective_susceptibility(&gevp, 500.0).unwrap();
        assert!(
            (res - Complex64::new(0.0, 0.4)).norm() < 0.02 * 0.4,
            "{res}"
        );
        let nu = gevp.cells[0].nus[3];
        assert!(matches!(
            effective_susceptibility(&gevp, nu),
            Err(ModesError::BinCollision { .. })
        ));
    }

    #[test]
    fn wall_has_no_emission() {
        let m = MediumSpec::vacuum();
        let bath = small_bath();
        let gevp = build_box_problem(&m, &bath, 20.0, 700.0, &[]).unwrap();
        let modes = diagonalize(&gevp, (0.0, f64::INFINITY)).unwrap();
        let eta = default_eta(bath.box_length);
        let wall = modes.nodes[0];
        assert!(ser_modes(&modes, wall, 500.0, eta).unwrap().abs() < 1e-12);
        let mid = ser_modes(&modes, 0.0, 500.0, eta).unwrap();
        assert!((mid - 1.0).abs() < 0.1, "{mid}");
        assert!(matches!(
            ser_modes(&modes, 0.0, 500.0, 1.0),
            Err(ModesError::EtaTooSmall { .. })
        ));
    }
}
