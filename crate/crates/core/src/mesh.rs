//! One-dimensional grids: an open domain terminated by PMLs, and a closed box.
//!
//! Every element carries a region tag. Slab faces, PML faces, reflection/transmission
//! probe points and any requested observation points are placed exactly on nodes, so
//! point sources and point evaluations never need interpolation at those positions.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

use crate::medium::MediumSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("points per wavelength must be at least 10 (got {0})")]
    PpwTooSmall(f64),
    #[error("invalid mesh parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("observation point {0} m lies inside the PML")]
    ObservationInPml(f64),
    #[error("observation point {0} m lies outside the computational domain")]
    ObservationOutside(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    PmlLeft,
    Vacuum,
    Slab,
    PmlRight,
}

impl Region {
    pub fn is_pml(self) -> bool {
        matches!(self, Region::PmlLeft | Region::PmlRight)
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::PmlLeft => "PML_LEFT",
            Region::Vacuum => "VACUUM",
            Region::Slab => "SLAB",
            Region::PmlRight => "PML_RIGHT",
        }
    }
}

/// Polynomially graded PML, identical on both sides.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PmlSpec {
    pub thickness: f64,
    pub order: f64,
    pub target_reflection: f64,
}

impl PmlSpec {
    pub fn new(thickness: f64, order: f64, target_reflection: f64) -> Result<Self, MeshError> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(MeshError::InvalidParameter {
                name: "pml.thickness",
                value: thickness,
            });
        }
        if !(order >= 1.0 && order.is_finite()) {
            return Err(MeshError::InvalidParameter {
                name: "pml.order",
                value: order,
            });
        }
        if !(target_reflection > 0.0 && target_reflection < 1.0) {
            return Err(MeshError::InvalidParameter {
                name: "pml.target_reflection",
                value: target_reflection,
            });
        }
        Ok(Self {
            thickness,
            order,
            target_reflection,
        })
    }

    /// Cubic grading, `R_0 = 1e-10`, two wavelengths thick at `k_min`.
    pub fn for_band(k_min: f64) -> Self {
        Self {
            thickness: 2.0 * 2.0 * PI / k_min,
            order: 3.0,
            target_reflection: 1e-10,
        }
    }

    pub fn sigma_max(&self) -> f64 {
        (self.order + 1.0) * (1.0 / self.target_reflection).ln() / (2.0 * self.thickness)
    }

    /// `s = 1 + (i/k) σ_max (depth/d)^m`, with depth clamped to `[0, d]`.
    pub fn stretch(&self, depth: f64, k: f64) -> Complex64 {
        let t = (depth / self.thickness).clamp(0.0, 1.0);
        Complex64::new(1.0, self.sigma_max() * t.powf(self.order) / k)
    }
}

/// Sorted node list with per-element region tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    regions: Vec<Region>,
    pml: Option<PmlSpec>,
    pml_inner: f64,
    slab_half_length: f64,
    probes: Option<(f64, f64)>,
    target_h: f64,
}

/// Default vacuum gap between the slab faces and the PML: one slab thickness
/// plus two wavelengths at the low end of the band.
pub fn default_padding(medium: &MediumSpec, k_min: f64) -> f64 {
    medium.thickness() + 2.0 * 2.0 * PI / k_min
}

/// Builds the open-domain mesh `[-(a+p+d), a+p+d]` with `a` the slab half-length,
/// `p` the padding and `d` the PML thickness.
///
/// The element size is `2π / (k_max · ppw · n_max)`, where `n_max` is the peak real
/// refractive index of the slab up to `k_max`. A reflection/transmission probe is
/// added at the middle of each vacuum gap.
pub fn build_mesh(
    medium: &MediumSpec,
    padding: f64,
    ppw: f64,
    k_max: f64,
    pml: PmlSpec,
    observation_points: &[f64],
) -> Result<Mesh1D, MeshError> {
    check_resolution(ppw, k_max)?;
    if !(padding > 0.0 && padding.is_finite()) {
        return Err(MeshError::InvalidParameter {
            name: "padding",
            value: padding,
        });
    }
    let a = medium.slab_half_length;
    let inner = a + padding;
    let outer = inner + pml.thickness;
    for &x in observation_points {
        if !x.is_finite() || x.abs() > outer {
            return Err(MeshError::ObservationOutside(x));
        }
        if x.abs() > inner {
            return Err(MeshError::ObservationInPml(x));
        }
    }
    let probe = a + 0.5 * padding;
    let mut breaks = vec![-outer, -inner, -probe, -a, a, probe, inner, outer];
    breaks.extend_from_slice(observation_points);
    let h = 2.0 * PI / (k_max * ppw * medium.peak_index(k_max));
    let nodes = subdivide(breaks, h);
    let regions = classify(&nodes, a, inner);
    Ok(Mesh1D {
        nodes,
        regions,
        pml: Some(pml),
        pml_inner: inner,
        slab_half_length: a,
        probes: Some((-probe, probe)),
        target_h: h,
    })
}

/// Closed box `[-L/2, L/2]` without PML, used by the Hermitian mode solver.
/// Element size is `2π / (k_max · ppw)`.
pub fn build_box_mesh(
    medium: &MediumSpec,
    box_length: f64,
    ppw: f64,
    k_max: f64,
    observation_points: &[f64],
) -> Result<Mesh1D, MeshError> {
    check_resolution(ppw, k_max)?;
    let a = medium.slab_half_length;
    if !(box_length > 2.0 * a && box_length.is_finite()) {
        return Err(MeshError::InvalidParameter {
            name: "box_length",
            value: box_length,
        });
    }
    let wall = 0.5 * box_length;
    for &x in observation_points {
        if !x.is_finite() || x.abs() > wall {
            return Err(MeshError::ObservationOutside(x));
        }
    }
    let mut breaks = vec![-wall, -a, a, wall];
    breaks.extend_from_slice(observation_points);
    let h = 2.0 * PI / (k_max * ppw);
    let nodes = subdivide(breaks, h);
    let regions = classify(&nodes, a, f64::INFINITY);
    Ok(Mesh1D {
        nodes,
        regions,
        pml: None,
        pml_inner: wall,
        slab_half_length: a,
        probes: None,
        target_h: h,
    })
}

fn check_resolution(ppw: f64, k_max: f64) -> Result<(), MeshError> {
    if !(ppw >= 10.0) || !ppw.is_finite() {
        return Err(MeshError::PpwTooSmall(ppw));
    }
    if !(k_max > 0.0 && k_max.is_finite()) {
        return Err(MeshError::InvalidParameter {
            name: "k_max",
            value: k_max,
        });
    }
    Ok(())
}

fn subdivide(mut breaks: Vec<f64>, h: f64) -> Vec<f64> {
    breaks.sort_by(f64::total_cmp);
    let span = breaks[breaks.len() - 1] - breaks[0];
    breaks.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * span);
    let mut nodes = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
        for i in 1..n {
            nodes.push(a + (b - a) * i as f64 / n as f64);
        }
        nodes.push(b);
    }
    nodes
}

fn classify(nodes: &[f64], a: f64, inner: f64) -> Vec<Region> {
    nodes
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            if mid.abs() < a {
                Region::Slab
            } else if mid < -inner {
                Region::PmlLeft
            } else if mid > inner {
                Region::PmlRight
            } else {
                Region::Vacuum
            }
        })
        .collect()
}

impl Mesh1D {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.regions.len()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, e: usize) -> Region {
        self.regions[e]
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn pml(&self) -> Option<&PmlSpec> {
        self.pml.as_ref()
    }

    pub fn has_pml(&self) -> bool {
        self.pml.is_some()
    }

    /// Position of the inner PML faces (`±pml_inner`); the wall position for a box.
    pub fn pml_inner(&self) -> f64 {
        self.pml_inner
    }

    pub fn slab_half_length(&self) -> f64 {
        self.slab_half_length
    }

    /// Left and right reflection/transmission probe nodes (open meshes only).
    pub fn probes(&self) -> Option<(f64, f64)> {
        self.probes
    }

    pub fn lower(&self) -> f64 {
        self.nodes[0]
    }

    pub fn upper(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Target element size the mesh was built for.
    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    pub fn max_element_length(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn slab_elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == Region::Slab)
            .map(|(e, _)| e)
    }

    pub fn count_region(&self, region: Region) -> usize {
        self.regions.iter().filter(|r| **r == region).count()
    }

    pub fn in_pml(&self, x: f64) -> bool {
        self.pml.is_some() && x.abs() > self.pml_inner
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower() && x <= self.upper()
    }

    /// Element containing `x` and the local coordinate `t ∈ [0, 1]` within it.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !self.contains(x) {
            return None;
        }
        let right = self.nodes.partition_point(|&n| n <= x);
        let e = right.saturating_sub(1).min(self.n_elements() - 1);
        let (a, b) = self.element(e);
        Some((e, ((x - a) / (b - a)).clamp(0.0, 1.0)))
    }

    /// Index of the node located at `x`, if any.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let tol = 1e-12 * (self.upper() - self.lower());
        let i = self.nodes.partition_point(|&n| n < x - tol);
        (i < self.nodes.len() && (self.nodes[i] - x).abs() <= tol).then_some(i)
    }

    /// Region tag of a node: that of the element on its right (the last node takes
    /// the last element's tag).
    pub fn node_region(&self, i: usize) -> Region {
        self.regions[i.min(self.n_elements() - 1)]
    }

    /// PML stretch factor at `x`; exactly 1 outside the PML and on closed meshes.
    pub fn stretch_factor(&self, x: f64, k: f64) -> Complex64 {
        match &self.pml {
            Some(pml) if x.abs() > self.pml_inner => pml.stretch(x.abs() - self.pml_inner, k),
            _ => Complex64::new(1.0, 0.0),
        }
    }

    /// Writes `node,x,region` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node,x,region")?;
        for (i, x) in self.nodes.iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                i,
                crate::output::format_e12(*x),
                self.node_region(i).label()
            )?;
        }
        Ok(())
    }
}
