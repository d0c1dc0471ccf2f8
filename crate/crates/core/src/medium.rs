//! Dispersive lossy slab: single-pole Lorentz susceptibility on a closed interval.
//!
//! All frequencies are normalized wavenumbers `k = ω/c` in rad/m (so "ω = 500c" is
//! the number `500.0`); lengths are meters. The time convention is `e^{-iωt}`, under
//! which a passive medium has `Im χ ≥ 0`.

use num_complex::Complex64;
use thiserror::Error;

/// Slab thickness used throughout the reference scenarios, in meters.
pub const SLAB_THICKNESS: f64 = 0.0625;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediumError {
    #[error("invalid medium parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Lorentz-oscillator slab occupying `[-slab_half_length, +slab_half_length]`.
///
/// `omega_p = 0` is accepted and denotes an empty slab (vacuum everywhere).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MediumSpec {
    pub omega_p: f64,
    pub omega_0: f64,
    pub gamma: f64,
    pub slab_half_length: f64,
}

impl MediumSpec {
    pub fn new(
        omega_p: f64,
        omega_0: f64,
        gamma: f64,
        slab_half_length: f64,
    ) -> Result<Self, MediumError> {
        let check = |name, value: f64, ok: bool, reason| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(MediumError::InvalidParameter {
                    name,
                    value,
                    reason,
                })
            }
        };
        check("omega_p", omega_p, omega_p >= 0.0, "must be >= 0")?;
        check("omega_0", omega_0, omega_0 > 0.0, "must be > 0")?;
        check("gamma", gamma, gamma >= 0.0, "must be >= 0")?;
        check(
            "slab_half_length",
            slab_half_length,
            slab_half_length > 0.0,
            "must be > 0",
        )?;
        Ok(Self {
            omega_p,
            omega_0,
            gamma,
            slab_half_length,
        })
    }

    /// High-loss reference slab (`γ = 50`).
    pub fn case1() -> Self {
        Self {
            omega_p: 100.0,
            omega_0: 500.0,
            gamma: 50.0,
            slab_half_length: SLAB_THICKNESS / 2.0,
        }
    }

    /// Low-loss reference slab (`γ = 5`).
    pub fn case2() -> Self {
        Self {
            gamma: 5.0,
            ..Self::case1()
        }
    }

    /// Same geometry as the reference slab, but with no polarizable matter.
    pub fn vacuum() -> Self {
        Self {
            omega_p: 0.0,
            ..Self::case1()
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.omega_p == 0.0
    }

    pub fn thickness(&self) -> f64 {
        2.0 * self.slab_half_length
    }

    /// Closed-interval membership: the faces belong to the slab.
    pub fn in_slab(&self, x: f64) -> bool {
        x.abs() <= self.slab_half_length
    }

    /// `χ(ω) = ω_p² / (ω_0² − ω² − iωγ)`.
    ///
    /// Also valid for negative `omega`, where it returns `conj(χ(|ω|))`.
    pub fn susceptibility(&self, omega: f64) -> Complex64 {
        let den = Complex64::new(
            self.omega_0 * self.omega_0 - omega * omega,
            -omega * self.gamma,
        );
        Complex64::from(self.omega_p * self.omega_p) / den
    }

    /// Susceptibility at a point: `χ(ω)` inside the slab, zero elsewhere.
    pub fn susceptibility_at(&self, x: f64, omega: f64) -> Complex64 {
        if self.in_slab(x) {
            self.susceptibility(omega)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn relative_permittivity(&self, x: f64, omega: f64) -> Complex64 {
        Complex64::new(1.0, 0.0) + self.susceptibility_at(x, omega)
    }

    /// Slab refractive index, principal branch (`Im n ≥ 0` for a passive slab).
    pub fn slab_index(&self, omega: f64) -> Complex64 {
        (Complex64::new(1.0, 0.0) + self.susceptibility(omega)).sqrt()
    }

    /// Largest `Re n` over `(0, k_max]`, never below 1. Used to size mesh elements.
    pub fn peak_index(&self, k_max: f64) -> f64 {
        const SAMPLES: usize = 4000;
        let mut best: f64 = 1.0;
        for i in 1..=SAMPLES {
            let w = k_max * i as f64 / SAMPLES as f64;
            best = best.max(self.slab_index(w).re);
        }
        if self.omega_0 <= k_max {
            // the peak of Re n sits just below resonance; refine around it
            let width = self.gamma.max(1e-3 * self.omega_0) * 4.0;
            let lo = (self.omega_0 - width).max(k_max * 1e-6);
            let hi = self.omega_0.min(k_max);
            for i in 0..=SAMPLES {
                let w = lo + (hi - lo) * i as f64 / SAMPLES as f64;
                best = best.max(self.slab_index(w).re);
            }
        }
        best
    }
}
