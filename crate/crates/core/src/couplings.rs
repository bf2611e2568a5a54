//! Overlap coefficients and phase factors connecting the lattice drive to
//! the four-level model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::Drive;
use crate::spectral::EigenBasis1D;

/// Overlaps of the site states Γ₀, Γ₂ with the drive profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    /// ∫Γ₀² sin²(kx)
    pub alpha0: f64,
    /// ∫Γ₂² sin²(kx)
    pub alpha2: f64,
    /// ∫Γ₀² cos(2kx)
    pub beta0: f64,
    /// ∫Γ₂² cos(2kx)
    pub beta2: f64,
    /// ∫Γ₀ cos(2kx) Γ₂, the off-diagonal rotated-lattice element.
    pub cos02: f64,
    /// ∫Γ₀ sin²(kx) Γ₂
    pub gamma0: f64,
    /// cos02²
    pub gamma1: f64,
    /// beta0 · cos02
    pub gamma2: f64,
    /// cos02 · beta2
    pub gamma3: f64,
    /// (α₀ − α₂)/(ħω_d), natural units.
    pub a02: f64,
    pub omega_d: f64,
}

pub fn compute_overlaps(basis: &EigenBasis1D) -> CouplingSet {
    let sin2 = |x: f64| x.sin().powi(2);
    let cos2 = |x: f64| (2.0 * x).cos();
    let alpha0 = basis.matrix_element(0, 0, sin2);
    let alpha2 = basis.matrix_element(2, 2, sin2);
    let beta0 = basis.matrix_element(0, 0, cos2);
    let beta2 = basis.matrix_element(2, 2, cos2);
    let cos02 = basis.matrix_element(0, 2, cos2);
    let gamma0 = basis.matrix_element(0, 2, sin2);
    CouplingSet {
        alpha0,
        alpha2,
        beta0,
        beta2,
        cos02,
        gamma0,
        gamma1: cos02 * cos02,
        gamma2: beta0 * cos02,
        gamma3: cos02 * beta2,
        a02: (alpha0 - alpha2) / basis.omega_d,
        omega_d: basis.omega_d,
    }
}

impl CouplingSet {
    /// αₙ for n ∈ {0, 2}.
    pub fn alpha(&self, n: usize) -> f64 {
        match n {
            0 => self.alpha0,
            2 => self.alpha2,
            _ => panic!("alpha defined for n ∈ {{0, 2}}, got {n}"),
        }
    }

    /// βₙ for n ∈ {0, 2}.
    pub fn beta(&self, n: usize) -> f64 {
        match n {
            0 => self.beta0,
            2 => self.beta2,
            _ => panic!("beta defined for n ∈ {{0, 2}}, got {n}"),
        }
    }

    /// Phase-rate diagnostic |(β_pβ_q − β_nβ_m)·V_c,max| / ω_d for a G factor.
    pub fn g_rate_ratio(&self, indices: [usize; 4], v_c_max: f64) -> f64 {
        let [n, m, p, q] = indices;
        let d = self.beta(p) * self.beta(q) - self.beta(n) * self.beta(m);
        (d * v_c_max).abs() / self.omega_d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiMode {
    /// Closed-form integrals of the drive.
    Exact,
    /// ∫f_x ≈ g_x(t) sin(ω_d t)/ω_d.
    SlowEnvelope,
}

/// χₙ,ₘ(t) = exp{−i[αₙ∫₀ᵗf_x − βₙβₘ∫₀ᵗV_c]}.
pub fn chi_phase(n: usize, m: usize, drive: &dyn Drive, c: &CouplingSet, t: f64, mode: ChiMode) -> Complex64 {
    let fx = match mode {
        ChiMode::Exact => drive.f_x_integral(t),
        ChiMode::SlowEnvelope => drive.envelope_x(t) * (c.omega_d * t).sin() / c.omega_d,
    };
    let phase = c.alpha(n) * fx - c.beta(n) * c.beta(m) * drive.v_c_integral(t);
    Complex64::from_polar(1.0, -phase)
}

/// χ̃ₙ,ₘ,ₚ,q(t) = χₙ,ₘ*(t) χₚ,q(t).
pub fn chi_tilde(indices: [usize; 4], drive: &dyn Drive, c: &CouplingSet, t: f64, mode: ChiMode) -> Complex64 {
    let [n, m, p, q] = indices;
    chi_phase(n, m, drive, c, t, mode).conj() * chi_phase(p, q, drive, c, t, mode)
}

/// Gₙ,ₘ,ₚ,q(t) = exp[i(βₚβq − βₙβₘ)∫₀ᵗV_c].
pub fn g_factor(indices: [usize; 4], drive: &dyn Drive, c: &CouplingSet, t: f64) -> Complex64 {
    let [n, m, p, q] = indices;
    let d = c.beta(p) * c.beta(q) - c.beta(n) * c.beta(m);
    Complex64::from_polar(1.0, d * drive.v_c_integral(t))
}

/// Truncation diagnostics of the Jacobi–Anger reduction at argument A₀₂·g_max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiAngerCheck {
    pub j0_deficit: f64,
    pub j1_mag: f64,
    pub j2_mag: f64,
}

impl JacobiAngerCheck {
    pub fn max(&self) -> f64 {
        self.j0_deficit.max(self.j1_mag).max(self.j2_mag)
    }
}

pub fn jacobi_anger_check(a02: f64, g_max: f64) -> JacobiAngerCheck {
    let z = a02 * g_max;
    JacobiAngerCheck {
        j0_deficit: 1.0 - libm::j0(z),
        j1_mag: libm::j1(z).abs(),
        j2_mag: libm::jn(2, z).abs(),
    }
}
