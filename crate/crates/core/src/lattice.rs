//! Unit system, lattice configuration and the driven lattice potential.
//!
//! Everything inside the crate runs in natural units with ħ = m = k = 1.
//! Depths are quoted externally in units of ħω, where ω = √(2V₀) is the
//! harmonic frequency of a single well, and times in units of ω⁻¹.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Atomic mass unit in kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Recoil energy ħ²k²/2m in natural units.
pub const RECOIL_ENERGY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Species {
    Cs133,
    Rb87,
    K40,
    Na23,
}

impl Species {
    pub fn mass_kg(self) -> f64 {
        let amu = match self {
            Species::Cs133 => 132.905_451_961,
            Species::Rb87 => 86.909_180_527,
            Species::K40 => 39.963_998_166,
            Species::Na23 => 22.989_769_282,
        };
        amu * ATOMIC_MASS_UNIT
    }
}

impl std::str::FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "cs133" | "133cs" | "cs" => Ok(Species::Cs133),
            "rb87" | "87rb" | "rb" => Ok(Species::Rb87),
            "k40" | "40k" => Ok(Species::K40),
            "na23" | "23na" | "na" => Ok(Species::Na23),
            _ => Err(Error::UnknownSpecies(s.to_string())),
        }
    }
}

/// Data needed to convert natural units to SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabUnits {
    pub wavelength_m: f64,
    pub atom_mass_kg: f64,
}

impl LabUnits {
    pub fn new(wavelength_nm: f64, species: Species) -> Self {
        Self {
            wavelength_m: wavelength_nm * 1e-9,
            atom_mass_kg: species.mass_kg(),
        }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength_m
    }

    /// SI angular frequency corresponding to one natural unit (ħk²/m).
    pub fn frequency_unit(&self) -> f64 {
        HBAR_SI * self.wavenumber().powi(2) / self.atom_mass_kg
    }
}

/// Lattice and atom parameters in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Depth in units of ħω.
    pub v: f64,
    /// Depth V₀ in natural units.
    pub v0: f64,
    /// Harmonic frequency ω = √(2V₀).
    pub omega: f64,
    /// Primary lattice wavenumber.
    pub k: f64,
    /// Rotated lattice wavenumber, √2·k.
    pub k_s: f64,
    /// Lattice constant λ/4.
    pub ell: f64,
    pub lab: Option<LabUnits>,
}

impl LatticeConfig {
    /// Builds the configuration for a depth `v` given in units of ħω.
    ///
    /// With ħ = m = k = 1 the self-consistency V₀ = v·ω, ω = √(2V₀) gives
    /// V₀ = 2v² and ω = 2v.
    pub fn from_depth(v: f64) -> Result<Self> {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lattice depth must be positive, got {v}"
            )));
        }
        let v0 = 2.0 * v * v;
        Ok(Self {
            v,
            v0,
            omega: (2.0 * v0).sqrt(),
            k: 1.0,
            k_s: SQRT_2,
            ell: FRAC_PI_2,
            lab: None,
        })
    }

    pub fn with_lab(mut self, lab: LabUnits) -> Self {
        self.lab = Some(lab);
        self
    }

    /// Converts a time given in units of ω⁻¹ into natural units.
    pub fn time_from_omega_units(&self, t: f64) -> f64 {
        t / self.omega
    }

    pub fn time_to_omega_units(&self, t: f64) -> f64 {
        t * self.omega
    }

    /// Lattice period 2ℓ.
    pub fn period(&self) -> f64 {
        2.0 * self.ell
    }

    pub fn depth_in_recoils(&self) -> f64 {
        self.v0 / RECOIL_ENERGY
    }
}

/// Time-dependent lattice amplitudes: the primary x-amplitude modulation
/// f_x(t) and the rotated-lattice amplitude V_c(t).
pub trait Drive: Sync {
    fn f_x(&self, t: f64) -> f64;

    fn v_c(&self, t: f64) -> f64;

    /// ∫₀ᵗ f_x(s) ds.
    fn f_x_integral(&self, t: f64) -> f64;

    /// ∫₀ᵗ V_c(s) ds.
    fn v_c_integral(&self, t: f64) -> f64;

    /// Slowly varying envelope g_x(t) of f_x(t) = g_x(t)cos(ω_x t).
    fn envelope_x(&self, t: f64) -> f64;

    /// Carrier frequency ω_x of the amplitude modulation.
    fn carrier(&self) -> f64;
}

/// The unperturbed lattice: no modulation and no rotated lattice.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaticLattice;

impl Drive for StaticLattice {
    fn f_x(&self, _t: f64) -> f64 {
        0.0
    }
    fn v_c(&self, _t: f64) -> f64 {
        0.0
    }
    fn f_x_integral(&self, _t: f64) -> f64 {
        0.0
    }
    fn v_c_integral(&self, _t: f64) -> f64 {
        0.0
    }
    fn envelope_x(&self, _t: f64) -> f64 {
        0.0
    }
    fn carrier(&self) -> f64 {
        0.0
    }
}

/// Lattice potential with the global +V_c(t) offset dropped:
/// [V₀ + f_x(t)]sin²(kx) + V₀sin²(ky) − V_c(t)cos(2kx)cos(2ky).
pub fn potential(x: f64, y: f64, t: f64, config: &LatticeConfig, drive: &dyn Drive) -> f64 {
    let k = config.k;
    let sx = (k * x).sin();
    let sy = (k * y).sin();
    (config.v0 + drive.f_x(t)) * sx * sx + config.v0 * sy * sy
        - drive.v_c(t) * (2.0 * k * x).cos() * (2.0 * k * y).cos()
}

/// Natural-unit quantities expressed in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabReport {
    /// Harmonic trap frequency ω in rad/s.
    pub omega_rad_s: f64,
    /// Drive frequency ω_d/2π in Hz.
    pub f_drive_hz: f64,
    /// Total operation time in ms.
    pub t_ms: f64,
    pub depth_in_recoils: f64,
    /// Recoil energy E_r/h in Hz.
    pub recoil_hz: f64,
}

impl LabReport {
    /// Inverse conversion, returning (ω_d, T) in natural units.
    pub fn to_natural(&self, config: &LatticeConfig) -> Result<(f64, f64)> {
        let lab = config.lab.ok_or(Error::MissingLabData)?;
        let unit = lab.frequency_unit();
        let omega_d = self.f_drive_hz * 2.0 * PI / unit;
        let t_total = self.t_ms * 1e-3 * unit;
        Ok((omega_d, t_total))
    }
}

/// Converts the resonance frequency and the operation time (both in natural
/// units) to laboratory units.
pub fn to_experimental(config: &LatticeConfig, omega_d: f64, t_total: f64) -> Result<LabReport> {
    let lab = config.lab.ok_or(Error::MissingLabData)?;
    let unit = lab.frequency_unit();
    Ok(LabReport {
        omega_rad_s: config.omega * unit,
        f_drive_hz: omega_d * unit / (2.0 * PI),
        t_ms: t_total / unit * 1e3,
        depth_in_recoils: config.depth_in_recoils(),
        recoil_hz: RECOIL_ENERGY * unit / (2.0 * PI),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed {
        f: f64,
        c: f64,
    }

    impl Drive for Fixed {
        fn f_x(&self, _t: f64) -> f64 {
            self.f
        }
        fn v_c(&self, _t: f64) -> f64 {
            self.c
        }
        fn f_x_integral(&self, t: f64) -> f64 {
            self.f * t
        }
        fn v_c_integral(&self, t: f64) -> f64 {
            self.c * t
        }
        fn envelope_x(&self, _t: f64) -> f64 {
            self.f
        }
        fn carrier(&self) -> f64 {
            0.0
        }
    }

    #[test]
    fn derive_units_examples() {
        let c = LatticeConfig::from_depth(3.0).unwrap();
        assert_eq!(c.v0, 18.0);
        assert_eq!(c.omega, 6.0);
        assert_eq!(c.ell, FRAC_PI_2);
        assert_eq!(c.k_s, SQRT_2 * c.k);

        let c = LatticeConfig::from_depth(3.5).unwrap();
        assert_eq!(c.v0, 24.5);
        assert_eq!(c.omega, 7.0);
        assert_eq!(c.depth_in_recoils(), 49.0);
    }

    #[test]
    fn nonpositive_depth_rejected() {
        assert!(matches!(
            LatticeConfig::from_depth(0.0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(LatticeConfig::from_depth(-1.0).is_err());
        assert!(LatticeConfig::from_depth(f64::NAN).is_err());
    }

    #[test]
    fn potential_at_special_points() {
        let c = LatticeConfig::from_depth(3.0).unwrap();
        assert_eq!(potential(0.0, 0.0, 0.0, &c, &StaticLattice), 0.0);
        let v = potential(c.ell, 0.0, 0.0, &c, &StaticLattice);
        assert!((v - c.v0).abs() < 1e-12);
    }

    #[test]
    fn species_parsing() {
        assert_eq!("Cs133".parse::<Species>().unwrap(), Species::Cs133);
        assert_eq!("133Cs".parse::<Species>().unwrap(), Species::Cs133);
        assert!("Xe".parse::<Species>().is_err());
    }

    #[test]
    fn lab_conversion_needs_lab_data() {
        let c = LatticeConfig::from_depth(3.5).unwrap();
        assert!(matches!(
            to_experimental(&c, 12.0, 70.0),
            Err(Error::MissingLabData)
        ));
    }

    #[test]
    fn lab_round_trip() {
        let c = LatticeConfig::from_depth(3.5)
            .unwrap()
            .with_lab(LabUnits::new(1064.0, Species::Cs133));
        let (wd, t) = (12.25, 500.0 / c.omega);
        let report = to_experimental(&c, wd, t).unwrap();
        let (wd2, t2) = report.to_natural(&c).unwrap();
        assert!(((wd2 - wd) / wd).abs() < 1e-12);
        assert!(((t2 - t) / t).abs() < 1e-12);
    }

    #[test]
    fn cesium_operation_time() {
        let c = LatticeConfig::from_depth(3.5)
            .unwrap()
            .with_lab(LabUnits::new(1064.0, Species::Cs133));
        let r = to_experimental(&c, 2.0 * c.omega, c.time_from_omega_units(500.0)).unwrap();
        assert!((r.t_ms - 4.3).abs() / 4.3 < 0.1, "T = {} ms", r.t_ms);
        assert_eq!(r.depth_in_recoils, 49.0);
    }

    #[test]
    fn drive_enters_potential() {
        let c = LatticeConfig::from_depth(2.0).unwrap();
        let d = Fixed { f: 1.5, c: 0.7 };
        let (x, y) = (0.3f64, -0.4f64);
        let expect = (c.v0 + 1.5) * x.sin().powi(2) + c.v0 * y.sin().powi(2)
            - 0.7 * (2.0 * x).cos() * (2.0 * y).cos();
        assert!((potential(x, y, 1.0, &c, &d) - expect).abs() < 1e-13);
    }
}
