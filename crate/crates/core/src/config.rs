//! TOML run configuration.
//!
//! ```toml
//! depth_hbar_omega = 3.0
//! grid_n = 128
//! total_time = 750.0      # ω⁻¹
//! switch_fraction = 0.25
//! drive_detuning = 0.0    # (ω_x − ω_d)/ω
//!
//! [lab]
//! wavelength_nm = 1064.0
//! species = "Cs133"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LabUnits, LatticeConfig, Species};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// Reference numbers are asserted.
    Acceptance,
    /// Reduced grid and duration; reference checks are reported only.
    Smoke,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Rwa,
    PreRwa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabSection {
    pub wavelength_nm: f64,
    pub species: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub ts_fractions: Vec<f64>,
    pub depths: Vec<f64>,
    pub total_times: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            ts_fractions: vec![0.1, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.75, 0.9],
            depths: vec![2.5, 3.0, 4.0],
            total_times: vec![200.0, 300.0, 400.0, 500.0, 750.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonanceSection {
    pub detuning_min: f64,
    pub detuning_max: f64,
    pub steps: usize,
}

impl Default for ResonanceSection {
    fn default() -> Self {
        Self {
            detuning_min: -0.03,
            detuning_max: 0.03,
            steps: 31,
        }
    }
}

impl ResonanceSection {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps.max(2);
        (0..n)
            .map(|i| self.detuning_min + (self.detuning_max - self.detuning_min) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TunnelingSection {
    pub cells: usize,
    /// ω⁻¹
    pub horizon: f64,
}

impl Default for TunnelingSection {
    fn default() -> Self {
        Self {
            cells: 3,
            horizon: 3000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub depth_hbar_omega: f64,
    pub grid_n: usize,
    /// ω⁻¹
    pub total_time: f64,
    pub switch_fraction: f64,
    /// (ω_x − ω_d)/ω
    pub drive_detuning: f64,
    /// ω_d·dt of the 2D solver.
    pub dt_factor: f64,
    /// Number of output intervals along a trajectory.
    pub samples: usize,
    pub profile: ProfileKind,
    pub model: ModelChoice,
    pub lab: Option<LabSection>,
    pub sweep: SweepSection,
    pub resonance: ResonanceSection,
    pub tunneling: TunnelingSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            depth_hbar_omega: 3.0,
            grid_n: 128,
            total_time: 750.0,
            switch_fraction: 0.25,
            drive_detuning: 0.0,
            dt_factor: 0.05,
            samples: 150,
            profile: ProfileKind::Acceptance,
            model: ModelChoice::Rwa,
            lab: None,
            sweep: SweepSection::default(),
            resonance: ResonanceSection::default(),
            tunneling: TunnelingSection::default(),
        }
    }
}

impl RunConfig {
    /// Reduced settings for quick end-to-end runs.
    pub fn smoke() -> Self {
        Self {
            grid_n: 64,
            total_time: 200.0,
            samples: 40,
            profile: ProfileKind::Smoke,
            sweep: SweepSection {
                ts_fractions: vec![0.25, 0.5],
                depths: vec![3.0],
                total_times: vec![100.0, 200.0],
            },
            resonance: ResonanceSection {
                detuning_min: -0.05,
                detuning_max: 0.05,
                steps: 7,
            },
            tunneling: TunnelingSection {
                cells: 3,
                horizon: 1500.0,
            },
            ..Self::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.depth_hbar_omega > 0.0) {
            return bad(format!("depth_hbar_omega must be positive, got {}", self.depth_hbar_omega));
        }
        if self.grid_n < 64 || !self.grid_n.is_power_of_two() {
            return bad(format!("grid_n must be a power of two ≥ 64, got {}", self.grid_n));
        }
        if !(self.total_time > 0.0) {
            return bad(format!("total_time must be positive, got {}", self.total_time));
        }
        if !(self.switch_fraction > 0.0 && self.switch_fraction < 1.0) {
            return bad(format!("switch_fraction must lie in (0, 1), got {}", self.switch_fraction));
        }
        if !self.drive_detuning.is_finite() {
            return bad("drive_detuning must be finite".into());
        }
        if !(self.dt_factor > 0.0) {
            return bad(format!("dt_factor must be positive, got {}", self.dt_factor));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if let Some(lab) = &self.lab {
            lab.species.parse::<Species>()?;
            if !(lab.wavelength_nm > 0.0) {
                return bad(format!("lab.wavelength_nm must be positive, got {}", lab.wavelength_nm));
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<LatticeConfig> {
        self.lattice_at(self.depth_hbar_omega)
    }

    pub fn lattice_at(&self, v: f64) -> Result<LatticeConfig> {
        let mut c = LatticeConfig::from_depth(v)?;
        if let Some(lab) = &self.lab {
            c = c.with_lab(LabUnits::new(lab.wavelength_nm, lab.species.parse()?));
        }
        Ok(c)
    }

    pub fn enforce_reference_checks(&self) -> bool {
        self.profile == ProfileKind::Acceptance
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let cfg = RunConfig::from_toml_str(
            r#"
            depth_hbar_omega = 3.5
            grid_n = 64
            total_time = 500.0
            switch_fraction = 0.3
            drive_detuning = 0.002
            [lab]
            wavelength_nm = 1064.0
            species = "Cs133"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.depth_hbar_omega, 3.5);
        assert_eq!(cfg.grid_n, 64);
        assert_eq!(cfg.lab.as_ref().unwrap().species, "Cs133");
        assert!(cfg.lattice().unwrap().lab.is_some());
        assert_eq!(cfg.resonance.steps, 31);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_str("grid_n = 100").is_err());
        assert!(RunConfig::from_toml_str("switch_fraction = 1.0").is_err());
        assert!(RunConfig::from_toml_str("depth_hbar_omega = 0.0").is_err());
        assert!(RunConfig::from_toml_str("unknown_key = 1").is_err());
        assert!(RunConfig::from_toml_str("[lab]\nwavelength_nm = 1064.0\nspecies = \"Xe\"").is_err());
    }

    #[test]
    fn resonance_grid_endpoints() {
        let g = ResonanceSection::default().grid();
        assert_eq!(g.len(), 31);
        assert!((g[0] + 0.03).abs() < 1e-15 && (g[30] - 0.03).abs() < 1e-15);
        assert!(g[15].abs() < 1e-15);
    }
}
