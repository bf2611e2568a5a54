//! Sequential Rabi schedules and their mapping onto lattice amplitudes.
//!
//! The first pulse drives |00⟩ → |20⟩ with area π on [0, t_S]; the second
//! couples |20⟩ ↔ |02⟩ with area π/2 on [t_S, T]. Both envelopes are
//! quartic polynomials whose value and slope vanish at the segment ends.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::couplings::CouplingSet;
use crate::error::{Error, Result};
use crate::lattice::Drive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub total_time: f64,
    pub switch_time: f64,
}

/// ∫₀ˢ 30σ²(1−σ)² dσ, equal to 1 at s = 1.
fn unit_area(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    30.0 * (s.powi(3) / 3.0 - s.powi(4) / 2.0 + s.powi(5) / 5.0)
}

impl PulseSchedule {
    pub fn new(total_time: f64, switch_time: f64) -> Result<Self> {
        if !(total_time.is_finite() && switch_time > 0.0 && switch_time < total_time) {
            return Err(Error::InvalidConfig(format!(
                "switch time must lie in (0, T): t_S = {switch_time}, T = {total_time}"
            )));
        }
        Ok(Self {
            total_time,
            switch_time,
        })
    }

    pub fn from_fraction(total_time: f64, fraction: f64) -> Result<Self> {
        Self::new(total_time, fraction * total_time)
    }

    /// Ω_x(t) = 30π t²(t − t_S)²/t_S⁵ on [0, t_S].
    pub fn omega_x(&self, t: f64) -> f64 {
        let ts = self.switch_time;
        if !(0.0..=ts).contains(&t) {
            return 0.0;
        }
        30.0 * PI * t * t * (t - ts).powi(2) / ts.powi(5)
    }

    /// Ω_c(t) = 15π(t − T)²(t − t_S)²/(T − t_S)⁵ on [t_S, T].
    pub fn omega_c(&self, t: f64) -> f64 {
        let (ts, tt) = (self.switch_time, self.total_time);
        if !(ts..=tt).contains(&t) {
            return 0.0;
        }
        15.0 * PI * (t - tt).powi(2) * (t - ts).powi(2) / (tt - ts).powi(5)
    }

    pub fn omega_x_derivative(&self, t: f64) -> f64 {
        let ts = self.switch_time;
        if !(0.0..=ts).contains(&t) {
            return 0.0;
        }
        30.0 * PI * (2.0 * t * (t - ts).powi(2) + 2.0 * t * t * (t - ts)) / ts.powi(5)
    }

    pub fn omega_c_derivative(&self, t: f64) -> f64 {
        let (ts, tt) = (self.switch_time, self.total_time);
        if !(ts..=tt).contains(&t) {
            return 0.0;
        }
        15.0 * PI * (2.0 * (t - tt) * (t - ts).powi(2) + 2.0 * (t - tt).powi(2) * (t - ts))
            / (tt - ts).powi(5)
    }

    /// ∫₀ᵗ Ω_x.
    pub fn omega_x_area(&self, t: f64) -> f64 {
        PI * unit_area(t / self.switch_time)
    }

    /// ∫₀ᵗ Ω_c.
    pub fn omega_c_area(&self, t: f64) -> f64 {
        let span = self.total_time - self.switch_time;
        0.5 * PI * unit_area((t - self.switch_time) / span)
    }

    /// Peak 15π/(8t_S) of Ω_x, reached at t_S/2.
    pub fn peak_omega_x(&self) -> f64 {
        15.0 * PI / (8.0 * self.switch_time)
    }

    pub fn peak_omega_c(&self) -> f64 {
        15.0 * PI / (16.0 * (self.total_time - self.switch_time))
    }

    /// Same pulse shapes stretched by `c` in time.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.total_time, c * self.switch_time)
    }

    /// ∫₀ᵗ Ω_x(s) cos(ω s) ds in closed form.
    ///
    /// For a polynomial p, ∫p cos(ωs) = sin(ωs)(p/ω − p''/ω³ + p''''/ω⁵)
    /// + cos(ωs)(p'/ω² − p'''/ω⁴).
    pub fn omega_x_cos_integral(&self, t: f64, omega: f64) -> f64 {
        if omega == 0.0 {
            return self.omega_x_area(t);
        }
        let ts = self.switch_time;
        let c = 30.0 * PI / ts.powi(5);
        let prim = |u: f64| {
            let p = c * (u.powi(4) - 2.0 * ts * u.powi(3) + ts * ts * u * u);
            let p1 = c * (4.0 * u.powi(3) - 6.0 * ts * u * u + 2.0 * ts * ts * u);
            let p2 = c * (12.0 * u * u - 12.0 * ts * u + 2.0 * ts * ts);
            let p3 = c * (24.0 * u - 12.0 * ts);
            let p4 = 24.0 * c;
            let (s, co) = (omega * u).sin_cos();
            s * (p / omega - p2 / omega.powi(3) + p4 / omega.powi(5))
                + co * (p1 / omega.powi(2) - p3 / omega.powi(4))
        };
        let upper = t.clamp(0.0, ts);
        prim(upper) - prim(0.0)
    }
}

/// Lattice amplitudes realizing a [`PulseSchedule`]:
/// f_x(t) = Ω_x(t)cos(ω_x t)/γ₀ and V_c(t) = Ω_c(t)/(2γ₁), with ħ = 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalDrive {
    pub schedule: PulseSchedule,
    pub gamma0: f64,
    pub gamma1: f64,
    pub omega_x: f64,
}

const MIN_COUPLING: f64 = 1e-10;

pub fn to_physical(schedule: &PulseSchedule, couplings: &CouplingSet, omega_x: f64) -> Result<PhysicalDrive> {
    if couplings.gamma0.abs() < MIN_COUPLING {
        return Err(Error::VanishingCoupling {
            name: "gamma0",
            value: couplings.gamma0,
        });
    }
    if couplings.gamma1.abs() < MIN_COUPLING {
        return Err(Error::VanishingCoupling {
            name: "gamma1",
            value: couplings.gamma1,
        });
    }
    Ok(PhysicalDrive {
        schedule: *schedule,
        gamma0: couplings.gamma0,
        gamma1: couplings.gamma1,
        omega_x,
    })
}

impl Drive for PhysicalDrive {
    fn f_x(&self, t: f64) -> f64 {
        self.envelope_x(t) * (self.omega_x * t).cos()
    }

    fn v_c(&self, t: f64) -> f64 {
        self.schedule.omega_c(t) / (2.0 * self.gamma1)
    }

    fn f_x_integral(&self, t: f64) -> f64 {
        self.schedule.omega_x_cos_integral(t, self.omega_x) / self.gamma0
    }

    fn v_c_integral(&self, t: f64) -> f64 {
        self.schedule.omega_c_area(t) / (2.0 * self.gamma1)
    }

    fn envelope_x(&self, t: f64) -> f64 {
        self.schedule.omega_x(t) / self.gamma0
    }

    fn carrier(&self) -> f64 {
        self.omega_x
    }
}

impl PhysicalDrive {
    /// max_t |f_x(t)| bound from the envelope peak.
    pub fn peak_envelope(&self) -> f64 {
        (self.schedule.peak_omega_x() / self.gamma0).abs()
    }

    pub fn peak_v_c(&self) -> f64 {
        self.schedule.peak_omega_c() / (2.0 * self.gamma1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn peak_of_first_pulse() {
        let p = PulseSchedule::new(750.0, 187.5).unwrap();
        let peak = p.omega_x(187.5 / 2.0);
        assert!((peak - 15.0 * PI / (8.0 * 187.5)).abs() < 1e-15);
        assert!((peak - 0.0314).abs() < 5e-5);
        assert_eq!(peak, p.peak_omega_x());
    }

    #[test]
    fn areas_by_quadrature() {
        let p = PulseSchedule::from_fraction(750.0, 0.25).unwrap();
        let ax = simpson(|t| p.omega_x(t), 0.0, p.switch_time, 2000);
        let ac = simpson(|t| p.omega_c(t), p.switch_time, p.total_time, 2000);
        assert!((ax - PI).abs() < 1e-10);
        assert!((ac - PI / 2.0).abs() < 1e-10);
        assert!((p.omega_x_area(p.total_time) - PI).abs() < 1e-14);
        assert!((p.omega_c_area(p.total_time) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn switch_time_range_checked() {
        assert!(PulseSchedule::new(10.0, 0.0).is_err());
        assert!(PulseSchedule::new(10.0, 10.0).is_err());
        assert!(PulseSchedule::new(10.0, -1.0).is_err());
        assert!(PulseSchedule::new(10.0, 5.0).is_ok());
    }

    #[test]
    fn envelopes_vanish_smoothly_at_ends() {
        let p = PulseSchedule::new(100.0, 40.0).unwrap();
        for t in [0.0, 40.0, 100.0] {
            assert!(p.omega_x(t).abs() < 1e-15);
            assert!(p.omega_c(t).abs() < 1e-15);
            assert!(p.omega_x_derivative(t).abs() < 1e-15);
            assert!(p.omega_c_derivative(t).abs() < 1e-15);
        }
    }

    #[test]
    fn cos_integral_against_quadrature() {
        let p = PulseSchedule::new(125.0, 31.25).unwrap();
        let w = 10.12;
        for t in [3.0f64, 17.7, 31.25, 80.0] {
            let q = simpson(|s| p.omega_x(s) * (w * s).cos(), 0.0, t.min(31.25), 20000);
            assert!((p.omega_x_cos_integral(t, w) - q).abs() < 1e-11, "t = {t}");
        }
    }
}
