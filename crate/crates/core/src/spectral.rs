//! Site eigenfunctions Γₙ of the one-dimensional lattice.
//!
//! Γₙ are the quasimomentum-zero Bloch states of −½∂ₓₓ + V₀sin²(x) on one
//! period [−ℓ, ℓ) with periodic boundary conditions. They are computed in a
//! real plane-wave basis split by parity, so parity labels are exact.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

#[derive(Debug, Clone)]
struct PlaneWaveState {
    parity: Parity,
    /// Coefficients of the normalized cos (even) or sin (odd) harmonics.
    /// For even states index 0 is the constant mode.
    coeffs: Vec<f64>,
}

/// Site eigenfunctions sampled on a uniform periodic grid.
#[derive(Debug, Clone)]
pub struct EigenBasis1D {
    pub ell: f64,
    pub grid: Vec<f64>,
    pub dx: f64,
    pub gammas: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub parities: Vec<Parity>,
    /// E₂ − E₀ (ħ = 1).
    pub omega_d: f64,
    /// Lattice depth the states belong to.
    pub v0: f64,
    states: Vec<PlaneWaveState>,
}

const RESIDUAL_LIMIT: f64 = 1e-9;
const TRUNCATION_LIMIT: f64 = 1e-11;

/// Diagonalizes the single-period Hamiltonian and samples the lowest
/// `n_states` eigenfunctions on `m_grid` points.
pub fn solve_site_states(config: &LatticeConfig, m_grid: usize, n_states: usize) -> Result<EigenBasis1D> {
    if m_grid < 64 {
        return Err(Error::InvalidConfig(format!("m_grid must be ≥ 64, got {m_grid}")));
    }
    if n_states < 5 {
        return Err(Error::InvalidConfig(format!("n_states must be ≥ 5, got {n_states}")));
    }
    let harmonics = (m_grid / 4).max(n_states);
    if 2 * harmonics + 1 >= m_grid {
        return Err(Error::InvalidConfig(format!(
            "{n_states} states need more than {m_grid} grid points"
        )));
    }
    // Harmonic j has wavenumber 2πj/(2ℓ).
    let q = PI / config.ell;
    let v0 = config.v0;

    // Even block: constant, √2·cos(qjx) for j = 1..=harmonics (normalized on the period).
    let ne = harmonics + 1;
    let mut he = DMatrix::<f64>::zeros(ne, ne);
    for j in 0..ne {
        he[(j, j)] = 0.5 * (q * j as f64).powi(2) + 0.5 * v0;
        if j + 1 < ne {
            let c = if j == 0 { -v0 * std::f64::consts::SQRT_2 / 4.0 } else { -v0 / 4.0 };
            he[(j, j + 1)] = c;
            he[(j + 1, j)] = c;
        }
    }
    // Odd block: √2·sin(qjx), j = 1..=harmonics.
    let no = harmonics;
    let mut ho = DMatrix::<f64>::zeros(no, no);
    for i in 0..no {
        let j = (i + 1) as f64;
        ho[(i, i)] = 0.5 * (q * j).powi(2) + 0.5 * v0;
        if i + 1 < no {
            ho[(i, i + 1)] = -v0 / 4.0;
            ho[(i + 1, i)] = -v0 / 4.0;
        }
    }

    let mut pairs: Vec<(f64, PlaneWaveState)> = Vec::with_capacity(ne + no);
    for (h, parity) in [(he, Parity::Even), (ho, Parity::Odd)] {
        let eig = SymmetricEigen::new(h.clone());
        for (idx, &e) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(idx).into_owned();
            let residual = (&h * &v - &v * e).norm();
            pairs.push((
                e,
                PlaneWaveState {
                    parity,
                    coeffs: v.iter().copied().collect(),
                },
            ));
            if residual > RESIDUAL_LIMIT * e.abs().max(1.0) {
                return Err(Error::NotConverged { state: idx, residual });
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(n_states);

    let dx = 2.0 * config.ell / m_grid as f64;
    let grid: Vec<f64> = (0..m_grid).map(|i| -config.ell + i as f64 * dx).collect();

    let mut energies = Vec::with_capacity(n_states);
    let mut parities = Vec::with_capacity(n_states);
    let mut gammas = Vec::with_capacity(n_states);
    let mut states = Vec::with_capacity(n_states);
    for (n, (e, mut st)) in pairs.into_iter().enumerate() {
        let tail = st.coeffs.last().copied().unwrap_or(0.0).abs();
        if tail > TRUNCATION_LIMIT {
            return Err(Error::NotConverged { state: n, residual: tail });
        }
        // Sign convention: Γ(0) > 0 for even states, Γ'(0) > 0 for odd ones.
        let lead: f64 = match st.parity {
            Parity::Even => {
                st.coeffs[0] + st.coeffs[1..].iter().sum::<f64>() * std::f64::consts::SQRT_2
            }
            Parity::Odd => st.coeffs.iter().enumerate().map(|(i, c)| c * (i + 1) as f64).sum(),
        };
        if lead < 0.0 {
            st.coeffs.iter_mut().for_each(|c| *c = -*c);
        }
        let samples = grid.iter().map(|&x| eval_state(&st, q, config.ell, x)).collect();
        energies.push(e);
        parities.push(st.parity);
        gammas.push(samples);
        states.push(st);
    }

    let omega_d = energies[2] - energies[0];
    Ok(EigenBasis1D {
        ell: config.ell,
        grid,
        dx,
        gammas,
        energies,
        parities,
        omega_d,
        v0: config.v0,
        states,
    })
}

fn eval_state(st: &PlaneWaveState, q: f64, ell: f64, x: f64) -> f64 {
    let norm = (1.0 / (2.0 * ell)).sqrt();
    let r2 = std::f64::consts::SQRT_2;
    match st.parity {
        Parity::Even => {
            let mut s = st.coeffs[0];
            for (j, c) in st.coeffs.iter().enumerate().skip(1) {
                s += c * r2 * (q * j as f64 * x).cos();
            }
            s * norm
        }
        Parity::Odd => {
            let mut s = 0.0;
            for (i, c) in st.coeffs.iter().enumerate() {
                s += c * r2 * (q * (i + 1) as f64 * x).sin();
            }
            s * norm
        }
    }
}

impl EigenBasis1D {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn m_grid(&self) -> usize {
        self.grid.len()
    }

    pub fn gamma(&self, n: usize) -> &[f64] {
        &self.gammas[n]
    }

    /// Evaluates Γₙ at an arbitrary point (periodic continuation).
    pub fn eval(&self, n: usize, x: f64) -> f64 {
        eval_state(&self.states[n], PI / self.ell, self.ell, x)
    }

    /// Samples Γₙ on another uniform grid of `m` points over [−ℓ, ℓ).
    pub fn resample(&self, n: usize, m: usize) -> Vec<f64> {
        let dx = 2.0 * self.ell / m as f64;
        (0..m).map(|i| self.eval(n, -self.ell + i as f64 * dx)).collect()
    }

    /// Periodic trapezoidal quadrature ∫ f Γᵢ Γⱼ over one period.
    pub fn matrix_element(&self, i: usize, j: usize, f: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .iter()
            .zip(self.gammas[i].iter().zip(&self.gammas[j]))
            .map(|(&x, (a, b))| a * f(x) * b)
            .sum::<f64>()
            * self.dx
    }

    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        self.matrix_element(i, j, |_| 1.0)
    }

    /// Number of computed states below the barrier top V₀.
    pub fn count_bound_states(&self, config: &LatticeConfig) -> Result<usize> {
        let found = self.energies.iter().filter(|&&e| e < config.v0).count();
        if found == self.energies.len() {
            return Err(Error::InsufficientStates {
                found,
                computed: self.energies.len(),
            });
        }
        Ok(found)
    }
}

/// Bound-state count with automatic growth of the state budget.
pub fn count_bound_states(config: &LatticeConfig) -> Result<usize> {
    let mut n_states = 8;
    loop {
        let m = (4 * n_states).max(64usize).next_power_of_two();
        let basis = solve_site_states(config, m, n_states)?;
        match basis.count_bound_states(config) {
            Err(Error::InsufficientStates { .. }) => n_states *= 2,
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(v: f64) -> EigenBasis1D {
        solve_site_states(&LatticeConfig::from_depth(v).unwrap(), 128, 6).unwrap()
    }

    #[test]
    fn orthonormal_and_ordered() {
        let b = basis(3.0);
        for i in 0..b.len() {
            for j in 0..b.len() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((b.overlap(i, j) - expect).abs() < 1e-10, "<{i}|{j}>");
            }
        }
        assert!(b.energies[0] < b.energies[1] && b.energies[1] < b.energies[2]);
        assert_eq!(b.parities[0], Parity::Even);
        assert_eq!(b.parities[1], Parity::Odd);
        assert_eq!(b.parities[2], Parity::Even);
    }

    #[test]
    fn resonance_below_harmonic_value() {
        let c = LatticeConfig::from_depth(3.0).unwrap();
        let b = solve_site_states(&c, 128, 6).unwrap();
        let ratio = b.omega_d / c.omega;
        assert!(ratio > 1.5 && ratio < 2.0, "ω_d/ω = {ratio}");
    }

    #[test]
    fn deep_lattice_approaches_harmonic() {
        let c = LatticeConfig::from_depth(8.0).unwrap();
        let b = solve_site_states(&c, 128, 6).unwrap();
        let ratio = b.omega_d / c.omega;
        assert!((ratio - 2.0).abs() / 2.0 < 0.05, "ω_d/ω = {ratio}");
    }

    #[test]
    fn parity_under_reflection() {
        let b = basis(3.0);
        let m = b.m_grid();
        for n in 0..b.len() {
            let sign = match b.parities[n] {
                Parity::Even => 1.0,
                Parity::Odd => -1.0,
            };
            // grid point i maps to −x at index (m − i) mod m
            for i in 1..m {
                let a = b.gammas[n][i];
                let r = b.gammas[n][m - i];
                assert!((a - sign * r).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn grid_doubling_is_converged() {
        let c = LatticeConfig::from_depth(3.0).unwrap();
        let a = solve_site_states(&c, 64, 6).unwrap();
        let b = solve_site_states(&c, 128, 6).unwrap();
        assert!((a.energies[0] - b.energies[0]).abs() < 1e-8);
        assert!((a.energies[2] - b.energies[2]).abs() < 1e-8);
    }

    #[test]
    fn eval_matches_samples() {
        let b = basis(2.5);
        for (i, &x) in b.grid.iter().enumerate().step_by(7) {
            assert!((b.eval(2, x) - b.gammas[2][i]).abs() < 1e-13);
        }
    }

    #[test]
    fn bound_state_counts() {
        let deep = count_bound_states(&LatticeConfig::from_depth(3.0).unwrap()).unwrap();
        assert!(deep >= 3);
        let shallow = count_bound_states(&LatticeConfig::from_depth(0.2).unwrap()).unwrap();
        assert!(shallow < 3);
        let mut last = 0;
        for i in 0..=16 {
            let v = 1.0 + 0.25 * i as f64;
            let n = count_bound_states(&LatticeConfig::from_depth(v).unwrap()).unwrap();
            assert!(n >= last, "count dropped at v = {v}");
            last = n;
        }
    }

    #[test]
    fn too_few_states_reported() {
        let c = LatticeConfig::from_depth(8.0).unwrap();
        let b = solve_site_states(&c, 256, 5).unwrap();
        assert!(matches!(
            b.count_bound_states(&c),
            Err(Error::InsufficientStates { .. })
        ));
    }

    #[test]
    fn preconditions() {
        let c = LatticeConfig::from_depth(3.0).unwrap();
        assert!(solve_site_states(&c, 32, 6).is_err());
        assert!(solve_site_states(&c, 128, 4).is_err());
    }
}
