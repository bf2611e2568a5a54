//! Second-band tunneling between neighbouring sites.
//!
//! A localized band-2 orbital is built from the hard-wall eigenstates of a
//! short chain of wells, then either inserted into the overlap integral
//! R₂ = 2∫Γ₂(x)V₀sin²(x)Γ₂(x − 2ℓ)dx or propagated on a periodic ring of the
//! same length, where the central-cell population is fitted to the
//! tight-binding ring solution.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::curve_fit;
use crate::lattice::LatticeConfig;
use crate::tdse::SplitOperator1D;

/// Grid points per lattice period.
pub const POINTS_PER_CELL: usize = 64;
const HARMONICS_PER_CELL: usize = 48;

/// Real orbital sampled on the n_cells-period interval [−n·ℓ, n·ℓ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedState {
    pub n_cells: usize,
    pub ell: f64,
    pub dx: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// Probability inside the central period [−ℓ, ℓ).
    pub central_probability: f64,
}

impl LocalizedState {
    pub fn half_width(&self) -> f64 {
        self.n_cells as f64 * self.ell
    }

    /// Index range of the central period.
    pub fn central_range(&self) -> std::ops::Range<usize> {
        let start = (self.n_cells / 2) * POINTS_PER_CELL;
        start..start + POINTS_PER_CELL
    }
}

/// ∫₀ᵘ sin(a s) sin(b s) ds.
fn sin_sin_primitive(a: f64, b: f64, u: f64) -> f64 {
    let term = |w: f64| if w == 0.0 { u } else { (w * u).sin() / w };
    0.5 * (term(a - b) - term(a + b))
}

/// Hard-wall eigenstates on n_cells periods, as sine-basis coefficients.
fn hard_wall_spectrum(config: &LatticeConfig, n_cells: usize) -> (Vec<f64>, DMatrix<f64>) {
    let m = HARMONICS_PER_CELL * n_cells;
    let nc = n_cells as f64;
    let v0 = config.v0;
    // φ_j(x) = sin(j(x + nℓ)/n)/√(nℓ), j = 1..=m, with ℓ = π/2.
    let sign = if n_cells % 2 == 0 { 1.0 } else { -1.0 };
    let mut h = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let ji = (i + 1) as f64;
        h[(i, i)] = ji * ji / (2.0 * nc * nc) + 0.5 * v0;
        for k in 0..m {
            let (a, b) = (i + 1, k + 1);
            let mut cos2 = 0.0;
            if a.abs_diff(b) == 2 * n_cells {
                cos2 += 0.5;
            }
            if a + b == 2 * n_cells {
                cos2 -= 0.5;
            }
            h[(i, k)] -= 0.5 * v0 * sign * cos2;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (energies, vectors)
}

/// Central-site orbital of `band` on a hard-wall chain of `n_cells` wells.
pub fn localized_band_state(config: &LatticeConfig, n_cells: usize, band: usize) -> Result<LocalizedState> {
    if n_cells < 3 || n_cells % 2 == 0 {
        return Err(Error::InvalidConfig(format!("n_cells must be odd and ≥ 3, got {n_cells}")));
    }
    let (energies, vectors) = hard_wall_spectrum(config, n_cells);
    let lo = band * n_cells;
    let hi = lo + n_cells;
    // The multiplet must be separated from its neighbours by more than its width.
    let width = energies[hi - 1] - energies[lo];
    let gap_below = if lo == 0 { f64::INFINITY } else { energies[lo] - energies[lo - 1] };
    let gap_above = energies[hi] - energies[hi - 1];
    if gap_below <= width || gap_above <= width {
        return Err(Error::BandIdentification(format!(
            "band {band} width {width:.3e} is not separated (gaps {gap_below:.3e}, {gap_above:.3e})"
        )));
    }

    let nc = n_cells as f64;
    let ell = config.ell;
    let half = nc * ell;
    let norm = 1.0 / half.sqrt();
    // Central-cell projector inside the multiplet, with analytic overlaps.
    let (u0, u1) = (half - ell, half + ell);
    let m = vectors.nrows();
    let mut basis_overlap = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for k in 0..=i {
            let (a, b) = ((i + 1) as f64 / nc, (k + 1) as f64 / nc);
            let v = (sin_sin_primitive(a, b, u1) - sin_sin_primitive(a, b, u0)) * norm * norm;
            basis_overlap[(i, k)] = v;
            basis_overlap[(k, i)] = v;
        }
    }
    let sub = vectors.columns(lo, n_cells).into_owned();
    let proj = sub.transpose() * &basis_overlap * &sub;
    let eig = SymmetricEigen::new(proj);
    let top = eig.eigenvalues.iamax();
    let central_probability = eig.eigenvalues[top];
    let coeffs = &sub * eig.eigenvectors.column(top);

    let n = n_cells * POINTS_PER_CELL;
    let dx = 2.0 * half / n as f64;
    let x: Vec<f64> = (0..n).map(|i| -half + i as f64 * dx).collect();
    let mut values: Vec<f64> = x
        .iter()
        .map(|&xv| {
            coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * ((j + 1) as f64 * (xv + half) / nc).sin())
                .sum::<f64>()
                * norm
        })
        .collect();
    // Positive at the centre for even orbitals, rising through it for odd ones.
    let mid = n / 2;
    let lead = if values[mid].abs() > 1e-8 { values[mid] } else { values[mid + 1] - values[mid - 1] };
    if lead < 0.0 {
        values.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(LocalizedState {
        n_cells,
        ell,
        dx,
        x,
        values,
        central_probability,
    })
}

pub fn localized_band2_state(config: &LatticeConfig, n_cells: usize) -> Result<LocalizedState> {
    localized_band_state(config, n_cells, 2)
}

/// R₂ = (2/ħ)∫_{−ℓ}^{3ℓ} Γ₂(x)V₀sin²(x)Γ₂(x − 2ℓ)dx, in units of ω.
pub fn tunneling_rate_quadrature(state: &LocalizedState, config: &LatticeConfig) -> f64 {
    let shift = POINTS_PER_CELL;
    let (lo, hi) = (-config.ell, 3.0 * config.ell);
    let mut acc = 0.0;
    for i in shift..state.values.len() {
        let x = state.x[i];
        if x < lo - 1e-12 || x >= hi - 1e-12 {
            continue;
        }
        acc += state.values[i] * config.v0 * x.sin().powi(2) * state.values[i - shift];
    }
    2.0 * acc * state.dx / config.omega
}

/// Central-site population on an n-site tight-binding ring started on that site.
pub fn ring_population(n_sites: usize, hopping: f64, t: f64) -> f64 {
    let n = n_sites as f64;
    let amp: Complex64 = (0..n_sites)
        .map(|k| Complex64::from_polar(1.0, 2.0 * hopping * t * (2.0 * std::f64::consts::PI * k as f64 / n).cos()))
        .sum();
    (amp / n).norm_sqr()
}

/// First local minimum of the ring population at unit hopping.
fn ring_first_minimum(n_sites: usize) -> f64 {
    let dt = 1e-3;
    let mut t = dt;
    let mut prev = ring_population(n_sites, 1.0, 0.0);
    loop {
        let cur = ring_population(n_sites, 1.0, t);
        let next = ring_population(n_sites, 1.0, t + dt);
        if cur <= prev && cur <= next {
            return t;
        }
        prev = cur;
        t += dt;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicEstimate {
    /// Fitted |J|/ħ in units of ω.
    pub rate: f64,
    pub fit_r_squared: f64,
    /// Sample times (ω⁻¹) and central-cell populations.
    pub times: Vec<f64>,
    pub central_population: Vec<f64>,
}

/// Propagates the localized band-2 orbital on a periodic ring of `n_cells`
/// wells for `horizon` (ω⁻¹) and fits the hopping rate.
pub fn tunneling_rate_dynamic(config: &LatticeConfig, n_cells: usize, horizon: f64) -> Result<DynamicEstimate> {
    let state = localized_band2_state(config, n_cells)?;
    let potential: Vec<f64> = state.x.iter().map(|x| config.v0 * x.sin().powi(2)).collect();
    let length = 2.0 * state.half_width();
    let dt = 0.01;
    let t_end = config.time_from_omega_units(horizon);
    let n_samples = 1000;
    let steps_total = (t_end / dt).ceil() as usize;
    let per_sample = steps_total.div_ceil(n_samples).max(1);
    let dt = t_end / (per_sample * n_samples) as f64;
    let mut prop = SplitOperator1D::new(&potential, length, dt);
    let mut psi: Vec<Complex64> = state.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let central = state.central_range();
    let pc = |psi: &[Complex64]| psi[central.clone()].iter().map(|z| z.norm_sqr()).sum::<f64>() * state.dx;

    let mut times = vec![0.0];
    let mut pops = vec![pc(&psi)];
    for i in 1..=n_samples {
        prop.advance(&mut psi, per_sample);
        times.push(config.time_to_omega_units(i as f64 * per_sample as f64 * dt));
        pops.push(pc(&psi));
    }

    // First local minimum of the observed population.
    let depth = 1.0 - (0..1000).map(|i| ring_population(n_cells, 1.0, i as f64 * 0.01)).fold(1.0, f64::min);
    let p0 = pops[0];
    let first_min = (1..pops.len() - 1).find(|&i| {
        pops[i] <= pops[i - 1] && pops[i] <= pops[i + 1] && p0 - pops[i] > 0.5 * depth * p0
    });
    let Some(imin) = first_min else {
        return Err(Error::NoOscillation {
            horizon,
            lower_bound: horizon / ring_first_minimum(n_cells),
        });
    };
    let guess = ring_first_minimum(n_cells) / times[imin];
    let fit = curve_fit(&times, &pops, &[guess, p0], |p, t| p[1] * ring_population(n_cells, p[0], t))?;
    Ok(DynamicEstimate {
        rate: fit.params[0].abs(),
        fit_r_squared: fit.r_squared,
        times,
        central_population: pops,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelingResult {
    pub v: f64,
    pub n_cells: usize,
    /// Rates in units of ω.
    pub r2_quadrature: f64,
    pub r2_dynamic: f64,
    /// 1/r2_dynamic in ω⁻¹.
    pub timescale: f64,
    pub timescale_ms: Option<f64>,
    pub central_probability: f64,
    pub fit_r_squared: f64,
}

pub fn estimate(config: &LatticeConfig, n_cells: usize, horizon: f64) -> Result<TunnelingResult> {
    let state = localized_band2_state(config, n_cells)?;
    let dynamic = tunneling_rate_dynamic(config, n_cells, horizon)?;
    let timescale = 1.0 / dynamic.rate;
    let timescale_ms = config
        .lab
        .map(|lab| config.time_from_omega_units(timescale) / lab.frequency_unit() * 1e3);
    Ok(TunnelingResult {
        v: config.v,
        n_cells,
        r2_quadrature: tunneling_rate_quadrature(&state, config),
        r2_dynamic: dynamic.rate,
        timescale,
        timescale_ms,
        central_probability: state.central_probability,
        fit_r_squared: dynamic.fit_r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_site_ring_closed_form() {
        for t in [0.0f64, 0.3, 1.7, 12.0] {
            let j = 0.8f64;
            let expect = (5.0 + 4.0 * (3.0 * j * t).cos()) / 9.0;
            assert!((ring_population(3, j, t) - expect).abs() < 1e-14);
        }
        assert!((ring_first_minimum(3) - std::f64::consts::PI / 3.0).abs() < 2e-3);
    }

    #[test]
    fn rejects_even_or_small_chains() {
        let c = LatticeConfig::from_depth(3.5).unwrap();
        assert!(localized_band2_state(&c, 2).is_err());
        assert!(localized_band2_state(&c, 4).is_err());
        assert!(localized_band2_state(&c, 1).is_err());
    }

    #[test]
    fn orbital_is_normalized_and_even() {
        let c = LatticeConfig::from_depth(3.5).unwrap();
        let s = localized_band2_state(&c, 3).unwrap();
        let norm: f64 = s.values.iter().map(|v| v * v).sum::<f64>() * s.dx;
        assert!((norm - 1.0).abs() < 1e-10);
        let n = s.values.len();
        for i in 1..n {
            assert!((s.values[i] - s.values[n - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn truncated_orbital_has_no_overlap() {
        let c = LatticeConfig::from_depth(3.5).unwrap();
        let mut s = localized_band2_state(&c, 3).unwrap();
        let keep = s.central_range();
        for (i, v) in s.values.iter_mut().enumerate() {
            if !keep.contains(&i) {
                *v = 0.0;
            }
        }
        assert_eq!(tunneling_rate_quadrature(&s, &c), 0.0);
    }
}
