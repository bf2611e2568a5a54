//! Full two-dimensional Schrödinger dynamics on one periodic lattice cell.
//!
//! The cell is [−ℓ, ℓ)² sampled on an N×N grid, stored row-major with the
//! x index outermost (`ix * n + iy`). Time stepping is Strang splitting with
//! the kinetic factor applied in momentum space and the driven potential
//! sampled at the step midpoint.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Drive, LatticeConfig};
use crate::spectral::EigenBasis1D;

/// Largest accepted ω_d·dt.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;
/// Default ω_d·dt.
pub const DEFAULT_PHASE_PER_STEP: f64 = 0.05;

/// Angular wavenumbers of an n-point periodic grid of length `length`, in FFT order.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / length;
    (0..n)
        .map(|j| {
            let j = j as i64;
            let j = if j < (n as i64 + 1) / 2 { j } else { j - n as i64 };
            dk * j as f64
        })
        .collect()
}

fn check_grid(n: usize) -> Result<()> {
    if n < 64 || !n.is_power_of_two() {
        return Err(Error::InvalidConfig(format!("grid must be a power of two ≥ 64, got {n}")));
    }
    Ok(())
}

/// Square 2D FFT built from row transforms and an in-place transpose.
///
/// `forward` leaves the spectrum transposed (index `ky * n + kx`), and
/// `inverse` expects that layout. Neither direction normalizes.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            n,
            fwd,
            inv,
            scratch: vec![Complex64::default(); len],
        }
    }

    fn transpose(&self, data: &mut [Complex64]) {
        let n = self.n;
        const B: usize = 16;
        for bi in (0..n).step_by(B) {
            for bj in (bi..n).step_by(B) {
                for i in bi..(bi + B).min(n) {
                    let start = if bi == bj { i + 1 } else { bj };
                    for j in start..(bj + B).min(n) {
                        data.swap(i * n + j, j * n + i);
                    }
                }
            }
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.fwd.process_with_scratch(data, &mut self.scratch);
        self.transpose(data);
        self.fwd.process_with_scratch(data, &mut self.scratch);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inv.process_with_scratch(data, &mut self.scratch);
        self.transpose(data);
        self.inv.process_with_scratch(data, &mut self.scratch);
    }
}

/// Complex wavefunction on the periodic cell, normalized as Σ|ψ|²ΔxΔy = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField2D {
    pub n: usize,
    pub ell: f64,
    pub dx: f64,
    pub values: Vec<Complex64>,
}

impl WaveField2D {
    pub fn zeros(n: usize, ell: f64) -> Result<Self> {
        check_grid(n)?;
        Ok(Self {
            n,
            ell,
            dx: 2.0 * ell / n as f64,
            values: vec![Complex64::default(); n * n],
        })
    }

    pub fn from_fn(n: usize, ell: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let mut w = Self::zeros(n, ell)?;
        let x = w.coords();
        for (ix, &xv) in x.iter().enumerate() {
            for (iy, &yv) in x.iter().enumerate() {
                w.values[ix * n + iy] = f(xv, yv);
            }
        }
        Ok(w)
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| -self.ell + i as f64 * self.dx).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx * self.dx
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm_sqr().sqrt();
        self.values.iter_mut().for_each(|z| *z *= s);
    }

    pub fn inner(&self, other: &WaveField2D) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * (self.dx * self.dx)
    }
}

/// Γᵢ(x)Γⱼ(y) on the basis grid.
pub fn product_state(basis: &EigenBasis1D, i: usize, j: usize) -> Result<WaveField2D> {
    let n = basis.m_grid();
    let mut w = WaveField2D::zeros(n, basis.ell)?;
    let (gi, gj) = (basis.gamma(i), basis.gamma(j));
    for ix in 0..n {
        for iy in 0..n {
            w.values[ix * n + iy] = Complex64::new(gi[ix] * gj[iy], 0.0);
        }
    }
    Ok(w)
}

/// (|20⟩ + i|02⟩)/√2.
pub fn plus_state(basis: &EigenBasis1D) -> Result<WaveField2D> {
    let a = product_state(basis, 2, 0)?;
    let b = product_state(basis, 0, 2)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = a.clone();
    for (z, (p, q)) in w.values.iter_mut().zip(a.values.iter().zip(&b.values)) {
        *z = (p + Complex64::i() * q) * s;
    }
    Ok(w)
}

fn check_match(psi: &WaveField2D, basis: &EigenBasis1D) -> Result<()> {
    if basis.m_grid() != psi.n || (basis.ell - psi.ell).abs() > 1e-12 {
        return Err(Error::GridMismatch {
            basis: basis.m_grid(),
            field: psi.n,
        });
    }
    Ok(())
}

/// ⟨Γᵢ(x)Γⱼ(y)|ψ⟩.
pub fn project(psi: &WaveField2D, i: usize, j: usize, basis: &EigenBasis1D) -> Result<Complex64> {
    check_match(psi, basis)?;
    let n = psi.n;
    let (gi, gj) = (basis.gamma(i), basis.gamma(j));
    let mut acc = Complex64::default();
    for ix in 0..n {
        let row = &psi.values[ix * n..(ix + 1) * n];
        let s: Complex64 = row.iter().zip(gj).map(|(z, g)| z * g).sum();
        acc += s * gi[ix];
    }
    Ok(acc * psi.dx * psi.dx)
}

/// Amplitudes ⟨Γᵢ Γⱼ|ψ⟩ for i, j ∈ {0, 2, 4} in one pass, indexed [i/2][j/2].
fn project_even(psi: &WaveField2D, basis: &EigenBasis1D) -> [[Complex64; 3]; 3] {
    let n = psi.n;
    let g = [basis.gamma(0), basis.gamma(2), basis.gamma(4)];
    let mut out = [[Complex64::default(); 3]; 3];
    for ix in 0..n {
        let row = &psi.values[ix * n..(ix + 1) * n];
        let mut t = [Complex64::default(); 3];
        for (iy, z) in row.iter().enumerate() {
            t[0] += z * g[0][iy];
            t[1] += z * g[1][iy];
            t[2] += z * g[2][iy];
        }
        for a in 0..3 {
            for b in 0..3 {
                out[a][b] += t[b] * g[a][ix];
            }
        }
    }
    let w = psi.dx * psi.dx;
    out.iter_mut().flatten().for_each(|z| *z *= w);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leakage {
    pub total: f64,
    pub p40: f64,
    pub p04: f64,
}

/// 1 − Σ_{i,j∈{0,2}} |⟨ij|ψ⟩|², with the |40⟩ and |04⟩ shares.
pub fn leakage(psi: &WaveField2D, basis: &EigenBasis1D) -> Result<Leakage> {
    check_match(psi, basis)?;
    let a = project_even(psi, basis);
    let inside: f64 = [a[0][0], a[1][0], a[0][1], a[1][1]].iter().map(|z| z.norm_sqr()).sum();
    Ok(Leakage {
        total: (psi.norm_sqr() - inside).max(0.0),
        p40: a[2][0].norm_sqr(),
        p04: a[0][2].norm_sqr(),
    })
}

/// ⟨ψ|x p_y − y p_x|ψ⟩ in units of ħ, with spectral derivatives.
pub fn angular_momentum(psi: &WaveField2D) -> f64 {
    let mut fft = Fft2::new(psi.n);
    angular_momentum_with(psi, &mut fft)
}

fn angular_momentum_with(psi: &WaveField2D, fft: &mut Fft2) -> f64 {
    let n = psi.n;
    let mut k = wavenumbers(n, 2.0 * psi.ell);
    k[n / 2] = 0.0;
    let mut spec = psi.values.clone();
    fft.forward(&mut spec);
    let scale = 1.0 / (n * n) as f64;
    // spectrum index is ky * n + kx
    let mut dy = spec.clone();
    let mut dxv = spec;
    for a in 0..n {
        for b in 0..n {
            dy[a * n + b] *= Complex64::new(0.0, k[a] * scale);
            dxv[a * n + b] *= Complex64::new(0.0, k[b] * scale);
        }
    }
    fft.inverse(&mut dy);
    fft.inverse(&mut dxv);
    let x = psi.coords();
    let mut acc = Complex64::default();
    for ix in 0..n {
        for iy in 0..n {
            let i = ix * n + iy;
            // L_z ψ = −i(x ∂_y − y ∂_x)ψ
            let lz = Complex64::new(0.0, -1.0) * (x[ix] * dy[i] - x[iy] * dxv[i]);
            acc += psi.values[i].conj() * lz;
        }
    }
    acc.re * psi.dx * psi.dx
}

/// Observables of one sample. Times are natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub t: f64,
    pub p00: f64,
    pub p20: f64,
    pub p02: f64,
    pub p22: f64,
    pub p40: f64,
    pub p04: f64,
    pub leakage: f64,
    pub fidelity: f64,
    pub lz: f64,
    pub norm: f64,
}

fn observe(t: f64, psi: &WaveField2D, basis: &EigenBasis1D, fft: &mut Fft2) -> ObservableSet {
    let a = project_even(psi, basis);
    let norm = psi.norm_sqr();
    let p = |z: Complex64| z.norm_sqr();
    let inside = p(a[0][0]) + p(a[1][0]) + p(a[0][1]) + p(a[1][1]);
    let plus = (a[1][0] - Complex64::i() * a[0][1]) * std::f64::consts::FRAC_1_SQRT_2;
    ObservableSet {
        t,
        p00: p(a[0][0]),
        p20: p(a[1][0]),
        p02: p(a[0][1]),
        p22: p(a[1][1]),
        p40: p(a[2][0]),
        p04: p(a[0][2]),
        leakage: (norm - inside).max(0.0),
        fidelity: p(plus),
        lz: angular_momentum_with(psi, fft),
        norm,
    }
}

/// Static part V₀[sin²x + sin²y] and the drive profiles on the grid.
struct PotentialTables {
    s2: Vec<f64>,
    c2: Vec<f64>,
    v0: f64,
}

impl PotentialTables {
    fn new(x: &[f64], v0: f64) -> Self {
        Self {
            s2: x.iter().map(|x| x.sin().powi(2)).collect(),
            c2: x.iter().map(|x| (2.0 * x).cos()).collect(),
            v0,
        }
    }

    /// Multiplies `psi` by exp(−i·dt·V(t)), or by exp(−dt·V) when `imaginary`.
    fn apply(&self, fx: f64, vc: f64, dt: f64, imaginary: bool, psi: &mut [Complex64], table: &mut Vec<Complex64>) {
        let n = self.s2.len();
        let expo = |v: f64| {
            if imaginary {
                Complex64::new((-dt * v).exp(), 0.0)
            } else {
                Complex64::from_polar(1.0, -dt * v)
            }
        };
        let ex: Vec<Complex64> = self.s2.iter().map(|s| expo((self.v0 + fx) * s)).collect();
        let ey: Vec<Complex64> = self.s2.iter().map(|s| expo(self.v0 * s)).collect();
        if vc == 0.0 {
            for (ix, row) in psi.chunks_exact_mut(n).enumerate() {
                row.iter_mut().zip(&ey).for_each(|(z, e)| *z *= ex[ix] * e);
            }
            return;
        }
        // cos(2x) on the grid is mirror symmetric about index n/2, so the
        // coupling phase only needs the (n/2 + 1)² distinct entries.
        let h = n / 2 + 1;
        table.clear();
        for a in 0..h {
            let cx = -vc * self.c2[a];
            table.extend((0..h).map(|b| expo(cx * self.c2[b])));
        }
        let fold = |i: usize| if i < h { i } else { n - i };
        for (ix, row) in psi.chunks_exact_mut(n).enumerate() {
            let trow = &table[fold(ix) * h..fold(ix) * h + h];
            let e = ex[ix];
            for (iy, z) in row.iter_mut().enumerate() {
                *z *= e * ey[iy] * trow[fold(iy)];
            }
        }
    }

    fn value(&self, ix: usize, iy: usize) -> f64 {
        self.v0 * (self.s2[ix] + self.s2[iy])
    }
}

fn kinetic_table(n: usize, ell: f64, factor: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    let k = wavenumbers(n, 2.0 * ell);
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            out.push(factor(0.5 * (k[a] * k[a] + k[b] * k[b])));
        }
    }
    out
}

fn energy(psi: &WaveField2D, pot: &PotentialTables, fft: &mut Fft2) -> f64 {
    let n = psi.n;
    let mut spec = psi.values.clone();
    fft.forward(&mut spec);
    let kin = kinetic_table(n, psi.ell, |e| Complex64::new(e, 0.0));
    let ek: f64 = spec.iter().zip(&kin).map(|(z, e)| z.norm_sqr() * e.re).sum::<f64>() / (n * n) as f64;
    let mut ev = 0.0;
    for ix in 0..n {
        for iy in 0..n {
            ev += psi.values[ix * n + iy].norm_sqr() * pot.value(ix, iy);
        }
    }
    (ek + ev) * psi.dx * psi.dx
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub psi: WaveField2D,
    pub energy: f64,
    pub steps: usize,
}

const IMAG_MAX_STEPS: usize = 200_000;

/// Lowest state of the static cell Hamiltonian by imaginary-time Strang steps.
///
/// `tolerance` is an absolute energy tolerance in natural units. The step is
/// halved until the converged energy no longer moves by more than it.
pub fn ground_state_imaginary_time(config: &LatticeConfig, n: usize, tolerance: f64) -> Result<GroundState> {
    check_grid(n)?;
    if !(tolerance > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tolerance}")));
    }
    let w = config.omega;
    let mut psi = WaveField2D::from_fn(n, config.ell, |x, y| Complex64::new((-0.5 * w * (x * x + y * y)).exp(), 0.0))?;
    psi.normalize();
    let pot = PotentialTables::new(&psi.coords(), config.v0);
    let mut fft = Fft2::new(n);
    let mut table = Vec::new();

    let mut dtau = 0.1 / w;
    let mut steps = 0;
    let mut previous_level: Option<f64> = None;
    loop {
        let scale = 1.0 / (n * n) as f64;
        let kin = kinetic_table(n, config.ell, |e| Complex64::new((-dtau * e).exp() * scale, 0.0));
        let mut e_old = energy(&psi, &pot, &mut fft);
        let e_level = loop {
            for _ in 0..10 {
                pot.apply(0.0, 0.0, 0.5 * dtau, true, &mut psi.values, &mut table);
                fft.forward(&mut psi.values);
                psi.values.iter_mut().zip(&kin).for_each(|(z, k)| *z *= k);
                fft.inverse(&mut psi.values);
                pot.apply(0.0, 0.0, 0.5 * dtau, true, &mut psi.values, &mut table);
                psi.normalize();
            }
            steps += 10;
            let e = energy(&psi, &pot, &mut fft);
            let change = (e - e_old).abs();
            if change < 0.01 * tolerance {
                break e;
            }
            if steps >= IMAG_MAX_STEPS {
                return Err(Error::GroundStateNotConverged { steps, residual: change });
            }
            e_old = e;
        };
        if let Some(prev) = previous_level {
            if (prev - e_level).abs() < tolerance {
                return Ok(GroundState {
                    psi,
                    energy: e_level,
                    steps,
                });
            }
        }
        previous_level = Some(e_level);
        dtau *= 0.5;
    }
}

/// Time-stepping settings for [`propagate_split_operator`]. Times are natural units.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOptions {
    pub total_time: f64,
    /// Requested step; `None` means ω_d·dt = 0.05. Rounded down so that an
    /// integer number of steps spans `total_time`.
    pub dt: Option<f64>,
    /// Sample times, snapped to the nearest step boundary.
    pub sample_times: Vec<f64>,
}

impl SplitOptions {
    pub fn uniform(total_time: f64, dt: Option<f64>, n_samples: usize) -> Self {
        let n_samples = n_samples.max(1);
        Self {
            total_time,
            dt,
            sample_times: (0..=n_samples).map(|i| total_time * i as f64 / n_samples as f64).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory2D {
    pub samples: Vec<ObservableSet>,
    pub dt: f64,
    pub steps: usize,
    pub final_state: WaveField2D,
}

impl Trajectory2D {
    pub fn final_fidelity(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.fidelity)
    }

    pub fn max_leakage(&self) -> f64 {
        self.samples.iter().map(|s| s.leakage).fold(0.0, f64::max)
    }

    pub fn max_p22(&self) -> f64 {
        self.samples.iter().map(|s| s.p22).fold(0.0, f64::max)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.samples.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Resolves the step for a run of length `total_time`.
pub fn resolve_step(omega_d: f64, total_time: f64, dt: Option<f64>) -> Result<(f64, usize)> {
    let suggested = DEFAULT_PHASE_PER_STEP / omega_d;
    let requested = dt.unwrap_or(suggested);
    let ratio = omega_d * requested;
    if !(requested > 0.0) || ratio > MAX_PHASE_PER_STEP {
        return Err(Error::TimeStepTooLarge {
            ratio,
            limit: MAX_PHASE_PER_STEP,
            suggested_dt: suggested,
        });
    }
    if !(total_time > 0.0) {
        return Err(Error::InvalidConfig(format!("total time must be positive, got {total_time}")));
    }
    let steps = (total_time / requested).ceil() as usize;
    Ok((total_time / steps as f64, steps))
}

/// Strang split-operator propagation of `psi` under the driven cell potential.
pub fn propagate_split_operator(
    psi: &WaveField2D,
    drive: &dyn Drive,
    config: &LatticeConfig,
    basis: &EigenBasis1D,
    opts: &SplitOptions,
) -> Result<Trajectory2D> {
    check_match(psi, basis)?;
    let (dt, steps) = resolve_step(basis.omega_d, opts.total_time, opts.dt)?;
    let n = psi.n;
    let norm0 = psi.norm_sqr();
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized(norm0));
    }

    let mut sample_at: Vec<usize> = opts
        .sample_times
        .iter()
        .map(|&t| ((t / dt).round().max(0.0) as usize).min(steps))
        .collect();
    sample_at.sort_unstable();
    sample_at.dedup();

    let pot = PotentialTables::new(&psi.coords(), config.v0);
    let mut fft = Fft2::new(n);
    let scale = 1.0 / (n * n) as f64;
    let khalf = kinetic_table(n, psi.ell, |e| Complex64::from_polar(scale, -0.5 * dt * e));
    let kfull = kinetic_table(n, psi.ell, |e| Complex64::from_polar(scale, -dt * e));
    let mut table = Vec::new();
    let mut state = psi.clone();
    let mut probe = psi.clone();
    let mut samples = Vec::with_capacity(sample_at.len());
    let mut next = sample_at.iter().peekable();

    if next.peek() == Some(&&0) {
        samples.push(observe(0.0, &state, basis, &mut fft));
        next.next();
    }
    // State is kept in momentum space with half a kinetic step applied.
    fft.forward(&mut state.values);
    state.values.iter_mut().zip(&khalf).for_each(|(z, k)| *z *= k);
    for s in 0..steps {
        let tm = (s as f64 + 0.5) * dt;
        fft.inverse(&mut state.values);
        pot.apply(drive.f_x(tm), drive.v_c(tm), dt, false, &mut state.values, &mut table);
        fft.forward(&mut state.values);
        if next.peek() == Some(&&(s + 1)) {
            next.next();
            probe.values.copy_from_slice(&state.values);
            probe.values.iter_mut().zip(&khalf).for_each(|(z, k)| *z *= k);
            fft.inverse(&mut probe.values);
            samples.push(observe((s + 1) as f64 * dt, &probe, basis, &mut fft));
        }
        state.values.iter_mut().zip(&kfull).for_each(|(z, k)| *z *= k);
    }
    // Undo the extra half step taken after the last potential kick.
    let undo = kinetic_table(n, psi.ell, |e| Complex64::from_polar(1.0, 0.5 * dt * e));
    state.values.iter_mut().zip(&undo).for_each(|(z, k)| *z *= k);
    fft.inverse(&mut state.values);

    Ok(Trajectory2D {
        samples,
        dt,
        steps,
        final_state: state,
    })
}

/// One-dimensional split-operator propagator on a periodic line.
pub struct SplitOperator1D {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kfull: Vec<Complex64>,
    khalf: Vec<Complex64>,
    vphase: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SplitOperator1D {
    /// `potential` is sampled on the n-point grid of period `length`.
    pub fn new(potential: &[f64], length: f64, dt: f64) -> Self {
        let n = potential.len();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let k = wavenumbers(n, length);
        let scale = 1.0 / n as f64;
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            fwd,
            inv,
            kfull: k.iter().map(|k| Complex64::from_polar(scale, -0.5 * dt * k * k)).collect(),
            khalf: k.iter().map(|k| Complex64::from_polar(scale, -0.25 * dt * k * k)).collect(),
            vphase: potential.iter().map(|v| Complex64::from_polar(1.0, -dt * v)).collect(),
            scratch: vec![Complex64::default(); len],
        }
    }

    /// Advances `psi` by `steps` Strang steps (half kinetic, potential, half kinetic).
    pub fn advance(&mut self, psi: &mut [Complex64], steps: usize) {
        if steps == 0 {
            return;
        }
        self.fwd.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut().zip(&self.khalf).for_each(|(z, k)| *z *= k);
        for s in 0..steps {
            self.inv.process_with_scratch(psi, &mut self.scratch);
            psi.iter_mut().zip(&self.vphase).for_each(|(z, v)| *z *= v);
            self.fwd.process_with_scratch(psi, &mut self.scratch);
            let table = if s + 1 == steps { &self.khalf } else { &self.kfull };
            psi.iter_mut().zip(table).for_each(|(z, k)| *z *= k);
        }
        self.inv.process_with_scratch(psi, &mut self.scratch);
    }
}
