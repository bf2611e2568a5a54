//! Four-level effective model on {|00⟩, |20⟩, |02⟩, |22⟩}.
//!
//! Two Hamiltonians are provided in the same interaction frame: the
//! rotating-wave model used for pulse design, and the pre-RWA form which
//! keeps every coupling with its fast phase and the exact χ̃ factors.
//! Propagation uses a fourth-order Magnus integrator with exact 4×4
//! exponentials, so each step is unitary to rounding.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::couplings::{chi_phase, g_factor, ChiMode, CouplingSet};
use crate::error::{Error, Result};
use crate::lattice::Drive;
use crate::pulses::{to_physical, PhysicalDrive, PulseSchedule};

pub type Matrix4c = Matrix4<Complex64>;

/// Basis ordering used throughout: |00⟩, |20⟩, |02⟩, |22⟩.
pub const LEVELS: [(usize, usize); 4] = [(0, 0), (2, 0), (0, 2), (2, 2)];

const NORM_TOLERANCE: f64 = 1e-8;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourLevelState {
    pub amplitudes: [Complex64; 4],
}

impl FourLevelState {
    pub fn new(amplitudes: [Complex64; 4]) -> Self {
        Self { amplitudes }
    }

    pub fn ground() -> Self {
        Self::basis(0)
    }

    pub fn basis(i: usize) -> Self {
        let mut a = [Complex64::default(); 4];
        a[i] = c(1.0);
        Self { amplitudes: a }
    }

    /// Target (|20⟩ + i|02⟩)/√2.
    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitudes: [c(0.0), c(s), Complex64::new(0.0, s), c(0.0)],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn populations(&self) -> [f64; 4] {
        self.amplitudes.map(|a| a.norm_sqr())
    }

    fn as_vector(&self) -> Vector4<Complex64> {
        Vector4::from_column_slice(&self.amplitudes)
    }

    fn from_vector(v: &Vector4<Complex64>) -> Self {
        Self {
            amplitudes: [v[0], v[1], v[2], v[3]],
        }
    }
}

/// |⟨target|state⟩|², with both states required to be normalized.
pub fn fidelity(state: &FourLevelState, target: &FourLevelState) -> Result<f64> {
    for s in [state, target] {
        let n = s.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Unnormalized(n));
        }
    }
    let overlap: Complex64 = target
        .amplitudes
        .iter()
        .zip(&state.amplitudes)
        .map(|(t, s)| t.conj() * s)
        .sum();
    Ok(overlap.norm_sqr().min(1.0))
}

/// Rotating-wave Hamiltonian
/// δ|00⟩⟨00| + ½[Ω_x⁽¹⁾|20⟩⟨00| − Ω_c|02⟩⟨20| + Ω_x⁽²⁾|02⟩⟨22| + h.c.].
///
/// With `with_g_factors` the Ω_x terms carry G₂,₀,₀,₀ and G₀,₂,₂,₂.
pub fn build_h4l(
    schedule: &PulseSchedule,
    detuning: f64,
    couplings: &CouplingSet,
    t: f64,
    with_g_factors: bool,
) -> Matrix4c {
    let omega_x = schedule.omega_x(t);
    let omega_c = schedule.omega_c(t);
    let (g1, g2) = if with_g_factors {
        let v_int = schedule.omega_c_area(t) / (2.0 * couplings.gamma1);
        let phase = |idx: [usize; 4]| {
            let [n, m, p, q] = idx;
            let d = couplings.beta(p) * couplings.beta(q) - couplings.beta(n) * couplings.beta(m);
            Complex64::from_polar(1.0, d * v_int)
        };
        (phase([2, 0, 0, 0]), phase([0, 2, 2, 2]))
    } else {
        (c(1.0), c(1.0))
    };
    let mut h = Matrix4c::zeros();
    h[(0, 0)] = c(detuning);
    let w1 = g1 * (0.5 * omega_x);
    h[(1, 0)] = w1;
    h[(0, 1)] = w1.conj();
    h[(2, 1)] = c(-0.5 * omega_c);
    h[(1, 2)] = c(-0.5 * omega_c);
    let w2 = g2 * (0.5 * omega_x);
    h[(2, 3)] = w2;
    h[(3, 2)] = w2.conj();
    h
}

/// Interaction-frame Hamiltonian before the rotating-wave approximation.
///
/// The frame is U = diag(e^{i(ω_x−ω_d)t}χ₀₀, e^{−iω_d t}χ₂₀, e^{−iω_d t}χ₀₂,
/// e^{−2iω_d t}χ₂₂) with energies measured from E₀₀; every matrix element of
/// the drive between the four levels is kept.
pub fn build_pre_rwa(drive: &dyn Drive, couplings: &CouplingSet, t: f64) -> Matrix4c {
    let cs = couplings;
    let f = drive.f_x(t);
    let vc = drive.v_c(t);
    let wd = cs.omega_d;
    let wx = drive.carrier();

    let frame_angle = [(wx - wd) * t, -wd * t, -wd * t, -2.0 * wd * t];
    let u: Vec<Complex64> = LEVELS
        .iter()
        .zip(frame_angle)
        .map(|(&(n, m), a)| Complex64::from_polar(1.0, a) * chi_phase(n, m, drive, cs, t, ChiMode::Exact))
        .collect();

    // Lab-frame off-diagonal elements of H₁ (real, symmetric).
    let mut h1 = [[0.0; 4]; 4];
    h1[1][0] = f * cs.gamma0 - vc * cs.gamma2;
    h1[2][0] = -vc * cs.gamma2;
    h1[3][0] = -vc * cs.gamma1;
    h1[2][1] = -vc * cs.gamma1;
    h1[3][1] = -vc * cs.gamma3;
    h1[3][2] = f * cs.gamma0 - vc * cs.gamma3;

    let mut h = Matrix4c::zeros();
    h[(0, 0)] = c(wx - wd);
    for j in 0..4 {
        for k in 0..j {
            let e = u[j].conj() * h1[j][k] * u[k];
            h[(j, k)] = e;
            h[(k, j)] = e.conj();
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModelKind {
    Rwa { with_g_factors: bool },
    PreRwa,
}

/// A four-level model bound to a schedule and a drive frequency.
#[derive(Debug, Clone, Copy)]
pub struct FourLevelModel {
    pub kind: ModelKind,
    pub schedule: PulseSchedule,
    pub couplings: CouplingSet,
    pub drive: PhysicalDrive,
}

impl FourLevelModel {
    pub fn new(kind: ModelKind, schedule: PulseSchedule, couplings: CouplingSet, omega_x: f64) -> Result<Self> {
        let drive = to_physical(&schedule, &couplings, omega_x)?;
        Ok(Self {
            kind,
            schedule,
            couplings,
            drive,
        })
    }

    pub fn detuning(&self) -> f64 {
        self.drive.omega_x - self.couplings.omega_d
    }

    pub fn hamiltonian(&self, t: f64) -> Matrix4c {
        match self.kind {
            ModelKind::Rwa { with_g_factors } => {
                build_h4l(&self.schedule, self.detuning(), &self.couplings, t, with_g_factors)
            }
            ModelKind::PreRwa => build_pre_rwa(&self.drive, &self.couplings, t),
        }
    }

    /// Largest step that resolves the fastest phase in the Hamiltonian.
    pub fn natural_step(&self) -> f64 {
        match self.kind {
            ModelKind::Rwa { .. } => {
                let rate = self.schedule.peak_omega_x().max(self.schedule.peak_omega_c()) + self.detuning().abs();
                0.05 / rate.max(1e-12)
            }
            ModelKind::PreRwa => 0.05 / (self.drive.omega_x + 2.0 * self.couplings.omega_d),
        }
    }

    pub fn g_factor_2000(&self, t: f64) -> Complex64 {
        g_factor([2, 0, 0, 0], &self.drive, &self.couplings, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub max_step: f64,
    /// Allowed change of the final amplitudes when the step is halved.
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            max_step: 0.05,
            tolerance: 1e-9,
            max_halvings: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FourLevelTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FourLevelState>,
    pub populations: Vec<[f64; 4]>,
    pub fidelity: Vec<f64>,
    /// Step size of the accepted run.
    pub step: f64,
    /// Amplitude change against the run at twice the step.
    pub step_error: f64,
}

impl FourLevelTrajectory {
    pub fn final_state(&self) -> &FourLevelState {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("trajectory has at least one sample")
    }
}

fn commutator(a: &Matrix4c, b: &Matrix4c) -> Matrix4c {
    a * b - b * a
}

/// exp(−iA) for Hermitian A.
fn expm_hermitian(a: &Matrix4c) -> Matrix4c {
    let herm = (a + a.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(herm);
    let v = eig.eigenvectors;
    let phases = Matrix4c::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l)));
    v * phases * v.adjoint()
}

/// One fourth-order Magnus step from t to t + h.
fn magnus_step(h_of_t: &impl Fn(f64) -> Matrix4c, t: f64, h: f64) -> Matrix4c {
    let r = 3f64.sqrt() / 6.0;
    let h1 = h_of_t(t + h * (0.5 - r));
    let h2 = h_of_t(t + h * (0.5 + r));
    let a = (h1 + h2) * c(0.5 * h) - commutator(&h1, &h2) * Complex64::new(0.0, 3f64.sqrt() / 12.0 * h * h);
    expm_hermitian(&a)
}

fn run_fixed(
    h_of_t: &impl Fn(f64) -> Matrix4c,
    initial: &FourLevelState,
    times: &[f64],
    max_step: f64,
) -> Vec<FourLevelState> {
    let mut psi = initial.as_vector();
    let mut out = Vec::with_capacity(times.len());
    out.push(*initial);
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let n = (span / max_step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for s in 0..n {
            let u = magnus_step(h_of_t, w[0] + s as f64 * h, h);
            psi = u * psi;
        }
        out.push(FourLevelState::from_vector(&psi));
    }
    out
}

fn max_amplitude_change(a: &[FourLevelState], b: &[FourLevelState]) -> f64 {
    let (x, y) = (a.last().unwrap(), b.last().unwrap());
    x.amplitudes
        .iter()
        .zip(&y.amplitudes)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

/// Propagates `initial` through the sample `times` (the first entry is the
/// start time), halving the step until the final amplitudes are stable.
pub fn propagate_4l(
    h_of_t: impl Fn(f64) -> Matrix4c,
    initial: &FourLevelState,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<FourLevelTrajectory> {
    let n0 = initial.norm_sqr();
    if (n0 - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Unnormalized(n0));
    }
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("sample times must be non-empty and strictly increasing".into()));
    }

    let mut step = opts.max_step;
    let mut coarse = run_fixed(&h_of_t, initial, times, step);
    let mut achieved = f64::INFINITY;
    for _ in 0..=opts.max_halvings {
        let fine = run_fixed(&h_of_t, initial, times, step / 2.0);
        achieved = max_amplitude_change(&coarse, &fine);
        step /= 2.0;
        coarse = fine;
        if achieved <= opts.tolerance {
            let target = FourLevelState::plus();
            let populations = coarse.iter().map(|s| s.populations()).collect();
            let fid = coarse
                .iter()
                .map(|s| fidelity(s, &target))
                .collect::<Result<Vec<_>>>()?;
            return Ok(FourLevelTrajectory {
                times: times.to_vec(),
                states: coarse,
                populations,
                fidelity: fid,
                step,
                step_error: achieved,
            });
        }
    }
    Err(Error::StepSize {
        requested: opts.tolerance,
        achieved,
    })
}

/// Runs a bound model from t = 0 to T, sampling `n_samples + 1` equally spaced times.
pub fn simulate(model: &FourLevelModel, n_samples: usize, tolerance: f64) -> Result<FourLevelTrajectory> {
    let total = model.schedule.total_time;
    let times: Vec<f64> = (0..=n_samples).map(|i| total * i as f64 / n_samples as f64).collect();
    let spacing = total / n_samples as f64;
    let opts = IntegratorOptions {
        max_step: model.natural_step().min(spacing),
        tolerance,
        max_halvings: 8,
    };
    propagate_4l(|t| model.hamiltonian(t), &FourLevelState::ground(), &times, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::compute_overlaps;
    use crate::lattice::{LatticeConfig, StaticLattice};
    use crate::spectral::solve_site_states;

    fn setup(v: f64, total_omega: f64, fraction: f64) -> (LatticeConfig, CouplingSet, PulseSchedule) {
        let cfg = LatticeConfig::from_depth(v).unwrap();
        let cs = compute_overlaps(&solve_site_states(&cfg, 128, 6).unwrap());
        let sched = PulseSchedule::from_fraction(cfg.time_from_omega_units(total_omega), fraction).unwrap();
        (cfg, cs, sched)
    }

    fn is_hermitian(h: &Matrix4c) -> bool {
        (h - h.adjoint()).iter().all(|z| z.norm() == 0.0)
    }

    #[test]
    fn fidelity_examples() {
        let plus = FourLevelState::plus();
        assert!((fidelity(&plus, &plus).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&FourLevelState::ground(), &plus).unwrap(), 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let real = FourLevelState::new([c(0.0), c(s), c(s), c(0.0)]);
        assert!((fidelity(&real, &plus).unwrap() - 0.5).abs() < 1e-15);
        let bad = FourLevelState::new([c(1.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(fidelity(&bad, &plus), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn second_pulse_block_only() {
        let (_, cs, sched) = setup(3.0, 750.0, 0.25);
        let t = sched.switch_time + 10.0;
        let h = build_h4l(&sched, 0.0, &cs, t, false);
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2), (0, 2), (0, 3), (1, 3)] {
            assert_eq!(h[(i, j)].norm(), 0.0, "({i},{j})");
        }
        assert!(h[(1, 2)].norm() > 0.0);
    }

    #[test]
    fn h22_column_structure() {
        let (_, cs, sched) = setup(3.0, 750.0, 0.25);
        for t in [1.0, 10.0, 40.0, 100.0] {
            let h = build_h4l(&sched, 0.0, &cs, t, true);
            assert_eq!(h[(3, 3)].norm(), 0.0);
            assert_eq!(h[(0, 3)].norm(), 0.0);
            assert_eq!(h[(1, 3)].norm(), 0.0);
        }
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let (_, cs, sched) = setup(3.0, 750.0, 0.4);
        let drive = to_physical(&sched, &cs, cs.omega_d + 0.03).unwrap();
        for i in 0..50 {
            let t = sched.total_time * (i as f64 + 0.37) / 50.0;
            assert!(is_hermitian(&build_h4l(&sched, 0.03, &cs, t, true)));
            assert!(is_hermitian(&build_pre_rwa(&drive, &cs, t)));
        }
    }

    #[test]
    fn pre_rwa_without_drive() {
        let (_, cs, _) = setup(3.0, 750.0, 0.25);
        let h = build_pre_rwa(&StaticLattice, &cs, 3.3);
        let mut expect = Matrix4c::zeros();
        expect[(0, 0)] = c(-cs.omega_d);
        assert_eq!(h, expect);
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let s = FourLevelState::new([c(0.6), Complex64::new(0.0, 0.8), c(0.0), c(0.0)]);
        let traj = propagate_4l(|_| Matrix4c::zeros(), &s, &[0.0, 1.0, 5.0], &IntegratorOptions::default()).unwrap();
        for st in &traj.states {
            for (a, b) in st.amplitudes.iter().zip(&s.amplitudes) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rwa_scheme_is_exact() {
        let (_, cs, sched) = setup(3.0, 750.0, 0.25);
        let model = FourLevelModel::new(ModelKind::Rwa { with_g_factors: true }, sched, cs, cs.omega_d).unwrap();
        let traj = simulate(&model, 200, 1e-10).unwrap();
        assert!((traj.final_fidelity() - 1.0).abs() < 1e-9);
        assert!(traj.populations.iter().all(|p| p[3] < 1e-12));
        assert!(traj.states.iter().all(|s| (s.norm_sqr() - 1.0).abs() < 1e-10));
    }

    #[test]
    fn rejects_bad_input() {
        let bad = FourLevelState::new([c(2.0), c(0.0), c(0.0), c(0.0)]);
        assert!(propagate_4l(|_| Matrix4c::zeros(), &bad, &[0.0, 1.0], &IntegratorOptions::default()).is_err());
        let ok = FourLevelState::ground();
        assert!(propagate_4l(|_| Matrix4c::zeros(), &ok, &[1.0, 1.0], &IntegratorOptions::default()).is_err());
    }
}
