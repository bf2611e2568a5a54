use num_complex::Complex64;
use orbital_forge::couplings::{chi_phase, compute_overlaps, jacobi_anger_check, ChiMode, CouplingSet};
use orbital_forge::experiments::four_level_run;
use orbital_forge::lattice::{Drive, LatticeConfig};
use orbital_forge::model4l::{build_h4l, build_pre_rwa, FourLevelModel, ModelKind, LEVELS};
use orbital_forge::pulses::{to_physical, PulseSchedule};
use orbital_forge::spectral::{solve_site_states, EigenBasis1D};
use proptest::prelude::*;

fn site(v: f64) -> (LatticeConfig, EigenBasis1D, CouplingSet) {
    let c = LatticeConfig::from_depth(v).unwrap();
    let b = solve_site_states(&c, 128, 6).unwrap();
    let cs = compute_overlaps(&b);
    (c, b, cs)
}

/// ∫Γᵢ f Γⱼ from Γ re-evaluated on a grid four times finer.
fn fine_element(b: &EigenBasis1D, i: usize, j: usize, f: impl Fn(f64) -> f64) -> f64 {
    let m = 4 * b.m_grid();
    let dx = 2.0 * b.ell / m as f64;
    let (gi, gj) = (b.resample(i, m), b.resample(j, m));
    (0..m).map(|k| gi[k] * f(-b.ell + k as f64 * dx) * gj[k]).sum::<f64>() * dx
}

/// ⟨ij| cos(2x)cos(2y) |pq⟩ by direct 2D quadrature.
fn cos_cos_2d(b: &EigenBasis1D, bra: (usize, usize), ket: (usize, usize)) -> f64 {
    let m = b.m_grid();
    let mut acc = 0.0;
    for ix in 0..m {
        for iy in 0..m {
            let (x, y) = (b.grid[ix], b.grid[iy]);
            acc += b.gamma(bra.0)[ix] * b.gamma(bra.1)[iy] * (2.0 * x).cos() * (2.0 * y).cos()
                * b.gamma(ket.0)[ix]
                * b.gamma(ket.1)[iy];
        }
    }
    acc * b.dx * b.dx
}

#[test]
fn overlaps_match_fine_grid() {
    for v in [2.5, 3.0, 4.0, 6.0] {
        let (_, b, cs) = site(v);
        let sin2 = |x: f64| x.sin().powi(2);
        let cos2 = |x: f64| (2.0 * x).cos();
        let pairs = [
            (cs.alpha0, fine_element(&b, 0, 0, sin2)),
            (cs.alpha2, fine_element(&b, 2, 2, sin2)),
            (cs.beta0, fine_element(&b, 0, 0, cos2)),
            (cs.beta2, fine_element(&b, 2, 2, cos2)),
            (cs.gamma0, fine_element(&b, 0, 2, sin2)),
            (cs.cos02, fine_element(&b, 0, 2, cos2)),
        ];
        for (k, (a, o)) in pairs.iter().enumerate() {
            assert!((a - o).abs() < 1e-10, "v={v} entry {k}: {a} vs {o}");
        }
        let a02 = (fine_element(&b, 0, 0, sin2) - fine_element(&b, 2, 2, sin2)) / b.omega_d;
        assert!((cs.a02 - a02).abs() < 1e-10);
    }
}

#[test]
fn products_match_2d_quadrature() {
    for v in [3.0, 4.0] {
        let (_, b, cs) = site(v);
        assert!((cs.gamma1 - cos_cos_2d(&b, (0, 0), (2, 2))).abs() < 1e-9);
        assert!((cs.gamma1 - cos_cos_2d(&b, (2, 0), (0, 2))).abs() < 1e-9);
        assert!((cs.gamma2 - cos_cos_2d(&b, (0, 0), (2, 0))).abs() < 1e-9);
        assert!((cs.gamma3 - cos_cos_2d(&b, (2, 0), (2, 2))).abs() < 1e-9);
    }
}

#[test]
fn a02_decreases_with_depth() {
    let a: Vec<f64> = [3.0, 4.0, 5.0, 6.0].iter().map(|&v| site(v).2.a02.abs()).collect();
    assert!(a.windows(2).all(|w| w[1] < w[0]), "{a:?}");
}

fn acceptance_drive() -> (LatticeConfig, CouplingSet, PulseSchedule) {
    let (c, _, cs) = site(3.0);
    let s = PulseSchedule::from_fraction(c.time_from_omega_units(750.0), 0.25).unwrap();
    (c, cs, s)
}

#[test]
fn slow_envelope_phase_is_accurate() {
    let (_, cs, s) = acceptance_drive();
    let d = to_physical(&s, &cs, cs.omega_d).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=5000 {
        let t = s.total_time * i as f64 / 5000.0;
        for &(n, m) in &LEVELS {
            let e = chi_phase(n, m, &d, &cs, t, ChiMode::Exact);
            let a = chi_phase(n, m, &d, &cs, t, ChiMode::SlowEnvelope);
            worst = worst.max((e - a).norm());
        }
    }
    assert!(worst < 0.05, "max |χ_exact − χ_approx| = {worst}");
}

#[test]
fn exact_phase_against_quadrature() {
    let (_, cs, s) = acceptance_drive();
    let d = to_physical(&s, &cs, cs.omega_d).unwrap();
    // Composite Simpson on ∫f_x and ∫V_c.
    let t_end = 0.7 * s.total_time;
    let n = 200_000;
    let h = t_end / n as f64;
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let mut acc = f(0.0) + f(t_end);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc * h / 3.0
    };
    let fx = simpson(&|t| d.f_x(t));
    let vc = simpson(&|t| d.v_c(t));
    let expect = Complex64::from_polar(1.0, -(cs.alpha2 * fx - cs.beta2 * cs.beta0 * vc));
    assert!((chi_phase(2, 0, &d, &cs, t_end, ChiMode::Exact) - expect).norm() < 1e-8);
}

#[test]
fn sideband_truncation_and_drive_strength() {
    let (c, cs, s) = acceptance_drive();
    let d = to_physical(&s, &cs, cs.omega_d).unwrap();
    let ja = jacobi_anger_check(cs.a02, d.peak_envelope());
    assert!(ja.max() < 0.05, "{ja:?}");
    let peak = (0..=20_000)
        .map(|i| d.f_x(s.total_time * i as f64 / 20_000.0).abs())
        .fold(0.0, f64::max);
    assert!(peak / c.v0 < 0.5, "max|f_x|/V₀ = {}", peak / c.v0);
}

#[test]
fn pre_rwa_agrees_with_rwa() {
    let (_, cs, s) = acceptance_drive();
    let rwa = FourLevelModel::new(ModelKind::Rwa { with_g_factors: true }, s, cs, cs.omega_d).unwrap();
    let pre = FourLevelModel::new(ModelKind::PreRwa, s, cs, cs.omega_d).unwrap();
    let times = [0.0, s.total_time];
    let a = four_level_run(&rwa, &times, 1e-9).unwrap();
    let b = four_level_run(&pre, &times, 1e-8).unwrap();
    let overlap: Complex64 = a
        .final_state()
        .amplitudes
        .iter()
        .zip(&b.final_state().amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum();
    assert!(overlap.norm_sqr() > 0.99, "|⟨ψ_RWA|ψ_pre⟩|² = {}", overlap.norm_sqr());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hamiltonians_hermitian(frac in 0.05f64..0.95, u in 0.0f64..1.0, det in -0.5f64..0.5, g in any::<bool>()) {
        let (_, cs, s0) = acceptance_drive();
        let s = PulseSchedule::from_fraction(s0.total_time, frac).unwrap();
        let t = u * s.total_time;
        let h = build_h4l(&s, det, &cs, t, g);
        prop_assert!((h - h.adjoint()).iter().all(|z| z.norm() == 0.0));
        let d = to_physical(&s, &cs, cs.omega_d + det).unwrap();
        let p = build_pre_rwa(&d, &cs, t);
        prop_assert!((p - p.adjoint()).iter().all(|z| z.norm() == 0.0));
    }
}
