use orbital_forge::couplings::{compute_overlaps, CouplingSet};
use orbital_forge::experiments::four_level_run;
use orbital_forge::lattice::LatticeConfig;
use orbital_forge::model4l::{FourLevelModel, ModelKind};
use orbital_forge::pulses::PulseSchedule;
use orbital_forge::spectral::solve_site_states;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

fn couplings() -> &'static (LatticeConfig, CouplingSet) {
    static SITE: OnceLock<(LatticeConfig, CouplingSet)> = OnceLock::new();
    SITE.get_or_init(|| {
        let c = LatticeConfig::from_depth(3.0).unwrap();
        (c, compute_overlaps(&solve_site_states(&c, 128, 6).unwrap()))
    })
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn rwa_fidelity(s: PulseSchedule, detuning: f64) -> f64 {
    let (c, cs) = couplings();
    let m = FourLevelModel::new(ModelKind::Rwa { with_g_factors: true }, s, *cs, cs.omega_d + detuning * c.omega).unwrap();
    four_level_run(&m, &[0.0, s.total_time], 1e-9).unwrap().final_fidelity()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pulse_areas(total in 1.0f64..500.0, frac in 0.02f64..0.98) {
        let s = PulseSchedule::from_fraction(total, frac).unwrap();
        prop_assert!((s.omega_x_area(s.total_time) - PI).abs() < 1e-10);
        prop_assert!((s.omega_c_area(s.total_time) - FRAC_PI_2).abs() < 1e-10);
        let ts = s.switch_time;
        let qx = simpson(|t| s.omega_x(t), 0.0, ts, 20_000) + simpson(|t| s.omega_x(t), ts, s.total_time, 20_000);
        let qc = simpson(|t| s.omega_c(t), 0.0, ts, 20_000) + simpson(|t| s.omega_c(t), ts, s.total_time, 20_000);
        prop_assert!((qx - PI).abs() < 1e-9 && (qc - FRAC_PI_2).abs() < 1e-9);
        let disjoint = (0..=1000)
            .map(|i| s.total_time * i as f64 / 1000.0)
            .all(|t| s.omega_x(t) * s.omega_c(t) == 0.0);
        prop_assert!(disjoint);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sequential_scheme_is_exact(total in 100.0f64..1500.0, frac in 0.05f64..0.95) {
        let (c, cs) = couplings();
        let s = PulseSchedule::from_fraction(c.time_from_omega_units(total), frac).unwrap();
        let m = FourLevelModel::new(ModelKind::Rwa { with_g_factors: true }, s, *cs, cs.omega_d).unwrap();
        let times: Vec<f64> = (0..=50).map(|i| s.total_time * i as f64 / 50.0).collect();
        let tr = four_level_run(&m, &times, 1e-10).unwrap();
        prop_assert!((tr.final_fidelity() - 1.0).abs() < 1e-9);
        prop_assert!(tr.populations.iter().all(|p| p[3] < 1e-12));
        prop_assert!(tr.states.iter().all(|st| (st.norm_sqr() - 1.0).abs() < 1e-10));
    }

    #[test]
    fn detuned_curve_symmetric(d in 0.001f64..0.05) {
        let (c, _) = couplings();
        let s = PulseSchedule::from_fraction(c.time_from_omega_units(750.0), 0.25).unwrap();
        let (lo, hi, mid) = (rwa_fidelity(s, -d), rwa_fidelity(s, d), rwa_fidelity(s, 0.0));
        prop_assert!((lo - hi).abs() < 1e-8, "{lo} vs {hi}");
        prop_assert!(mid >= lo && mid >= hi);
    }
}

#[test]
fn switch_time_bounds() {
    assert!(PulseSchedule::from_fraction(10.0, 0.0).is_err());
    assert!(PulseSchedule::from_fraction(10.0, 1.0).is_err());
    assert!(PulseSchedule::new(10.0, 12.0).is_err());
}
