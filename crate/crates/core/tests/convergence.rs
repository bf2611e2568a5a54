use orbital_forge::experiments::{full_fidelity, RunSpec, SiteModel};
use orbital_forge::lattice::LatticeConfig;

fn spec(grid_n: usize, dt_factor: f64) -> RunSpec {
    RunSpec {
        v: 3.0,
        total_time: 750.0,
        switch_fraction: 0.25,
        detuning: 0.0,
        grid_n,
        dt_factor,
        samples: 1,
    }
}

fn fidelity(grid_n: usize, dt_factor: f64) -> f64 {
    let site = SiteModel::new(LatticeConfig::from_depth(3.0).unwrap(), grid_n).unwrap();
    full_fidelity(&site, &spec(grid_n, dt_factor)).unwrap()
}

#[test]
fn step_halving() {
    let base = fidelity(128, 0.05);
    let half = fidelity(128, 0.025);
    println!("F(ω_d·dt=0.05) = {base:.10}, F(ω_d·dt=0.025) = {half:.10}");
    assert!((base - half).abs() < 1e-6, "step halving changed F by {:.3e}", (base - half).abs());
}

#[test]
fn grid_doubling() {
    let base = fidelity(128, 0.05);
    let fine = fidelity(256, 0.05);
    println!("F(N=128) = {base:.10}, F(N=256) = {fine:.10}");
    assert!((base - fine).abs() < 1e-4, "grid doubling changed F by {:.3e}", (base - fine).abs());
}
