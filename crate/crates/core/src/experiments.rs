//! Scenario harness: paired four-level / full-solver runs, sweeps, the
//! resonance scan with curve fits, and report emission.
//!
//! All reported times are in ω⁻¹, energies and rates in ħω and ω, and
//! detunings as (ω_x − ω_d)/ω.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ModelChoice, RunConfig};
use crate::couplings::{chi_phase, compute_overlaps, g_factor, jacobi_anger_check, ChiMode, CouplingSet};
use crate::error::{Error, Result};
use crate::fit::{curve_fit, gaussian_model, lorentzian_model, sinc2_model, FitResult};
use crate::lattice::{to_experimental, Drive, LatticeConfig};
use crate::model4l::{propagate_4l, FourLevelModel, FourLevelState, IntegratorOptions, ModelKind};
use crate::pulses::{to_physical, PulseSchedule};
use crate::spectral::{count_bound_states, solve_site_states, EigenBasis1D, Parity};
use crate::tdse::{ground_state_imaginary_time, propagate_split_operator, ObservableSet, SplitOptions};
use crate::tunneling;

/// Half width of sinc² at half maximum, in units of its argument.
const SINC2_HALF_WIDTH: f64 = 1.391_557_378_251_51;
/// Leakage bound quoted for the sequential scheme.
pub const LEAKAGE_BOUND: f64 = 0.02;
pub const P22_BOUND: f64 = 1e-6;
pub const FIDELITY_BOUND: f64 = 0.96;

/// Lattice, eigenbasis and couplings for one depth and grid.
#[derive(Debug, Clone)]
pub struct SiteModel {
    pub config: LatticeConfig,
    pub basis: EigenBasis1D,
    pub couplings: CouplingSet,
}

impl SiteModel {
    pub fn new(config: LatticeConfig, grid_n: usize) -> Result<Self> {
        let basis = solve_site_states(&config, grid_n, 6)?;
        let couplings = compute_overlaps(&basis);
        Ok(Self {
            config,
            basis,
            couplings,
        })
    }
}

/// Parameters of one paired run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub v: f64,
    /// ω⁻¹
    pub total_time: f64,
    pub switch_fraction: f64,
    /// (ω_x − ω_d)/ω
    pub detuning: f64,
    pub grid_n: usize,
    pub dt_factor: f64,
    pub samples: usize,
}

impl RunSpec {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            v: cfg.depth_hbar_omega,
            total_time: cfg.total_time,
            switch_fraction: cfg.switch_fraction,
            detuning: cfg.drive_detuning,
            grid_n: cfg.grid_n,
            dt_factor: cfg.dt_factor,
            samples: cfg.samples,
        }
    }
}

/// Full-solver trajectory with the four-level prediction on the same samples.
#[derive(Debug, Clone)]
pub struct PopulationRun {
    pub spec: RunSpec,
    pub omega: f64,
    pub omega_d: f64,
    pub schedule: PulseSchedule,
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<ObservableSet>,
    pub rwa_populations: Vec<[f64; 4]>,
    pub rwa_fidelity: Vec<f64>,
}

impl PopulationRun {
    pub fn final_fidelity(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.fidelity)
    }

    pub fn max_leakage(&self) -> f64 {
        self.samples.iter().map(|s| s.leakage).fold(0.0, f64::max)
    }

    pub fn max_p22(&self) -> f64 {
        self.samples.iter().map(|s| s.p22).fold(0.0, f64::max)
    }

    /// Largest |P_ij(full) − P_ij(four-level)| over samples and the four levels.
    pub fn model_agreement(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.rwa_populations)
            .map(|(s, r)| {
                [s.p00 - r[0], s.p20 - r[1], s.p02 - r[2], s.p22 - r[3]]
                    .iter()
                    .map(|d| d.abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    fn max_leakage_sample(&self) -> &ObservableSet {
        self.samples
            .iter()
            .max_by(|a, b| a.leakage.total_cmp(&b.leakage))
            .expect("run has samples")
    }

    /// P₄₀ over total leakage at the instant of maximum leakage.
    pub fn p40_share_at_max_leakage(&self) -> f64 {
        let s = self.max_leakage_sample();
        if s.leakage == 0.0 {
            0.0
        } else {
            s.p40 / s.leakage
        }
    }

    /// Distance from the maximum-leakage instant to the nearest pulse peak,
    /// in units of that pulse's full width at half maximum.
    pub fn leakage_peak_offset(&self) -> f64 {
        let t = self.max_leakage_sample().t;
        let (ts, tt) = (self.schedule.switch_time, self.schedule.total_time);
        // Each quartic envelope has FWHM √(1 − 1/√2) times its duration.
        let shape = (1.0 - std::f64::consts::FRAC_1_SQRT_2).sqrt();
        [(0.5 * ts, shape * ts), (0.5 * (ts + tt), shape * (tt - ts))]
            .iter()
            .map(|(peak, width)| (t - peak).abs() / width)
            .fold(f64::INFINITY, f64::min)
    }
}

fn rwa_model(site: &SiteModel, schedule: PulseSchedule, detuning: f64) -> Result<FourLevelModel> {
    let omega_x = site.couplings.omega_d + detuning * site.config.omega;
    FourLevelModel::new(ModelKind::Rwa { with_g_factors: true }, schedule, site.couplings, omega_x)
}

/// Runs the four-level model on the given natural-unit times.
pub fn four_level_run(model: &FourLevelModel, times: &[f64], tolerance: f64) -> Result<crate::model4l::FourLevelTrajectory> {
    let spacing = times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let opts = IntegratorOptions {
        max_step: model.natural_step().min(spacing),
        tolerance,
        max_halvings: 10,
    };
    propagate_4l(|t| model.hamiltonian(t), &FourLevelState::ground(), times, &opts)
}

pub fn population_run(spec: &RunSpec) -> Result<PopulationRun> {
    let config = LatticeConfig::from_depth(spec.v)?;
    let site = SiteModel::new(config, spec.grid_n)?;
    population_run_on(&site, spec)
}

pub fn population_run_on(site: &SiteModel, spec: &RunSpec) -> Result<PopulationRun> {
    let config = &site.config;
    let schedule = PulseSchedule::from_fraction(config.time_from_omega_units(spec.total_time), spec.switch_fraction)?;
    let model = rwa_model(site, schedule, spec.detuning)?;
    let ground = ground_state_imaginary_time(config, spec.grid_n, 1e-9 * config.omega)?;
    let opts = SplitOptions::uniform(schedule.total_time, Some(spec.dt_factor / site.couplings.omega_d), spec.samples);
    let traj = propagate_split_operator(&ground.psi, &model.drive, config, &site.basis, &opts)?;
    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let rwa = four_level_run(&model, &times, 1e-9)?;
    Ok(PopulationRun {
        spec: *spec,
        omega: config.omega,
        omega_d: site.couplings.omega_d,
        schedule,
        dt: traj.dt,
        steps: traj.steps,
        samples: traj.samples,
        rwa_populations: rwa.populations,
        rwa_fidelity: rwa.fidelity,
    })
}

/// Runs independent specs concurrently; output order follows input order.
pub fn population_runs(specs: &[RunSpec]) -> Result<Vec<PopulationRun>> {
    specs.par_iter().map(population_run).collect()
}

/// Full-solver final fidelity only, with the site model shared.
pub fn full_fidelity(site: &SiteModel, spec: &RunSpec) -> Result<f64> {
    let config = &site.config;
    let schedule = PulseSchedule::from_fraction(config.time_from_omega_units(spec.total_time), spec.switch_fraction)?;
    let omega_x = site.couplings.omega_d + spec.detuning * config.omega;
    let drive = to_physical(&schedule, &site.couplings, omega_x)?;
    let ground = ground_state_imaginary_time(config, spec.grid_n, 1e-9 * config.omega)?;
    let opts = SplitOptions {
        total_time: schedule.total_time,
        dt: Some(spec.dt_factor / site.couplings.omega_d),
        sample_times: vec![schedule.total_time],
    };
    let traj = propagate_split_operator(&ground.psi, &drive, config, &site.basis, &opts)?;
    Ok(traj.final_fidelity())
}

/// Fit of one line shape to a resonance curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub params: Vec<f64>,
    pub r_squared: f64,
}

impl From<FitResult> for LineFit {
    fn from(f: FitResult) -> Self {
        Self {
            params: f.params,
            r_squared: f.r_squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceScan {
    pub detunings: Vec<f64>,
    pub full: Vec<f64>,
    pub rwa: Vec<f64>,
    pub sinc2: Option<LineFit>,
    pub gaussian: Option<LineFit>,
    pub lorentzian: Option<LineFit>,
    pub fit_error: Option<String>,
}

impl ResonanceScan {
    /// δ₀ of the sinc² fit.
    pub fn peak_detuning(&self) -> Option<f64> {
        self.sinc2.as_ref().map(|f| f.params[2])
    }

    /// Full width at half maximum of the fitted sinc² on the detuning axis.
    pub fn fwhm(&self) -> Option<f64> {
        self.sinc2.as_ref().map(|f| 2.0 * SINC2_HALF_WIDTH / f.params[1].abs())
    }

    pub fn rwa_peak(&self) -> f64 {
        argmax(&self.detunings, &self.rwa).0
    }

    pub fn full_grid_peak(&self) -> f64 {
        argmax(&self.detunings, &self.full).0
    }
}

fn argmax(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    xs.iter()
        .zip(ys)
        .fold((f64::NAN, f64::NEG_INFINITY), |best, (&x, &y)| if y > best.1 { (x, y) } else { best })
}

/// Fits sinc², Gaussian and Lorentzian line shapes to `ys(xs)`.
pub fn fit_line_shapes(xs: &[f64], ys: &[f64]) -> (Result<LineFit>, Result<LineFit>, Result<LineFit>) {
    let (x0, ymax) = argmax(xs, ys);
    let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let amp = ymax - ymin;
    // Half width from the samples above half height.
    let half = ymin + 0.5 * amp;
    let above: Vec<f64> = xs.iter().zip(ys).filter(|(_, &y)| y >= half).map(|(&x, _)| x).collect();
    let span = xs.last().unwrap_or(&0.0) - xs.first().unwrap_or(&0.0);
    let width = match (above.first(), above.last()) {
        (Some(a), Some(b)) if b > a => b - a,
        _ => span / 4.0,
    };
    let sinc = curve_fit(xs, ys, &[amp, 2.0 * SINC2_HALF_WIDTH / width, x0, ymin], sinc2_model).map(LineFit::from);
    let gauss = curve_fit(xs, ys, &[amp, width / 2.355, x0, ymin], gaussian_model).map(LineFit::from);
    let lorentz = curve_fit(xs, ys, &[amp, width / 2.0, x0, ymin], lorentzian_model).map(LineFit::from);
    (sinc, gauss, lorentz)
}

pub fn resonance_scan(site: &SiteModel, base: &RunSpec, detunings: &[f64]) -> Result<ResonanceScan> {
    let full: Vec<f64> = detunings
        .par_iter()
        .map(|&d| full_fidelity(site, &RunSpec { detuning: d, ..*base }))
        .collect::<Result<_>>()?;
    let schedule = PulseSchedule::from_fraction(site.config.time_from_omega_units(base.total_time), base.switch_fraction)?;
    let rwa: Vec<f64> = detunings
        .iter()
        .map(|&d| {
            let model = rwa_model(site, schedule, d)?;
            Ok(four_level_run(&model, &[0.0, schedule.total_time], 1e-9)?.final_fidelity())
        })
        .collect::<Result<_>>()?;
    let (s, g, l) = fit_line_shapes(detunings, &full);
    let fit_error = s.as_ref().err().map(|e| e.to_string());
    Ok(ResonanceScan {
        detunings: detunings.to_vec(),
        full,
        rwa,
        sinc2: s.ok(),
        gaussian: g.ok(),
        lorentzian: l.ok(),
        fit_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Unenforced checks are reported but do not affect the exit status.
    pub enforced: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, enforced: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            enforced,
            detail,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub final_fidelity: Option<f64>,
    pub max_leakage: Option<f64>,
    pub max_p22: Option<f64>,
    pub peak_detuning: Option<f64>,
    pub fwhm: Option<f64>,
    pub fit_r_squared: Option<f64>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid_n: usize,
    /// Time step of the 2D solver in ω⁻¹, when one was used.
    pub dt: Option<f64>,
    pub dt_factor: f64,
    pub code_version: String,
}

/// Secondary table written next to the main CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub config: RunConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Summary,
    pub provenance: Provenance,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub extra_tables: Vec<Table>,
}

impl RunReport {
    fn new(scenario: &str, cfg: &RunConfig, columns: &[&str]) -> Self {
        Self {
            scenario: scenario.to_string(),
            config: cfg.clone(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Summary::default(),
            provenance: Provenance {
                grid_n: cfg.grid_n,
                dt: None,
                dt_factor: cfg.dt_factor,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            notes: Vec::new(),
            checks: Vec::new(),
            extra_tables: Vec::new(),
        }
    }

    /// True when every enforced check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.enforced).all(|c| c.passed)
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.summary.metrics.insert(key.to_string(), value);
    }

    fn check(&mut self, name: &str, passed: bool, enforced: bool, detail: String) {
        self.checks.push(Check::new(name, passed, enforced, detail));
    }

    fn note_offset(&mut self) {
        self.notes.push(
            "the constant +V_c(t) offset of the rotated lattice is dropped from the potential (global phase)".into(),
        );
    }

    fn add_lab_units(&mut self, config: &LatticeConfig, omega_d: f64, total_time: f64) {
        if config.lab.is_some() {
            if let Ok(lab) = to_experimental(config, omega_d, config.time_from_omega_units(total_time)) {
                self.metric("lab_drive_frequency_hz", lab.f_drive_hz);
                self.metric("lab_total_time_ms", lab.t_ms);
                self.metric("lab_depth_recoils", lab.depth_in_recoils);
            }
        }
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

pub fn table_csv(columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| fmt_num(x)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub extra: Vec<PathBuf>,
}

/// Writes `<scenario>.csv`, `<scenario>.json` and any secondary tables into `dir`.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<ReportFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(format!("{}.csv", report.scenario));
    std::fs::write(&csv, table_csv(&report.columns, &report.rows)).map_err(|e| Error::io(&csv, e))?;
    let json = dir.join(format!("{}.json", report.scenario));
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    let mut extra = Vec::new();
    for t in &report.extra_tables {
        let p = dir.join(format!("{}_{}.csv", report.scenario, t.name));
        std::fs::write(&p, table_csv(&t.columns, &t.rows)).map_err(|e| Error::io(&p, e))?;
        extra.push(p);
    }
    Ok(ReportFiles { csv, json, extra })
}

/// Writes `tunneling_result.json` into `dir`.
pub fn emit_tunneling_result(result: &tunneling::TunnelingResult, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("tunneling_result.json");
    let mut text = serde_json::to_string_pretty(result)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads the summary back from an emitted JSON report.
pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    Ok(serde_json::from_value(v["summary"].clone())?)
}

// ---------------------------------------------------------------------------
// Scenarios

pub fn eigs_report(cfg: &RunConfig, dump_states: bool) -> Result<RunReport> {
    let config = cfg.lattice()?;
    let basis = solve_site_states(&config, cfg.grid_n, 8)?;
    let mut r = RunReport::new("eigs", cfg, &["n", "energy", "parity"]);
    for (n, (&e, &p)) in basis.energies.iter().zip(&basis.parities).enumerate() {
        let parity = if p == Parity::Even { 1.0 } else { -1.0 };
        r.rows.push(vec![n as f64, e / config.omega, parity]);
    }
    let bound = count_bound_states(&config)?;
    r.metric("omega_d", basis.omega_d / config.omega);
    r.metric("bound_states", bound as f64);
    r.notes.push("energies in ħω; parity +1 even, −1 odd".into());
    r.add_lab_units(&config, basis.omega_d, cfg.total_time);
    r.check("three bound states", bound >= 3, true, format!("{bound} states below V₀"));
    if dump_states {
        let mut columns = vec!["x".to_string()];
        columns.extend((0..basis.len()).map(|n| format!("gamma{n}")));
        let rows = basis
            .grid
            .iter()
            .enumerate()
            .map(|(i, &x)| std::iter::once(x).chain(basis.gammas.iter().map(|g| g[i])).collect())
            .collect();
        r.extra_tables.push(Table {
            name: "states".into(),
            columns,
            rows,
        });
    }
    Ok(r)
}

pub fn couplings_report(cfg: &RunConfig) -> Result<RunReport> {
    let mut r = RunReport::new(
        "couplings",
        cfg,
        &["v", "alpha0", "alpha2", "beta0", "beta2", "gamma0", "gamma1", "gamma2", "gamma3", "a02", "omega_d"],
    );
    let depths: Vec<f64> = (0..=24).map(|i| 2.0 + 0.25 * i as f64).collect();
    let mut sets = Vec::new();
    for &v in &depths {
        let config = cfg.lattice_at(v)?;
        let c = compute_overlaps(&solve_site_states(&config, cfg.grid_n.max(128), 6)?);
        r.rows.push(vec![
            v,
            c.alpha0,
            c.alpha2,
            c.beta0,
            c.beta2,
            c.gamma0,
            c.gamma1,
            c.gamma2,
            c.gamma3,
            c.a02 * config.omega,
            c.omega_d / config.omega,
        ]);
        sets.push(c);
    }
    r.notes.push("a02 in units of 1/(ħω); omega_d in units of ω".into());
    let decreasing = |f: &dyn Fn(&CouplingSet) -> f64| sets.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    r.check(
        "harmonic-limit trends",
        decreasing(&|c| c.alpha0) && decreasing(&|c| c.alpha2) && decreasing(&|c| -c.beta0) && decreasing(&|c| -c.beta2),
        true,
        "α₀, α₂ decrease and β₀, β₂ increase with depth".into(),
    );

    // Diagnostics at the configured depth and schedule.
    let config = cfg.lattice()?;
    let site = SiteModel::new(config, cfg.grid_n)?;
    let c = site.couplings;
    let schedule = PulseSchedule::from_fraction(config.time_from_omega_units(cfg.total_time), cfg.switch_fraction)?;
    let drive = to_physical(&schedule, &c, c.omega_d)?;
    let chi_dev = (0..=4000)
        .map(|i| schedule.total_time * i as f64 / 4000.0)
        .flat_map(|t| {
            [(0, 0), (2, 0), (0, 2), (2, 2)].map(|(n, m)| {
                (chi_phase(n, m, &drive, &c, t, ChiMode::Exact) - chi_phase(n, m, &drive, &c, t, ChiMode::SlowEnvelope))
                    .norm()
            })
        })
        .fold(0.0, f64::max);
    let ja = jacobi_anger_check(c.a02, drive.peak_envelope());
    let g_arg = g_factor([2, 0, 0, 0], &drive, &c, schedule.total_time).arg();
    let rate = c.g_rate_ratio([2, 0, 0, 0], drive.peak_v_c());
    r.metric("chi_max_deviation", chi_dev);
    r.metric("jacobi_anger_max", ja.max());
    r.metric("g2000_arg_at_t", g_arg);
    r.metric("g2000_rate_ratio", rate);
    r.metric("max_fx_over_v0", drive.peak_envelope() / config.v0);
    let enforce = cfg.enforce_reference_checks();
    r.check("slow-envelope χ", chi_dev < 0.05, enforce, format!("max |χ_exact − χ_approx| = {chi_dev:.3e}"));
    r.check("Jacobi–Anger truncation", ja.max() < 0.05, enforce, format!("max diagnostic {:.3e}", ja.max()));
    r.check(
        "G phase rate",
        rate < 0.1,
        enforce,
        format!("|Δβ²·V_c,max|/ω_d = {rate:.3e}; arg G₂₀₀₀(T) = {g_arg:.3} rad"),
    );
    Ok(r)
}

pub fn pulse_report(cfg: &RunConfig) -> Result<RunReport> {
    let config = cfg.lattice()?;
    let site = SiteModel::new(config, cfg.grid_n)?;
    let c = site.couplings;
    let schedule = PulseSchedule::from_fraction(config.time_from_omega_units(cfg.total_time), cfg.switch_fraction)?;
    let drive = to_physical(&schedule, &c, c.omega_d + cfg.drive_detuning * config.omega)?;
    let mut r = RunReport::new("pulse", cfg, &["t", "omega_x", "omega_c", "f_x", "v_c"]);
    let n = 20 * cfg.samples;
    let w = config.omega;
    let mut max_fx: f64 = 0.0;
    let mut min_vc = f64::INFINITY;
    let mut overlap: f64 = 0.0;
    for i in 0..=n {
        let t = schedule.total_time * i as f64 / n as f64;
        let (ox, oc) = (schedule.omega_x(t), schedule.omega_c(t));
        r.rows.push(vec![t * w, ox / w, oc / w, drive.f_x(t) / w, drive.v_c(t) / w]);
        max_fx = max_fx.max(drive.f_x(t).abs());
        min_vc = min_vc.min(drive.v_c(t));
        overlap = overlap.max(ox * oc);
    }
    let ax = schedule.omega_x_area(schedule.total_time);
    let ac = schedule.omega_c_area(schedule.total_time);
    r.metric("area_x", ax);
    r.metric("area_c", ac);
    r.metric("max_fx_over_v0", max_fx / config.v0);
    r.notes.push("t in ω⁻¹, rates in ω, drive amplitudes in ħω".into());
    r.note_offset();
    r.check("pulse areas", (ax - std::f64::consts::PI).abs() < 1e-10 && (ac - std::f64::consts::FRAC_PI_2).abs() < 1e-10, true, format!("areas {ax:.12}, {ac:.12}"));
    r.check("drive fraction", max_fx / config.v0 < 0.5, true, format!("max|f_x|/V₀ = {:.4}", max_fx / config.v0));
    r.check("V_c nonnegative", min_vc >= 0.0, true, format!("min V_c = {min_vc:.3e}"));
    r.check("sequential pulses", overlap == 0.0, true, "Ω_x·Ω_c vanishes".into());
    Ok(r)
}

pub fn sim4l_report(cfg: &RunConfig) -> Result<RunReport> {
    let config = cfg.lattice()?;
    let site = SiteModel::new(config, cfg.grid_n)?;
    let c = site.couplings;
    let schedule = PulseSchedule::from_fraction(config.time_from_omega_units(cfg.total_time), cfg.switch_fraction)?;
    let omega_x = c.omega_d + cfg.drive_detuning * config.omega;
    let kind = match cfg.model {
        ModelChoice::Rwa => ModelKind::Rwa { with_g_factors: true },
        ModelChoice::PreRwa => ModelKind::PreRwa,
    };
    let model = FourLevelModel::new(kind, schedule, c, omega_x)?;
    let times: Vec<f64> = (0..=cfg.samples)
        .map(|i| schedule.total_time * i as f64 / cfg.samples as f64)
        .collect();
    let tr = four_level_run(&model, &times, 1e-9)?;
    let mut r = RunReport::new("sim4l", cfg, &["t", "p00", "p20", "p02", "p22", "fidelity"]);
    for ((t, p), f) in tr.times.iter().zip(&tr.populations).zip(&tr.fidelity) {
        r.rows.push(vec![t * config.omega, p[0], p[1], p[2], p[3], *f]);
    }
    let max_p22 = tr.populations.iter().map(|p| p[3]).fold(0.0, f64::max);
    r.summary.final_fidelity = Some(tr.final_fidelity());
    r.summary.max_p22 = Some(max_p22);
    r.metric("step", tr.step * config.omega);
    r.metric("step_error", tr.step_error);
    r.add_lab_units(&config, c.omega_d, cfg.total_time);
    match cfg.model {
        ModelChoice::Rwa => {
            let resonant = cfg.drive_detuning == 0.0;
            r.check("exact transfer", (tr.final_fidelity() - 1.0).abs() < 1e-9, resonant, format!("fidelity {:.12}", tr.final_fidelity()));
            r.check("|22⟩ never populated", max_p22 < 1e-12, resonant, format!("max P22 = {max_p22:.3e}"));
        }
        ModelChoice::PreRwa => {
            r.notes.push("pre-RWA amplitudes are in the interaction frame of the four-level model".into());
            let rwa = FourLevelModel::new(ModelKind::Rwa { with_g_factors: true }, schedule, c, omega_x)?;
            let reference = four_level_run(&rwa, &[0.0, schedule.total_time], 1e-9)?;
            let overlap: num_complex::Complex64 = reference
                .final_state()
                .amplitudes
                .iter()
                .zip(&tr.final_state().amplitudes)
                .map(|(a, b)| a.conj() * b)
                .sum();
            r.metric("rwa_overlap", overlap.norm_sqr());
            r.check("agreement with RWA", overlap.norm_sqr() > 0.99, true, format!("|⟨ψ_RWA|ψ⟩|² = {:.6}", overlap.norm_sqr()));
        }
    }
    Ok(r)
}

fn population_rows(run: &PopulationRun) -> Vec<Vec<f64>> {
    run.samples
        .iter()
        .zip(&run.rwa_populations)
        .zip(&run.rwa_fidelity)
        .map(|((s, p), f)| {
            vec![
                s.t * run.omega,
                s.p00,
                s.p20,
                s.p02,
                s.p22,
                s.p40,
                s.p04,
                s.leakage,
                s.fidelity,
                s.lz,
                p[0],
                p[1],
                p[2],
                p[3],
                *f,
            ]
        })
        .collect()
}

pub fn sim2d_report(cfg: &RunConfig) -> Result<RunReport> {
    let config = cfg.lattice()?;
    let site = SiteModel::new(config, cfg.grid_n)?;
    let spec = RunSpec::from_config(cfg);
    let run = population_run_on(&site, &spec)?;
    let mut r = RunReport::new(
        "sim2d",
        cfg,
        &[
            "t", "p00", "p20", "p02", "p22", "p40", "p04", "leakage", "fidelity", "lz", "rwa_p00", "rwa_p20", "rwa_p02",
            "rwa_p22", "rwa_fidelity",
        ],
    );
    r.rows = population_rows(&run);
    r.provenance.dt = Some(run.dt * config.omega);
    r.summary.final_fidelity = Some(run.final_fidelity());
    r.summary.max_leakage = Some(run.max_leakage());
    r.summary.max_p22 = Some(run.max_p22());
    r.metric("model_agreement", run.model_agreement());
    r.metric("p40_share_at_max_leakage", run.p40_share_at_max_leakage());
    r.metric("leakage_peak_offset", run.leakage_peak_offset());
    r.metric("norm_drift", run.samples.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max));
    r.metric("steps", run.steps as f64);
    r.add_lab_units(&config, site.couplings.omega_d, cfg.total_time);
    r.note_offset();
    r.notes.push("leakage = 1 − ΣP_ij over {00, 20, 02, 22}; lz in units of ħ".into());
    let enforce = cfg.enforce_reference_checks();
    let (f, l, p) = (run.final_fidelity(), run.max_leakage(), run.max_p22());
    r.check("final fidelity", f > FIDELITY_BOUND, enforce, format!("{f:.6}"));
    r.check("leakage bound", l < LEAKAGE_BOUND, enforce, format!("max leakage {l:.3e}"));
    r.check("|22⟩ suppressed", p < P22_BOUND, enforce, format!("max P22 {p:.3e}"));
    let share = run.p40_share_at_max_leakage();
    r.check("|40⟩ dominates leakage", share >= 0.5, enforce, format!("P40 share {share:.3}"));
    let off = run.leakage_peak_offset();
    r.check("leakage at pulse maximum", off <= 1.0, enforce, format!("offset {off:.3} envelope widths"));
    if cfg.switch_fraction == 0.25 {
        let agree = run.model_agreement();
        r.check("four-level agreement", agree < 0.05, enforce, format!("sup |ΔP| = {agree:.4}"));
    }
    Ok(r)
}

pub fn ts_sweep_report(cfg: &RunConfig) -> Result<RunReport> {
    let base = RunSpec::from_config(cfg);
    let specs: Vec<RunSpec> = cfg
        .sweep
        .ts_fractions
        .iter()
        .map(|&f| RunSpec { switch_fraction: f, ..base })
        .collect();
    let runs = population_runs(&specs)?;
    let mut r = RunReport::new("sweep-ts", cfg, &["ts_fraction", "fidelity", "max_leakage", "max_p22"]);
    for run in &runs {
        r.rows.push(vec![run.spec.switch_fraction, run.final_fidelity(), run.max_leakage(), run.max_p22()]);
    }
    let fids: Vec<f64> = runs.iter().map(|r| r.final_fidelity()).collect();
    let fracs: Vec<f64> = runs.iter().map(|r| r.spec.switch_fraction).collect();
    let (best, fmax) = argmax(&fracs, &fids);
    let fmin = fids.iter().copied().fold(f64::INFINITY, f64::min);
    r.summary.final_fidelity = Some(fmax);
    r.summary.max_leakage = Some(runs.iter().map(|r| r.max_leakage()).fold(0.0, f64::max));
    r.summary.max_p22 = Some(runs.iter().map(|r| r.max_p22()).fold(0.0, f64::max));
    r.metric("fidelity_spread", fmax - fmin);
    if let Some(run) = runs.first() {
        r.provenance.dt = Some(run.dt * run.omega);
    }
    let enforce = cfg.enforce_reference_checks();
    let lookup = |f: f64| fracs.iter().position(|&x| x == f).map(|i| fids[i]);
    if let (Some(a), Some(b), Some(c), Some(d)) = (lookup(0.1), lookup(0.25), lookup(0.75), lookup(0.9)) {
        r.check("t_S/T = 0.25 best of {0.1, 0.25, 0.75, 0.9}", b > a && b > c && b > d, enforce, format!("{a:.5}, {b:.5}, {c:.5}, {d:.5}"));
        r.check("t_S/T = 0.9 worst of {0.1, 0.25, 0.75, 0.9}", d < a && d < b && d < c, enforce, format!("{a:.5}, {b:.5}, {c:.5}, {d:.5}"));
    }
    r.metric("best_ts_fraction", best);
    r.check("all fidelities above 0.96", fmin > FIDELITY_BOUND, enforce, format!("min {fmin:.5}"));
    let lmax = r.summary.max_leakage.unwrap_or(0.0);
    let pmax = r.summary.max_p22.unwrap_or(0.0);
    r.check("leakage bound in every run", lmax < LEAKAGE_BOUND, enforce, format!("max leakage {lmax:.3e}"));
    r.check("|22⟩ suppressed in every run", pmax < P22_BOUND, enforce, format!("max P22 {pmax:.3e}"));
    Ok(r)
}

pub fn tv_sweep_report(cfg: &RunConfig) -> Result<RunReport> {
    let base = RunSpec::from_config(cfg);
    let mut specs = Vec::new();
    for &v in &cfg.sweep.depths {
        for &t in &cfg.sweep.total_times {
            specs.push(RunSpec { v, total_time: t, ..base });
        }
    }
    let fids: Vec<f64> = specs
        .par_iter()
        .map(|s| full_fidelity(&SiteModel::new(cfg.lattice_at(s.v)?, s.grid_n)?, s))
        .collect::<Result<_>>()?;
    let mut r = RunReport::new("sweep-tv", cfg, &["v", "total_time", "fidelity"]);
    for (s, f) in specs.iter().zip(&fids) {
        r.rows.push(vec![s.v, s.total_time, *f]);
    }
    let lookup = |v: f64, t: f64| specs.iter().zip(&fids).find(|(s, _)| s.v == v && s.total_time == t).map(|(_, f)| *f);
    let enforce = cfg.enforce_reference_checks();
    // Non-decreasing in T beyond 400 at v = 3, within 0.005.
    let mut series: Vec<(f64, f64)> = specs
        .iter()
        .zip(&fids)
        .filter(|(s, _)| s.v == 3.0 && s.total_time >= 400.0)
        .map(|(s, f)| (s.total_time, *f))
        .collect();
    series.sort_by(|a, b| a.0.total_cmp(&b.0));
    if series.len() >= 2 {
        let ok = series.windows(2).all(|w| w[1].1 >= w[0].1 - 0.005);
        r.check("fidelity grows with T at v = 3", ok, enforce, format!("{series:?}"));
    }
    if let (Some(f3), Some(f4)) = (lookup(3.0, 750.0), lookup(4.0, 750.0)) {
        r.metric("fidelity_v3_t750", f3);
        r.metric("fidelity_v4_t750", f4);
        r.check("v = 3 beats v = 4", f3 > f4, enforce, format!("{f3:.5} vs {f4:.5}"));
    }
    if let (Some(f3), Some(f25)) = (lookup(3.0, 750.0), lookup(2.5, 750.0)) {
        r.metric("fidelity_v2.5_t750", f25);
        r.check("v = 3 beats v = 2.5", f3 > f25, enforce, format!("{f3:.5} vs {f25:.5}"));
    }
    let tmin = cfg.sweep.total_times.iter().copied().fold(f64::INFINITY, f64::min);
    let tmax = cfg.sweep.total_times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if tmin < tmax {
        for &v in &cfg.sweep.depths {
            if let (Some(a), Some(b)) = (lookup(v, tmin), lookup(v, tmax)) {
                r.check(&format!("short-time breakdown at v = {v}"), a < b, enforce, format!("F(T={tmin}) = {a:.5}, F(T={tmax}) = {b:.5}"));
            }
        }
    }
    Ok(r)
}

pub fn resonance_report(cfg: &RunConfig) -> Result<RunReport> {
    let config = cfg.lattice()?;
    let site = SiteModel::new(config, cfg.grid_n)?;
    let base = RunSpec::from_config(cfg);
    let grid = cfg.resonance.grid();
    let scan = resonance_scan(&site, &base, &grid)?;
    let mut r = RunReport::new("resonance", cfg, &["detuning", "fidelity", "rwa_fidelity", "sinc2_fit"]);
    for ((d, f), w) in scan.detunings.iter().zip(&scan.full).zip(&scan.rwa) {
        let fit = scan.sinc2.as_ref().map_or(f64::NAN, |s| sinc2_model(&s.params, *d));
        r.rows.push(vec![*d, *f, *w, fit]);
    }
    r.notes.push("detuning is (ω_x − ω_d)/ω; FWHM is measured on this dimensionless axis, whereas the 0.0427 reference width is quoted in ω⁻¹".into());
    r.note_offset();
    let enforce = cfg.enforce_reference_checks();
    let step = grid.get(1).map_or(0.0, |g| g - grid[0]);
    let rwa_peak = scan.rwa_peak();
    r.metric("rwa_peak_detuning", rwa_peak);
    r.metric("grid_peak_detuning", scan.full_grid_peak());
    r.check("four-level curve peaks at resonance", rwa_peak.abs() < 0.5 * step, true, format!("RWA argmax {rwa_peak:.4}"));
    if let Some(e) = &scan.fit_error {
        r.notes.push(format!("sinc² fit failed: {e}"));
        r.check("sinc² fit converged", false, true, e.clone());
        return Ok(r);
    }
    let s = scan.sinc2.as_ref().expect("fit present");
    r.summary.peak_detuning = scan.peak_detuning();
    r.summary.fwhm = scan.fwhm();
    r.summary.fit_r_squared = Some(s.r_squared);
    r.summary.final_fidelity = Some(argmax(&scan.detunings, &scan.full).1);
    let g2 = scan.gaussian.as_ref().map_or(f64::NEG_INFINITY, |f| f.r_squared);
    let l2 = scan.lorentzian.as_ref().map_or(f64::NEG_INFINITY, |f| f.r_squared);
    r.metric("gaussian_r_squared", g2);
    r.metric("lorentzian_r_squared", l2);
    let d0 = s.params[2];
    let fwhm = scan.fwhm().unwrap_or(f64::NAN);
    r.check("sinc² fit quality", s.r_squared >= 0.999, enforce, format!("R² = {:.6}", s.r_squared));
    r.check("peak offset", (d0 - 0.0021).abs() <= 0.001, enforce, format!("δ₀ = {d0:.5}"));
    r.check("line width", (fwhm - 0.0427).abs() <= 0.2 * 0.0427, enforce, format!("FWHM = {fwhm:.5}"));
    r.check("sinc² beats other shapes", s.r_squared > g2 && s.r_squared > l2, enforce, format!("R² sinc² {:.6}, Gaussian {g2:.6}, Lorentzian {l2:.6}", s.r_squared));
    Ok(r)
}

pub fn tunneling_report(cfg: &RunConfig) -> Result<(RunReport, tunneling::TunnelingResult)> {
    let config = cfg.lattice()?;
    let state = tunneling::localized_band2_state(&config, cfg.tunneling.cells)?;
    let dynamic = tunneling::tunneling_rate_dynamic(&config, cfg.tunneling.cells, cfg.tunneling.horizon)?;
    let quad = tunneling::tunneling_rate_quadrature(&state, &config);
    let timescale = 1.0 / dynamic.rate;
    let result = tunneling::TunnelingResult {
        v: config.v,
        n_cells: cfg.tunneling.cells,
        r2_quadrature: quad,
        r2_dynamic: dynamic.rate,
        timescale,
        timescale_ms: config.lab.map(|lab| config.time_from_omega_units(timescale) / lab.frequency_unit() * 1e3),
        central_probability: state.central_probability,
        fit_r_squared: dynamic.fit_r_squared,
    };
    let mut r = RunReport::new("tunneling", cfg, &["t", "central_population"]);
    for (t, p) in dynamic.times.iter().zip(&dynamic.central_population) {
        r.rows.push(vec![*t, *p]);
    }
    r.summary.fit_r_squared = Some(dynamic.fit_r_squared);
    r.metric("r2_quadrature", quad);
    r.metric("r2_dynamic", dynamic.rate);
    r.metric("timescale", timescale);
    r.metric("central_probability", state.central_probability);
    if let Some(ms) = result.timescale_ms {
        r.metric("timescale_ms", ms);
    }
    r.notes.push("rates in ω; r2_dynamic is the fitted hopping |J|/ħ of a tight-binding ring".into());
    let ratio = quad / dynamic.rate;
    r.check("quadrature within factor 2", (0.5..=2.0).contains(&ratio), true, format!("ratio {ratio:.3}"));
    r.check("slower than operation", timescale > cfg.total_time, true, format!("1/R₂ = {timescale:.1} ω⁻¹, T = {}", cfg.total_time));
    if (config.v - 3.5).abs() < 1e-12 {
        let dev = (dynamic.rate - 0.00157).abs() / 0.00157;
        r.check("rate at v = 3.5", dev <= 0.3, cfg.enforce_reference_checks(), format!("R₂ = {:.5} ω ({:.1}% off)", dynamic.rate, 100.0 * dev));
    }
    Ok((r, result))
}
