use orbital_forge::config::RunConfig;
use orbital_forge::experiments::{
    eigs_report, emit_report, fit_line_shapes, pulse_report, read_summary, sim2d_report, sim4l_report, table_csv,
    RunReport,
};
use orbital_forge::fit::sinc2_model;
use proptest::prelude::*;

fn emit_twice(report: impl Fn() -> RunReport) {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = emit_report(&report(), a.path()).unwrap();
    let fb = emit_report(&report(), b.path()).unwrap();
    assert_eq!(std::fs::read(&fa.csv).unwrap(), std::fs::read(&fb.csv).unwrap());
    assert_eq!(std::fs::read(&fa.json).unwrap(), std::fs::read(&fb.json).unwrap());
}

#[test]
fn identical_configs_give_identical_files() {
    let cfg = RunConfig::smoke();
    emit_twice(|| eigs_report(&cfg, true).unwrap());
    emit_twice(|| pulse_report(&cfg).unwrap());
    emit_twice(|| sim4l_report(&cfg).unwrap());
    let short = RunConfig {
        total_time: 60.0,
        samples: 5,
        ..RunConfig::smoke()
    };
    emit_twice(|| sim2d_report(&short).unwrap());
}

#[test]
fn json_round_trip() {
    let cfg = RunConfig::smoke();
    let report = sim4l_report(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&report, dir.path()).unwrap();
    let text = std::fs::read_to_string(&files.json).unwrap();
    let back: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, RunReport { extra_tables: Vec::new(), ..report.clone() });
    assert_eq!(read_summary(&files.json).unwrap(), report.summary);

    let csv = std::fs::read_to_string(&files.csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,p00,p20,p02,p22,fidelity");
    let parsed: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(parsed, report.rows);
}

#[test]
fn state_dump_is_written() {
    let cfg = RunConfig::smoke();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&eigs_report(&cfg, true).unwrap(), dir.path()).unwrap();
    assert_eq!(files.extra.len(), 1);
    let text = std::fs::read_to_string(&files.extra[0]).unwrap();
    assert!(text.starts_with("x,gamma0,"));
    assert_eq!(text.lines().count(), cfg.grid_n + 1);
}

#[test]
fn empty_report_has_header_only() {
    let mut report = eigs_report(&RunConfig::smoke(), false).unwrap();
    report.rows.clear();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&report, dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(&files.csv).unwrap(), "n,energy,parity\n");
    assert_eq!(table_csv(&[], &[]), "\n");
}

#[test]
fn line_shape_fit_failure_is_reported() {
    let xs = [0.0, 1.0, 2.0];
    let ys = [1.0, 2.0, 3.0];
    let (s, g, l) = fit_line_shapes(&xs, &ys);
    assert!(s.is_err() && g.is_err() && l.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sinc2_parameters_recovered(
        a in 0.3f64..1.0,
        width in 0.02f64..0.06,
        d0 in -0.005f64..0.005,
        c in 0.0f64..0.1,
    ) {
        let b = 2.0 * 1.391_557_378_251_51 / width;
        let truth = [a, b, d0, c];
        let xs: Vec<f64> = (0..31).map(|i| -0.03 + 0.002 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| sinc2_model(&truth, x)).collect();
        let (s, _, _) = fit_line_shapes(&xs, &ys);
        let fit = s.unwrap();
        prop_assert!((fit.params[2] - d0).abs() < 1e-7, "{:?}", fit.params);
        prop_assert!((fit.params[1].abs() - b).abs() < 1e-6 * b);
        prop_assert!(fit.r_squared > 1.0 - 1e-10);
    }
}
