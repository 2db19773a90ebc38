use std::fs;

use semcom_core::channel::{ChannelConfig, ChannelKind};
use semcom_core::harness::{
    plot_emit, run_sweep, sweep, trial_specs, ExperimentConfig, OtTiming, PlotFilter, PlotKind, Session,
    TrialStatus,
};
use semcom_core::{Error, Framework};

fn fixed_timing() -> ExperimentConfig {
    ExperimentConfig { ot_timing: OtTiming::Fixed(0.002), ..Default::default() }
}

#[test]
fn infinite_snr_reproduces_the_reference() {
    let session = Session::new(&fixed_timing()).unwrap();
    for fw in Framework::ALL {
        let (m, trace) = session.trace_trial(fw, ChannelConfig::new(ChannelKind::Awgn, f64::INFINITY, 1), 2).unwrap();
        assert_eq!(m.kpe, 0.0, "{fw}");
        assert_eq!(trace.received, trace.transmitted, "{fw}");
        assert_eq!(trace.flagged, 0, "{fw}");
        assert!(m.p2point < 1e-6, "{fw}: {}", m.p2point);
    }
}

#[test]
fn ot_is_a_no_op_without_noise() {
    let session = Session::new(&fixed_timing()).unwrap();
    let ch = ChannelConfig::new(ChannelKind::Rician, f64::INFINITY, 4);
    for (plain, ot) in [(Framework::Gscs, Framework::GscsOt), (Framework::Gscm, Framework::GscmOt)] {
        let a = session.run_trial(plain, ch, 0).metrics.unwrap();
        let b = session.run_trial(ot, ch, 0).metrics.unwrap();
        assert_eq!((a.kpe, a.chamfer, a.p2point), (b.kpe, b.chamfer, b.p2point));
    }
}

#[test]
fn composition_policies_tie_on_geometry() {
    let session = Session::new(&fixed_timing()).unwrap();
    let ch = ChannelConfig::new(ChannelKind::Rayleigh, 10.0, 9);
    let s = session.run_trial(Framework::GscsOt, ch, 0).metrics.unwrap();
    let m = session.run_trial(Framework::GscmOt, ch, 0).metrics.unwrap();
    assert_eq!(s.kpe, m.kpe);
    assert!((s.chamfer - m.chamfer).abs() <= 1e-12 * s.chamfer.max(1.0));
    assert_eq!(s.payload_bits, m.payload_bits);
}

#[test]
fn payload_ratio_matches_the_resolution() {
    let session = Session::new(&fixed_timing()).unwrap();
    let ch = ChannelConfig::new(ChannelKind::Awgn, 10.0, 0);
    let dense = session.run_trial(Framework::ImageCom, ch, 1).metrics.unwrap();
    let gsc = session.run_trial(Framework::Gscs, ch, 1).metrics.unwrap();
    assert_eq!(dense.payload_bits / gsc.payload_bits, 1200 * 600 * 3 * 8 / 576);
    assert_eq!(dense.payload_bits % gsc.payload_bits, 0);
    let ratio = dense.latency.t_wireless / gsc.latency.t_wireless;
    assert!((ratio - 30_000.0).abs() < 1e-6, "{ratio}");
    // Frame 0 also carries the knowledge base.
    let first = session.run_trial(Framework::Gscs, ch, 0).metrics.unwrap();
    assert_eq!(first.payload_bits, gsc.payload_bits + session.knowledge_base().bit_size());
}

fn small_grid() -> ExperimentConfig {
    ExperimentConfig {
        frameworks: vec![Framework::Gscs, Framework::GscmOt],
        snr_list_db: vec![5.0],
        trials: 10,
        ..fixed_timing()
    }
}

#[test]
fn grid_has_one_row_per_trial() {
    let cfg = small_grid();
    assert_eq!(trial_specs(&cfg).len(), 2 * 3 * 10);
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().all(|r| r.status != TrialStatus::Error));
}

#[test]
fn sweep_output_is_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_grid();
    let first = sweep(&cfg, &dir.path().join("a")).unwrap();
    cfg.workers = Some(1);
    let second = sweep(&cfg, &dir.path().join("b")).unwrap();
    for (x, y) in [(&first.runs_csv, &second.runs_csv), (&first.summary_csv, &second.summary_csv)] {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    assert_eq!(first.ok_rows, 60);
}

#[test]
fn trials_do_not_depend_on_their_neighbours() {
    let cfg = small_grid();
    let rows = run_sweep(&cfg).unwrap();
    let specs = trial_specs(&cfg);
    let session = Session::new(&cfg).unwrap();
    for i in [0, 17, 59] {
        let alone = session.run_trial(specs[i].framework, specs[i].channel, specs[i].frame);
        assert_eq!(alone, rows[i]);
    }
}

#[test]
fn plots_have_one_legend_entry_per_framework() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        frameworks: vec![Framework::ImageCom, Framework::Gscs, Framework::GscsOt],
        channels: vec![ChannelKind::Rician],
        snr_list_db: vec![0.0, 10.0],
        trials: 2,
        ..fixed_timing()
    };
    let out = sweep(&cfg, dir.path()).unwrap();
    let files = plot_emit(&out.runs_csv, PlotKind::Kpe, dir.path(), &PlotFilter::default()).unwrap();
    assert_eq!(files, vec![dir.path().join("kpe_rician.svg")]);
    let svg = fs::read_to_string(&files[0]).unwrap();
    assert_eq!(svg.matches("class=\"legend-entry\"").count(), 3);

    let filter = PlotFilter { channels: Some(vec![ChannelKind::Awgn]), ..Default::default() };
    let err = plot_emit(&out.runs_csv, PlotKind::Latency, dir.path(), &filter).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(!dir.path().join("latency_awgn.svg").exists());
}
