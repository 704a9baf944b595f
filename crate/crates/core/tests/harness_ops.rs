//! Monte-Carlo engine: determinism, stop rules, pairing, dispatch.

mod common;

use otfs_core::detector::{DetectorConfig, Kernel};
use otfs_core::harness::{
    run_ber_sweep, run_iteration_profile, run_pruning_profile, DetectorKind, ResultTable,
    SimConfig, TrialRecord,
};

/// Small integer-Doppler configuration that runs in milliseconds.
fn tiny_config() -> SimConfig {
    SimConfig {
        n_doppler: 8,
        m_delay: 16,
        l_max: 3,
        k_max: 2.0,
        fractional: false,
        snr_grid_db: vec![8.0],
        detector: DetectorConfig {
            n_i: 127,
            damping: 0.5,
            k_max_iters: 10,
            kernel: Kernel::MaxLog,
            early_stop: false,
            potential_scale: 1.0,
        },
        min_bit_errors: 50,
        max_frames: 200,
        seed: 11,
        ..SimConfig::desk_preset()
    }
}

fn strip_seconds(rows: &[TrialRecord]) -> Vec<TrialRecord> {
    rows.iter()
        .map(|r| TrialRecord {
            seconds: 0.0,
            ..r.clone()
        })
        .collect()
}

#[test]
fn rerun_with_same_seed_is_identical() {
    let cfg = tiny_config();
    let a = run_ber_sweep(&cfg).unwrap();
    let b = run_ber_sweep(&cfg).unwrap();
    assert_eq!(strip_seconds(&a.rows), strip_seconds(&b.rows));

    // Identical bytes apart from the wall-clock column.
    let strip = |table: &ResultTable| {
        table
            .to_csv()
            .lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn results_are_worker_count_independent() {
    let cfg = tiny_config();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_ber_sweep(&cfg))
        .unwrap();
    let multi = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| run_ber_sweep(&cfg))
        .unwrap();
    assert_eq!(strip_seconds(&single.rows), strip_seconds(&multi.rows));
}

#[test]
fn interference_free_channel_is_error_free_at_high_snr() {
    let cfg = SimConfig {
        num_paths: 1,
        l_max: 0,
        k_max: 0.0,
        snr_grid_db: vec![60.0],
        min_bit_errors: u64::MAX / 2,
        max_frames: 100,
        seed: 3,
        ..tiny_config()
    };
    let table = run_ber_sweep(&cfg).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].frames, 100);
    assert_eq!(table.rows[0].bit_errors, 0);
    assert_eq!(table.rows[0].ber, 0.0);
}

#[test]
fn stop_rule_is_honored() {
    // Error target reached quickly at low SNR: stops before max_frames.
    let cfg = SimConfig {
        snr_grid_db: vec![0.0],
        min_bit_errors: 10,
        max_frames: 10_000,
        ..tiny_config()
    };
    let table = run_ber_sweep(&cfg).unwrap();
    assert!(table.rows[0].bit_errors >= 10);
    assert!(table.rows[0].frames < 10_000);

    // Frame cap binds when the error target is unreachable.
    let cfg = SimConfig {
        snr_grid_db: vec![40.0],
        min_bit_errors: u64::MAX / 2,
        max_frames: 7,
        ..tiny_config()
    };
    let table = run_ber_sweep(&cfg).unwrap();
    assert_eq!(table.rows[0].frames, 7);
    assert_eq!(
        table.rows[0].bits,
        7 * cfg.bits_per_frame().unwrap()
    );
}

#[test]
fn ber_improves_with_snr() {
    let cfg = SimConfig {
        snr_grid_db: vec![4.0, 16.0],
        min_bit_errors: 100,
        max_frames: 400,
        ..tiny_config()
    };
    let table = run_ber_sweep(&cfg).unwrap();
    assert!(
        table.rows[0].ber > table.rows[1].ber,
        "ber({}) = {} vs ber({}) = {}",
        table.rows[0].snr_db,
        table.rows[0].ber,
        table.rows[1].snr_db,
        table.rows[1].ber
    );
}

#[test]
fn iteration_profile_shape_and_convergence() {
    let cfg = SimConfig {
        min_bit_errors: 100,
        max_frames: 300,
        ..tiny_config()
    };
    let table = run_iteration_profile(&cfg, 10.0, 127).unwrap();
    assert_eq!(table.rows.len(), cfg.detector.k_max_iters);
    for (k, row) in table.rows.iter().enumerate() {
        assert_eq!(row.iters, k + 1);
        assert_eq!(row.frames, table.rows[0].frames);
    }
    // More iterations never hurt on aggregate.
    let first = table.rows.first().unwrap();
    let last = table.rows.last().unwrap();
    assert!(last.bit_errors <= first.bit_errors);

    let single = SimConfig {
        detector: DetectorConfig {
            k_max_iters: 1,
            ..cfg.detector
        },
        ..cfg
    };
    let table = run_iteration_profile(&single, 10.0, 127).unwrap();
    assert_eq!(table.rows.len(), 1);
}

#[test]
fn pruning_profile_is_paired_and_clamps() {
    let cfg = SimConfig {
        snr_grid_db: vec![12.0],
        min_bit_errors: 40,
        max_frames: 300,
        ..tiny_config()
    };
    // NM-1 and an over-large request clamp to the same unpruned runs.
    let table = run_pruning_profile(&cfg, &[127, 10_000]).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.rows[0].n_i, 127);
    assert_eq!(table.rows[1].n_i, 127);
    assert_eq!(table.rows[0].bit_errors, table.rows[1].bit_errors);
    assert_eq!(table.rows[0].frames, table.rows[1].frames);
    assert!(!table.meta.warnings.is_empty());

    // Harsher pruning cannot beat full support on paired frames (up to
    // the collected error resolution).
    let table = run_pruning_profile(&cfg, &[2, 127]).unwrap();
    let by_n_i = |n_i: usize| {
        table
            .rows
            .iter()
            .find(|r| r.n_i == n_i)
            .unwrap()
            .bit_errors
    };
    assert!(by_n_i(127) <= by_n_i(2));
}

#[test]
fn profiles_require_the_lc_spa_detector() {
    let cfg = SimConfig {
        detector_kind: DetectorKind::Lmmse,
        ..tiny_config()
    };
    assert!(run_iteration_profile(&cfg, 10.0, 8).is_err());
    assert!(run_pruning_profile(&cfg, &[8]).is_err());
}

#[test]
fn alternative_detector_kinds_run() {
    let base = SimConfig {
        max_frames: 5,
        min_bit_errors: u64::MAX / 2,
        ..tiny_config()
    };
    for kind in [DetectorKind::Lmmse, DetectorKind::CanonicalSpa] {
        let cfg = SimConfig {
            detector_kind: kind,
            ..base.clone()
        };
        let table = run_ber_sweep(&cfg).unwrap();
        assert_eq!(table.rows[0].frames, 5);
        assert_eq!(table.rows[0].detector, kind.to_string());
    }

    // The exhaustive detector works on a tiny grid ...
    let cfg = SimConfig {
        n_doppler: 2,
        m_delay: 4,
        l_max: 1,
        k_max: 0.0,
        num_paths: 2,
        detector_kind: DetectorKind::MapBruteforce,
        max_frames: 3,
        min_bit_errors: u64::MAX / 2,
        snr_grid_db: vec![14.0],
        ..tiny_config()
    };
    let table = run_ber_sweep(&cfg).unwrap();
    assert_eq!(table.rows[0].frames, 3);

    // ... and refuses desk-sized ones, with context attached.
    let cfg = SimConfig {
        detector_kind: DetectorKind::MapBruteforce,
        ..base
    };
    let err = run_ber_sweep(&cfg).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("map-bruteforce"), "missing context: {msg}");
}

#[test]
fn lse_kernel_gets_per_point_noise_variance() {
    let cfg = SimConfig {
        detector: DetectorConfig {
            kernel: Kernel::LogSumExp { noise_variance: 0.0 },
            ..tiny_config().detector
        },
        max_frames: 5,
        min_bit_errors: u64::MAX / 2,
        snr_grid_db: vec![12.0, 18.0],
        ..tiny_config()
    };
    // Would fail config validation if the harness did not substitute the
    // per-point variance before building the detector.
    let table = run_ber_sweep(&cfg).unwrap();
    assert_eq!(table.rows.len(), 2);
}
