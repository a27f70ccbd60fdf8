use std::path::Path;

use cvqkd::catalog::Catalog;
use cvqkd::io::alist::{load_alist, save_alist};
use cvqkd::io::frames::{load_frames, save_frames};
use cvqkd::io::keyfile::{save_key, sidecar_path, KeySidecar};
use cvqkd::io::llr::{load_llrs, save_llrs};
use cvqkd::pipeline::{decode_saved, simulate_block};
use cvqkd::{LabError, SessionConfig};
use cvqkd_core::ldpc::{generate_code, MetEnsemble};

#[test]
fn exported_catalog_loads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cat = Catalog::builtin(11, 3).unwrap();
    cat.export(dir.path()).unwrap();
    let back = Catalog::load(&dir.path().join("catalog.txt")).unwrap();
    assert_eq!(back.entries.len(), cat.entries.len());
    for (a, b) in cat.entries.iter().zip(&back.entries) {
        assert_eq!(a.code, b.code);
        assert_eq!(a.descriptor.code_id, b.descriptor.code_id);
        assert_eq!(a.descriptor.snr_threshold, b.descriptor.snr_threshold);
        assert!((a.descriptor.rate - b.descriptor.rate).abs() < 1e-12);
    }
}

#[test]
fn manifest_rate_mismatch_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = generate_code(&MetEnsemble::rate_0_5(), 512, 1).unwrap();
    save_alist(&code, &dir.path().join("c.alist")).unwrap();
    let manifest = dir.path().join("catalog.txt");
    std::fs::write(&manifest, "# one code\nc c.alist 0.25 1.3\n").unwrap();
    let e = Catalog::load(&manifest).unwrap_err();
    assert!(matches!(e, LabError::Format { .. }), "{e:?}");
    assert_eq!(e.exit_code(), 3);
    std::fs::write(&manifest, "c c.alist 0.5 1.3\nc c.alist 0.5 1.3\n").unwrap();
    match Catalog::load(&manifest).unwrap_err() {
        LabError::Parse { line, .. } => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn corrupted_alist_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.alist");
    let code = generate_code(&MetEnsemble::rate_0_5(), 256, 2).unwrap();
    save_alist(&code, &path).unwrap();
    assert_eq!(load_alist(&path).unwrap(), code);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[5] = "x y z".into();
    std::fs::write(&path, lines.join("\n")).unwrap();
    match load_alist(&path).unwrap_err() {
        LabError::Parse { line, .. } => assert_eq!(line, 6),
        other => panic!("{other:?}"),
    }
    assert!(matches!(load_alist(Path::new("/nonexistent/c.alist")), Err(LabError::Io { .. })));
}

#[test]
fn saved_frames_decode_like_fresh_ones() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SessionConfig::default();
    cfg.set("distance_km", "25").unwrap();
    cfg.xi_true = 0.01;
    cfg.seed = 21;
    let cat = Catalog::builtin(12, 1).unwrap();
    let index = cat.entries.iter().position(|e| e.descriptor.code_id.starts_with("irr-r0.25")).unwrap();
    let frames = simulate_block(200_000, 3.0, &cfg, 21).unwrap();
    let path = dir.path().join("pulses.frm");
    save_frames(&frames, &path).unwrap();
    let loaded = load_frames(&path).unwrap();
    assert_eq!(loaded, frames);

    let a = decode_saved(&frames, &cat, index, &cfg).unwrap();
    let b = decode_saved(&loaded, &cat, index, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.frames >= 10);
    assert_eq!(a.llrs.len(), a.frames * 4096);
    assert!((a.estimate.t_hat - cfg.transmittance()).abs() < 0.02);
    // eta T v_a / (1 + v_el + eta T xi) at 25 km.
    assert!((a.snr_hat - 0.5151).abs() < 0.02, "{}", a.snr_hat);

    let llr_path = dir.path().join("alice.llr");
    save_llrs(&a.llrs, &llr_path).unwrap();
    let back = load_llrs(&llr_path).unwrap();
    assert_eq!(back.len(), a.llrs.len());
    for (x, y) in a.llrs.iter().zip(&back) {
        assert_eq!(*x as f32 as f64, *y);
    }
}

#[test]
fn truncated_frame_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SessionConfig::default();
    let frames = simulate_block(100, 2.0, &cfg, 1).unwrap();
    let path = dir.path().join("p.frm");
    save_frames(&frames, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    assert_eq!(load_frames(&path).unwrap_err().exit_code(), 3);
    std::fs::write(&path, b"NOTFRAME").unwrap();
    assert_eq!(load_frames(&path).unwrap_err().exit_code(), 3);
}

#[test]
fn key_file_has_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("key.bin");
    let side = KeySidecar {
        session_id: "s1".into(),
        l_out: 12,
        seed: 99,
        n_corrected: 4096,
        leak_ec: 1088,
        frames_used: 1,
        frames_discarded: 0,
    };
    save_key(&[0xab, 0x0c], &side, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), vec![0xab, 0x0c]);
    let text = std::fs::read_to_string(sidecar_path(&path)).unwrap();
    assert!(text.contains("l_out = 12\n"));
    assert!(text.contains("leak_ec = 1088\n"));
}

#[test]
fn config_file_round_trips_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cfg");
    std::fs::write(&path, "loss_db = 10.6\nxi_true = 0.002\npa_mode = finite\nseed = 4\n").unwrap();
    let c = SessionConfig::load(&path).unwrap();
    assert_eq!(c.loss_db, 10.6);
    assert_eq!(c.seed, 4);
    assert_eq!(SessionConfig::load(&dir.path().join("none.cfg")).unwrap_err().exit_code(), 1);
}
