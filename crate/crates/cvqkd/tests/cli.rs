use std::path::Path;
use std::process::{Command, Output};

use cvqkd_core::gf2::{pack_bits, unpack_bits};
use cvqkd_core::privamp::{toeplitz_hash_packed, ToeplitzSeed};

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

#[test]
fn unknown_key_is_a_config_error() {
    let o = cvqkd(&["simulate", "--seed", "1", "--set", "bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cvqkd(&["simulate", "--seed", "1", "--set", "rep_rate=0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_seed_is_rejected() {
    let o = cvqkd(&["simulate", "--pulses", "1000"]);
    assert!(!o.status.success());
}

#[test]
fn malformed_config_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    std::fs::write(&cfg, "pulses = 1e5\nxi_true 0.01\n").unwrap();
    let o = cvqkd(&["simulate", "--seed", "1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2"));
}

#[test]
fn session_without_estimation_pairs_is_an_estimation_error() {
    let o = cvqkd(&["simulate", "--seed", "1", "--pulses", "2e5", "--set", "param_est_fraction=0"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn simulate_writes_matching_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = cvqkd(&[
        "simulate",
        "--seed",
        "3",
        "--distance-km",
        "25",
        "--xi-true",
        "0.01",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "keys_identical"), "true");
    assert_eq!(value(&text, "accounting_balanced"), "true");
    let alice = std::fs::read(out.join("key_alice.bin")).unwrap();
    let bob = std::fs::read(out.join("key_bob.bin")).unwrap();
    assert_eq!(alice, bob);
    let l_out: usize = value(&text, "final_key_len").parse().unwrap();
    assert!(l_out > 0);
    assert_eq!(alice.len(), l_out.div_ceil(8));
    let side = std::fs::read_to_string(out.join("key_alice.bin.txt")).unwrap();
    assert_eq!(value(&side, "l_out"), l_out.to_string());
    let csv = std::fs::read_to_string(out.join("estimates.csv")).unwrap();
    assert!(csv.starts_with("block_id,m,t_hat,sigma2_hat,xi_hat,t_min,xi_max,eps_pe\n"));
    assert_eq!(std::fs::read_to_string(out.join("report.txt")).unwrap(), text);
}

#[test]
fn hash_command_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    let output = dir.path().join("out.bin");
    let bytes: Vec<u8> = (0..4096u32).map(|i| (i.wrapping_mul(2654435761) >> 13) as u8).collect();
    std::fs::write(&input, &bytes).unwrap();
    let o = cvqkd(&[
        "hash",
        "--seed",
        "77",
        "--input",
        input.to_str().unwrap(),
        "--out-bits",
        "1000",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bits: Vec<u8> = bytes.iter().flat_map(|b| (0..8).map(move |i| (b >> i) & 1)).collect();
    let seed = ToeplitzSeed::new(77, bits.len(), 1000).unwrap();
    let expected = unpack_bits(&toeplitz_hash_packed(&pack_bits(&bits), &seed).unwrap(), 1000);
    let got: Vec<u8> = std::fs::read(&output)
        .unwrap()
        .iter()
        .flat_map(|b| (0..8).map(move |i| (b >> i) & 1))
        .take(1000)
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn exported_catalog_is_accepted_back() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("codes");
    let first = cvqkd(&["codes", "--seed", "1", "--export", export.to_str().unwrap()]);
    assert!(first.status.success());
    let manifest = export.join("catalog.txt");
    let second = cvqkd(&["codes", "--seed", "1", "--catalog", manifest.to_str().unwrap()]);
    assert!(second.status.success());
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(stdout(&first).lines().count(), 5);
    std::fs::write(&manifest, "only three fields\n").unwrap();
    let bad = cvqkd(&["codes", "--seed", "1", "--catalog", manifest.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn frames_file_decodes_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("p.frm");
    let llr = dir.path().join("a.llr");
    let o = cvqkd(&[
        "simulate",
        "--seed",
        "5",
        "--distance-km",
        "25",
        "--pulses",
        "6e5",
        "--frames-out",
        frames.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let code = value(&stdout(&o), "code").to_string();
    let o = cvqkd(&[
        "decode",
        "--seed",
        "5",
        "--distance-km",
        "25",
        "--frames",
        frames.to_str().unwrap(),
        "--llr-out",
        llr.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "code"), code);
    let n: usize = value(&text, "frames").parse().unwrap();
    assert!(n >= 1);
    assert_eq!(std::fs::metadata(&llr).unwrap().len() as usize, 4 * n * 65536);
    let missing = cvqkd(&["decode", "--seed", "5", "--frames", dir.path().join("none").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn rate_sweep_writes_a_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let front = dir.path().join("frontier.csv");
    let o = cvqkd(&[
        "sweep-rates",
        "--seed",
        "1",
        "--xi-true",
        "0.002",
        "--distances",
        "25,53,80.5",
        "--out",
        out.to_str().unwrap(),
        "--frontier-out",
        front.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("distance_km,loss_db,v_a,snr,i_ab,chi_be,rate_asymptotic,rate_fin_1e9,rate_fin_1e8,xi_assumed\n"));
    assert!(Path::new(&front).exists());
    let bad = cvqkd(&["sweep-noise", "--seed", "1", "--v-a", "4", "--reps", "3"]);
    assert_eq!(bad.status.code(), Some(2));
}
