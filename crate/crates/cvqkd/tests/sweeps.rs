use cvqkd::sweep::{frontier, sweep_figure2, sweep_figure3, SweepMode, FIGURE2_MODES};
use cvqkd::SessionConfig;

fn template(xi: f64) -> SessionConfig {
    SessionConfig {
        xi_true: xi,
        ..SessionConfig::default()
    }
}

#[test]
fn finite_rates_reach_80_km_at_low_noise() {
    for xi in [0.0, 0.001, 0.002] {
        let s = sweep_figure2(&template(xi), &[25.0, 53.0, 80.5], &FIGURE2_MODES, 0.95).unwrap();
        assert_eq!(s.table.rows.len(), 3);
        assert!(s.ordering_violations.is_empty(), "xi {xi}: {:?}", s.ordering_violations);
        let fin = s.table.column("rate_fin_1e9").unwrap();
        assert!(fin.iter().all(|&r| r > 0.0), "xi {xi}: {fin:?}");
        let asym = s.table.column("rate_asymptotic").unwrap();
        let fin8 = s.table.column("rate_fin_1e8").unwrap();
        for i in 0..3 {
            assert!(asym[i] > fin[i] && fin[i] > fin8[i]);
        }
    }
}

#[test]
fn rates_fall_with_distance() {
    let s = sweep_figure2(&template(0.002), &[25.0, 53.0, 80.5], &FIGURE2_MODES, 0.95).unwrap();
    for col in ["rate_asymptotic", "rate_fin_1e9", "rate_fin_1e8"] {
        let r = s.table.column(col).unwrap();
        assert!(r[0] > r[1] && r[1] > r[2], "{col}: {r:?}");
    }
}

#[test]
fn no_key_at_53_km_with_blocks_of_a_million() {
    let s = sweep_figure2(&template(0.0), &[53.0], &[SweepMode::Finite(1_000_000)], 0.95).unwrap();
    let r = s.table.column("rate_fin_1e6").unwrap();
    assert!(r[0] <= 0.0, "{r:?}");
}

#[test]
fn frontier_shrinks_with_distance() {
    let t = frontier(&template(0.0), &[25.0, 53.0, 80.5], SweepMode::Asymptotic, 0.95).unwrap();
    let xi = t.column("xi_max").unwrap();
    assert!(xi[0] > xi[1] && xi[1] > xi[2] && xi[2] > 0.0, "{xi:?}");
}

fn noise_config(xi: f64, seed: u64) -> SessionConfig {
    let mut cfg = template(xi);
    cfg.set("distance_km", "53").unwrap();
    cfg.seed = seed;
    cfg
}

#[test]
fn worst_case_gap_scales_as_inverse_root_m() {
    let s = sweep_figure3(&noise_config(0.005, 1), 4.0, &[1_000_000, 100_000_000], 20, 0.95).unwrap();
    let ratio = s.mean_gap(1_000_000) / s.mean_gap(100_000_000);
    assert!((ratio - 10.0).abs() < 0.5, "gap ratio {ratio}");
}

#[test]
fn excess_noise_estimate_is_unbiased_at_zero() {
    let m = 100_000u64;
    let reps = 40;
    let cfg = noise_config(0.0, 2);
    let s = sweep_figure3(&cfg, 4.0, &[m], reps, 0.95).unwrap();
    let xs: Vec<f64> = s.at(m).map(|p| p.xi_hat).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
    let se = (var / xs.len() as f64).sqrt();
    assert!(mean.abs() < 4.0 * se, "mean {mean}, se {se}");
}

#[test]
fn blocks_of_1e8_stay_below_the_frontier_at_53_km() {
    let s = sweep_figure3(&noise_config(0.005, 3), 4.0, &[100_000_000], 20, 0.95).unwrap();
    assert_eq!(s.points.len(), 20);
    for p in &s.points {
        assert!(p.positive(), "{p:?}");
    }
    let t = s.table();
    assert_eq!(t.header[0], "m");
    assert_eq!(t.rows.len(), 20);
}
