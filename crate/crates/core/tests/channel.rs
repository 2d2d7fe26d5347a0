//! Link budget, sampling and key-rate bounds against direct formulas.

use sbrecon::channel::{
    awgn_sample, link_budget, mutual_information, snr_for_information, solve_va, Detection,
    SystemParams,
};
use sbrecon::security::{
    distance_to_zero_skr, finite_size_penalty, plob_bound, skr_at_distance, DetectorTrust,
    FiniteSizeParams, OperatingPoint,
};

#[test]
fn homodyne_snr_follows_the_link_equation() {
    for (d, v_a) in [(0.0, 1.0), (50.0, 3.0), (140.0, 0.2)] {
        let p = SystemParams::default().at_distance(d).with_va(v_a);
        let t = 10f64.powf(-0.2 * d / 10.0);
        let want = 0.6 * t * v_a / (1.0 + 0.01 + 0.6 * t * 0.001);
        let got = link_budget(&p).unwrap();
        assert!((got.snr - want).abs() < 1e-15 * want.max(1.0));
        assert!((got.sigma_z2 * got.snr - 1.0).abs() < 1e-15);
    }
}

#[test]
fn sample_moments_match_the_model() {
    let snr = 0.25;
    let q = awgn_sample(400_000, snr, 3).unwrap();
    let n = q.len() as f64;
    let x2 = q.x.iter().map(|x| x * x).sum::<f64>() / n;
    let z2 = q.x.iter().zip(&q.y).map(|(x, y)| (y - x).powi(2)).sum::<f64>() / n;
    let xz = q.x.iter().zip(&q.y).map(|(x, y)| x * (y - x)).sum::<f64>() / n;
    assert!((x2 - 0.5).abs() < 0.005);
    assert!((z2 / (q.sigma_z2 / 2.0) - 1.0).abs() < 0.01);
    assert!(xz.abs() < 0.01);
    assert_eq!(awgn_sample(10, snr, 3).unwrap(), awgn_sample(10, snr, 3).unwrap());
}

#[test]
fn modulation_variance_hits_the_target_information() {
    for detection in [Detection::Homodyne, Detection::Heterodyne] {
        for d in [5.0, 60.0, 150.0] {
            let p = SystemParams {
                detection,
                ..SystemParams::default()
            }
            .at_distance(d);
            let target = 0.02 / 0.95;
            let va = solve_va(&p, target).unwrap();
            let snr = link_budget(&p.with_va(va)).unwrap().snr;
            assert!((detection.mutual_information(snr) - target).abs() < 1e-12);
        }
    }
    let i = mutual_information(0.03);
    assert!((snr_for_information(i) - 0.03).abs() < 1e-15);
}

#[test]
fn key_rate_respects_plob_and_devetak_winter() {
    let op = OperatingPoint {
        rate: 0.02,
        beta_code: 0.99,
        r_out: 0.999,
        fer: 0.5,
        n_privacy: 1e10,
        eps: FiniteSizeParams::default(),
        trust: DetectorTrust::Trusted,
    };
    let sys = SystemParams::default();
    for d in (1..=16).map(|i| 10.0 * i as f64) {
        let r = skr_at_distance(&sys.at_distance(d), &op).unwrap();
        assert!(r.skr <= r.plob_bound, "{d} km");
        assert!(r.skr <= r.dw_bound + 1e-15, "{d} km");
        assert!((r.plob_bound - plob_bound(sys.at_distance(d).transmittance()).unwrap()).abs() < 1e-15);
        let direct = (1.0 - op.fer) * (r.beta * r.i_ab - r.chi_be - r.delta_n);
        assert!((r.skr_raw - direct).abs() < 1e-15);
    }
    let reach = distance_to_zero_skr(&sys, &op, 1.0, 400.0).unwrap();
    assert!(skr_at_distance(&sys.at_distance(reach - 0.01), &op).unwrap().skr_raw > 0.0);
    assert!(skr_at_distance(&sys.at_distance(reach + 0.01), &op).unwrap().skr_raw <= 0.0);
}

#[test]
fn finite_size_penalty_formula() {
    let eps = FiniteSizeParams::default();
    let n = 1e10;
    let want = 7.0 * ((2.0 / 1e-10f64).log2() / n).sqrt() + 2.0 / n * (1e10f64).log2();
    assert!((finite_size_penalty(n, eps).unwrap() - want).abs() < 1e-18);
    assert!(finite_size_penalty(1e3, eps).is_err());
}
