use mfdc::model::SelfInterference;
use mfdc::sensing::{
    avg_detection, conditional_arrival_pdf, detection_h01, false_alarm_h00, q_function, solve_threshold,
};
use mfdc::ChannelModel;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NO_SI: SelfInterference = SelfInterference { zeta: 0.0, xi: 1.0 };

/// Upper Gaussian tail by composite Simpson on `[x, x + 40]`.
fn tail_by_simpson(x: f64) -> f64 {
    let n = 200_000;
    let h = 40.0 / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(x) + pdf(x + 40.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(x + i as f64 * h);
    }
    s * h / 3.0
}

/// Five-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Composite Gauss-Legendre with 2000 panels, 10,000 nodes in total.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let panels = 2000;
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for &(x, w) in &GL5 {
            s += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * s
}

#[test]
fn q_function_matches_integrated_density() {
    for x in [-3.0, -1.0, 0.0, 0.5, 1.6449, 3.873, 6.0] {
        let q = q_function(x);
        assert!((q - tail_by_simpson(x)).abs() < 1e-10, "x = {x}");
    }
    assert_eq!(q_function(0.0), 0.5);
    assert!((q_function(1.6449) - 0.05).abs() < 1e-4);
    assert!(q_function(40.0) < 1e-300);
}

#[test]
fn false_alarm_example() {
    let pf = false_alarm_h00(1.05, 1e-3, 0.0, 6e6, NO_SI);
    let arg = 0.05 * 6000f64.sqrt();
    assert!((pf - tail_by_simpson(arg)).abs() < 1e-10);
    assert!((pf - 5.37e-5).abs() < 1e-7, "{pf}");
}

#[test]
fn detection_matches_transliteration() {
    // t = T_S / 2, ε = 1.01, T_S = 2 ms, f_s = 6 MHz, γ = 0.01, no self-interference
    let (t, eps, ts, fs, g): (f64, f64, f64, f64, f64) = (1e-3, 1.01, 2e-3, 6e6, 0.01);
    let frac = (ts - t) / ts;
    let num = (eps - frac * g - 1.0) * (fs * ts).sqrt();
    let den = (frac * (g + 1.0) * (g + 1.0) + t / ts).sqrt();
    let want = tail_by_simpson(num / den);
    let got = detection_h01(t, eps, ts, 0.0, fs, g, NO_SI).unwrap();
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
}

#[test]
fn adaptive_quadrature_matches_gauss_legendre() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fs = 6e6;
    for _ in 0..20 {
        let ts = rng.random_range(0.5e-3..15e-3);
        let p_sen: f64 = rng.random_range(0.0..30.0);
        let si = SelfInterference {
            zeta: rng.random_range(0.0..1.0),
            xi: rng.random_range(0.6..1.2),
        };
        let ch = ChannelModel::new(rng.random_range(0.01..1.0), 0.05, rng.random_range(0.005..0.5));
        let floor = 1.0 + si.zeta * p_sen.powf(si.xi);
        let eps = floor * rng.random_range(0.98..1.05);
        let adaptive = avg_detection(eps, ts, p_sen, fs, &ch, si).unwrap();
        let fixed = gauss_legendre(
            |t| {
                detection_h01(t, eps, ts, p_sen, fs, ch.pu_power, si).unwrap()
                    * conditional_arrival_pdf(t, ts, ch.mean_idle)
            },
            0.0,
            ts,
        );
        assert!((adaptive - fixed).abs() < 1e-7, "{adaptive} vs {fixed}");
    }
}

#[test]
fn conditional_density_integrates_to_one() {
    for (ts, tau) in [(3e-3, 1.0), (3e-3, 0.01), (20e-3, 0.05)] {
        let mass = gauss_legendre(|t| conditional_arrival_pdf(t, ts, tau), 0.0, ts);
        assert!((mass - 1.0).abs() < 1e-10);
    }
}

#[test]
fn averaged_detection_exceeds_false_alarm() {
    let si = SelfInterference { zeta: 0.2, xi: 0.95 };
    let ch = ChannelModel::new(1.0, 0.05, 0.01);
    for eps in [1.5, 1.6, 1.65, 1.7] {
        let pd = avg_detection(eps, 3e-3, 3.0, 6e6, &ch, si).unwrap();
        let pf = false_alarm_h00(eps, 3e-3, 3.0, 6e6, si);
        assert!(pd >= pf, "{eps}: {pd} < {pf}");
    }
}

#[test]
fn stricter_target_needs_lower_threshold() {
    let si = SelfInterference { zeta: 0.2, xi: 0.95 };
    let ch = ChannelModel::new(1.0, 0.05, 0.01);
    let a = solve_threshold(3e-3, 3.0, 6e6, &ch, si, 0.8).unwrap();
    let b = solve_threshold(3e-3, 3.0, 6e6, &ch, si, 0.9).unwrap();
    assert!(b.threshold < a.threshold);
    assert!(b.false_alarm > a.false_alarm);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probabilities_stay_in_unit_interval(
        eps in 0.5f64..3.0,
        ts in 1e-4f64..2e-2,
        p_sen in 0.0f64..40.0,
        zeta in 0.0f64..1.0,
        frac in 0.0f64..=1.0,
        pu in 0.0f64..1.0,
    ) {
        let si = SelfInterference { zeta, xi: 0.95 };
        let pf = false_alarm_h00(eps, ts, p_sen, 6e6, si);
        let pd = detection_h01(frac * ts, eps, ts, p_sen, 6e6, pu, si).unwrap();
        prop_assert!((0.0..=1.0).contains(&pf));
        prop_assert!((0.0..=1.0).contains(&pd));
    }

    #[test]
    fn q_is_antisymmetric(x in -8.0f64..8.0) {
        prop_assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_a_right_inverse(
        ts in 5e-4f64..2e-2,
        p_sen in 0.0f64..30.0,
        zeta in 0.0f64..1.0,
        target in 0.55f64..0.95,
    ) {
        let si = SelfInterference { zeta, xi: 0.95 };
        let ch = ChannelModel::new(0.5, 0.05, 0.01);
        let pt = solve_threshold(ts, p_sen, 6e6, &ch, si, target).unwrap();
        let back = avg_detection(pt.threshold, ts, p_sen, 6e6, &ch, si).unwrap();
        prop_assert!((back - target).abs() < 1e-8);
    }
}
