use std::f64::consts::PI;

use isrs_gn::gn_engine::*;
use isrs_gn::scenario::*;
use isrs_gn::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ssmf(cr: f64) -> FiberSpec {
    FiberSpec {
        raman_slope_cr: cr,
        ..FiberSpec::ssmf()
    }
}

fn small_link(count: usize, power_dbm: f64, spans: &[f64], cr: f64) -> Link {
    build_ptp_scenario(&ChannelGrid::new(count, 0.05, 32.0).unwrap(), power_dbm, spans, ssmf(cr)).unwrap()
}

/// Single-span GN link function with pure attenuation.
fn closed_form(alpha: f64, rate: f64, length: f64) -> Complex64 {
    let s = Complex64::new(-alpha, rate);
    ((s * length).exp() - 1.0) / s
}

#[test]
fn no_raman_kernel_matches_closed_form() {
    let link = small_link(3, 2.0, &[80.0, 95.0], 0.0);
    let fiber = ssmf(0.0);
    let disp = dispersion_coeffs(&fiber);
    let alpha = fiber.alpha_np_per_km();
    let g = link.spans()[0].load.channel_psd(0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let f = rng.random_range(-0.066..0.066);
        let f1 = rng.random_range(-0.066..0.066);
        let f2 = rng.random_range(-0.066..0.066);
        if link.spans()[0].load.psd(f) == 0.0
            || link.spans()[0].load.psd(f1) == 0.0
            || link.spans()[0].load.psd(f2) == 0.0
            || link.spans()[0].load.psd(f1 + f2 - f) == 0.0
        {
            continue;
        }
        let rate = disp.mismatch_rate(f1, f2, f);
        for k in 0..2 {
            let offset = Complex64::from_polar(1.0, rate * link.cumulative_km(k));
            let want = g * offset * closed_form(alpha, rate, link.spans()[k].length_km);
            let got = span_kernel(&link, k, f1, f2, f).unwrap();
            assert!((got - want).norm() <= 1e-6 * want.norm(), "{got} vs {want}");
        }
    }
}

#[test]
fn kernel_is_symmetric_in_pump_frequencies() {
    let link = build_ptp_scenario(&ChannelGrid::c_plus_l(), 0.0, &[100.0, 80.0, 120.0], ssmf(0.028)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let f = rng.random_range(-5.0..5.0);
        let f1 = rng.random_range(-5.0..5.0);
        let f2 = rng.random_range(-5.0..5.0);
        for k in 0..3 {
            let a = span_kernel(&link, k, f1, f2, f).unwrap();
            let b = span_kernel(&link, k, f2, f1, f).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
        }
    }
}

#[test]
fn span_kernel_rejects_bad_span_index() {
    let link = small_link(1, 0.0, &[80.0], 0.0);
    assert!(matches!(span_kernel(&link, 1, 0.0, 0.0, 0.0), Err(Error::SpanOutOfRange { .. })));
}

/// Single channel, single span, no ISRS: G(f) by brute-force Gauss-Legendre
/// product quadrature of the closed-form link function.
fn textbook_single_channel(power_w: f64, rate_gbd: f64, length: f64, f: f64, panels: usize) -> f64 {
    let fiber = ssmf(0.0);
    let disp = dispersion_coeffs(&fiber);
    let alpha = fiber.alpha_np_per_km();
    let b = rate_gbd / 1000.0;
    let g = power_w / b;
    let x = [-0.861_136_311_594_053, -0.339_981_043_584_856, 0.339_981_043_584_856, 0.861_136_311_594_053];
    let w = [0.347_854_845_137_454, 0.652_145_154_862_546, 0.652_145_154_862_546, 0.347_854_845_137_454];
    let h = b / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            let f1 = -0.5 * b + (i as f64 + 0.5 + 0.5 * xi) * h;
            for j in 0..panels {
                for (xj, wj) in x.iter().zip(&w) {
                    let f2 = -0.5 * b + (j as f64 + 0.5 + 0.5 * xj) * h;
                    let f3 = f1 + f2 - f;
                    if f3.abs() >= 0.5 * b {
                        continue;
                    }
                    let rate = disp.mismatch_rate(f1, f2, f);
                    acc += wi * wj * 0.25 * h * h * closed_form(alpha, rate, length).norm_sqr();
                }
            }
        }
    }
    16.0 / 27.0 * fiber.gamma * fiber.gamma * g * g * g * acc
}

#[test]
fn single_channel_matches_textbook_integral() {
    let link = small_link(1, 3.0, &[80.0], 0.0);
    let p = link.spans()[0].load.power_w(0);
    for f in [0.0, 0.011] {
        let want = textbook_single_channel(p, 32.0, 80.0, f, 400);
        let got = nli_psd(&link, f, &QuadratureSpec::production()).unwrap();
        assert!(((got - want) / want).abs() < 2e-3, "f={f}: {got} vs {want}");
    }
}

#[test]
fn hyperbolic_agrees_with_cartesian_reference() {
    let link = small_link(3, 3.0, &[80.0, 100.0], 0.028);
    let hyp = nli_psd(&link, 0.003, &QuadratureSpec::production()).unwrap();
    let cart = nli_psd(&link, 0.003, &QuadratureSpec::cartesian_oracle(256)).unwrap();
    assert!(((hyp - cart) / cart).abs() < 0.02, "{hyp} vs {cart}");
}

#[test]
fn zero_nonlinearity_gives_zero() {
    let mut fiber = ssmf(0.028);
    fiber.gamma = 0.0;
    let link = build_ptp_scenario(&ChannelGrid::new(3, 0.05, 32.0).unwrap(), 0.0, &[80.0], fiber).unwrap();
    assert_eq!(nli_psd(&link, 0.0, &QuadratureSpec::production()).unwrap(), 0.0);
}

#[test]
fn unoccupied_test_frequency_is_an_error() {
    let link = small_link(3, 0.0, &[80.0], 0.0);
    // guard band between 32 GBd channels on a 50 GHz grid
    assert!(matches!(
        nli_psd(&link, 0.02, &QuadratureSpec::production()),
        Err(Error::Unoccupied { .. })
    ));
    let grid = ChannelGrid::new(3, 0.05, 32.0).unwrap();
    let load = SpectralLoad::new(grid, vec![1e-3, 0.0, 1e-3]).unwrap();
    let link = Link::new(vec![Span { length_km: 80.0, fiber: ssmf(0.0), load }]).unwrap();
    assert!(integrate_channel(&link, 1, &QuadratureSpec::production()).is_err());
    assert!(matches!(
        integrate_channel(&link, 5, &QuadratureSpec::production()),
        Err(Error::ChannelOutOfRange { .. })
    ));
}

#[test]
fn quadrature_spec_validation() {
    let link = small_link(1, 0.0, &[80.0], 0.0);
    let coarse = QuadratureSpec::production().with_nodes(4);
    assert!(nli_psd(&link, 0.0, &coarse).is_err());
    let narrow = QuadratureSpec {
        band: Some((-0.01, 0.01)),
        ..QuadratureSpec::production()
    };
    assert!(nli_psd(&link, 0.0, &narrow).is_err());
    let wide = QuadratureSpec {
        band: Some((-0.1, 0.1)),
        ..QuadratureSpec::production()
    };
    let a = nli_psd(&link, 0.0, &wide).unwrap();
    let b = nli_psd(&link, 0.0, &QuadratureSpec::production()).unwrap();
    assert!(((a - b) / b).abs() < 1e-6);
}

#[test]
fn coherent_accumulation_bounds() {
    let one = small_link(3, 0.0, &[80.0], 0.0);
    let q = QuadratureSpec::production();
    let g1 = nli_psd(&one, 0.0, &q).unwrap();
    for n in 2..=4 {
        let link = small_link(3, 0.0, &vec![80.0; n], 0.0);
        let g = nli_psd(&link, 0.0, &q).unwrap();
        let nf = n as f64;
        assert!(g >= nf * g1 && g <= nf * nf * g1, "{n}: {g} vs {g1}");
    }
}

#[test]
fn one_point_channel_rule_is_center_value() {
    let link = small_link(3, 0.0, &[80.0, 80.0], 0.028);
    let q = QuadratureSpec::reduced().with_channel_points(1);
    let c = link.grid().center(2);
    let g = nli_psd(&link, c, &q).unwrap();
    let s = integrate_channel(&link, 2, &q).unwrap();
    assert!((s - g * 0.032).abs() <= 1e-14 * s);
}

#[test]
fn channel_rule_self_convergence() {
    let grid = ChannelGrid::new(5, 0.0125, 10.0).unwrap();
    let link = build_ptp_scenario(&grid, 0.0, &[80.0, 80.0], ssmf(0.028)).unwrap();
    let q = QuadratureSpec::production();
    let m1 = integrate_channel(&link, 2, &q.clone().with_channel_points(1)).unwrap();
    let m3 = integrate_channel(&link, 2, &q.clone().with_channel_points(3)).unwrap();
    let m7 = integrate_channel(&link, 2, &q.with_channel_points(7)).unwrap();
    // the NLI PSD falls by about a fifth toward the channel edges, so the
    // center value alone overestimates by a few percent
    assert!(((m3 - m7) / m7).abs() < 0.02, "{m3} vs {m7}");
    assert!(m1 > m7 && ((m1 - m7) / m7) < 0.08, "{m1} vs {m7}");
}

#[test]
fn no_raman_power_scaling_is_cubic() {
    let base = small_link(3, 0.0, &[80.0, 80.0], 0.0);
    let q = QuadratureSpec::reduced();
    let a = snr_report(&base, &q).unwrap();
    let b = snr_report(&base.scale_power(2.0), &q).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        let ratio = y.sigma2_nli_w / x.sigma2_nli_w;
        assert!((ratio - 8.0).abs() < 8.0 * 1e-9, "{ratio}");
        assert!((x.snr_nli_db - y.snr_nli_db - 10.0 * 4f64.log10()).abs() < 1e-9);
    }
}

#[test]
fn report_is_deterministic_and_consistent() {
    let link = small_link(3, 1.0, &[80.0, 90.0], 0.028);
    let q = QuadratureSpec::reduced();
    let a = snr_report(&link, &q).unwrap();
    let b = snr_report(&link, &q).unwrap();
    assert_eq!(a, b);
    for e in &a.entries {
        assert!(e.sigma2_nli_w > 0.0);
        assert!((e.snr_nli_db - 10.0 * (e.power_w / e.sigma2_nli_w).log10()).abs() < 1e-12);
        let single = integrate_channel(&link, e.channel_index, &q).unwrap();
        assert_eq!(single, e.sigma2_nli_w);
    }
    let sub = snr_report_for(&link, &[2, 0], &q).unwrap();
    assert_eq!(sub.entries[0], a.entries[2]);
    assert_eq!(sub.entries[1], a.entries[0]);
}

#[test]
fn dispersion_slope_tilts_snr_without_raman() {
    let link = build_ptp_scenario(&ChannelGrid::c_plus_l(), 0.0, &[100.0], ssmf(0.0)).unwrap();
    let q = QuadratureSpec::reduced().with_channel_points(1);
    // symmetric channel pairs away from the band edges
    let pairs = [(25, 225), (75, 175), (115, 135)];
    let idx: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let r = snr_report_for(&link, &idx, &q).unwrap();
    for (k, _) in pairs.iter().enumerate() {
        let low = r.entries[2 * k].snr_nli_db;
        let high = r.entries[2 * k + 1].snr_nli_db;
        assert!(low > high, "{low} {high}");
    }
}

#[test]
fn isrs_moves_nli_toward_high_frequencies() {
    let grid = ChannelGrid::c_plus_l();
    let link = build_ptp_scenario(&grid, 0.0, &[100.0], ssmf(0.028)).unwrap();
    let off = link.map_fiber(FiberSpec::without_raman);
    let q = QuadratureSpec::reduced().with_channel_points(1);
    let ch = [10, 125, 240];
    let on = snr_report_for(&link, &ch, &q).unwrap().snr_db();
    let without = snr_report_for(&off, &ch, &q).unwrap().snr_db();
    // low-frequency channels gain power and lose SNR, high-frequency ones the opposite
    assert!(on[0] < without[0]);
    assert!(on[2] > without[2]);
    assert!((on[1] - without[1]).abs() < 0.3);
}

#[test]
fn cubic_scaling_with_raman_is_not_exact() {
    let base = small_link(3, 10.0, &[80.0], 0.028);
    let q = QuadratureSpec::reduced();
    let a = integrate_channel(&base, 1, &q).unwrap();
    let b = integrate_channel(&base.scale_power(2.0), 1, &q).unwrap();
    assert!((b / a - 8.0).abs() > 1e-6);
}

#[test]
fn dispersion_coefficients_from_fiber() {
    let d = dispersion_coeffs(&FiberSpec::ssmf());
    let lambda: f64 = 1550.0;
    let c = 299_792.458;
    assert!((d.beta2 - (-17.0 * lambda * lambda / (2.0 * PI * c))).abs() < 1e-12);
    assert!((d.beta2 + 21.68).abs() < 0.01);
    assert!((d.beta3 - 0.1447).abs() < 1e-3);
}

#[test]
fn phase_mismatch_examples() {
    let d = DispersionCoeffs { beta2: -21.7, beta3: 0.0 };
    assert_eq!(phase_mismatch(0.2, -0.3, 0.2, 100.0, &d), 0.0);
    assert_eq!(phase_mismatch(0.1, -0.1, 0.0, 0.0, &d), 0.0);
    let phi = phase_mismatch(0.1, -0.1, 0.0, 100.0, &d);
    assert!((phi - (-4.0 * PI * PI * 0.1 * -0.1 * -21.7 * 100.0)).abs() < 1e-9);
}

#[test]
fn coupling_factor_on_flat_and_stepped_loads() {
    let grid = ChannelGrid::new(5, 0.05, 32.0).unwrap();
    let flat = SpectralLoad::uniform(grid.clone(), 2e-3).unwrap();
    let g = 2e-3 / 0.032;
    assert!((coupling_factor(&flat, -0.05, 0.1, 0.0) - g).abs() < 1e-12);
    assert_eq!(coupling_factor(&flat, 0.1, 0.1, -0.1), 0.0);
    let boost = 10f64.powf(0.1);
    let load = SpectralLoad::new(grid, vec![1e-3, 1e-3 * boost, 1e-3 * boost, 1e-3 * boost, 1e-3]).unwrap();
    // f1 = f2 = -0.05 and f1 + f2 - f = 0 are boosted, f = -0.1 is not
    let s = coupling_factor(&load, -0.05, -0.05, -0.1);
    let g0 = 1e-3 / 0.032;
    assert!((s - g0 * 10f64.powf(0.15)).abs() < 1e-12 * g0);
}

#[test]
fn launch_sweep_extremes() {
    let template = small_link(3, 0.0, &[80.0, 80.0], 0.028);
    let grid: Vec<f64> = vec![-2.0, 0.0, 2.0];
    let q = QuadratureSpec::reduced().with_channel_points(1);
    let sweep = optimal_launch(&template, 5.0, 1, &grid, &q).unwrap();
    assert_eq!(sweep.points.len(), 3);
    for p in &sweep.points {
        let snr = 10.0 * (1e-3 * 10f64.powf(p.power_dbm / 10.0) / (p.sigma2_ase_w + p.sigma2_nli_w)).log10();
        assert!((snr - p.snr_db).abs() < 1e-9);
        assert_eq!(p.sigma2_ase_w, sweep.points[0].sigma2_ase_w);
    }
    // ASE only: more power is always better
    let linear = template.map_fiber(|f| FiberSpec { gamma: 0.0, ..f });
    assert_eq!(optimal_launch(&linear, 5.0, 1, &grid, &q).unwrap().optimum_dbm, 2.0);
    // NLI only: less power is always better
    assert_eq!(optimal_launch(&template, -400.0, 1, &grid, &q).unwrap().optimum_dbm, -2.0);
    assert!(optimal_launch(&template, 5.0, 1, &[], &q).is_err());
}
