use std::f64::consts::PI;

use kiparc_core::estimation::synthetic::{fringe_dataset, gain_map_dataset, noise_dataset, tuning_dataset};
use kiparc_core::estimation::{
    fit_fringe, fit_gain_map, fit_noise, fit_tuning_curve, fringe_model, DataPoint, Dataset, DatasetKind,
    FitResult, FringeFitOptions, GainMapFitOptions, NoiseFitOptions, ResidualSpace, TuningFitOptions,
};
use kiparc_core::model::{hz_to_rad, DeviceModes, ScatteringParams, TuningModel};
use kiparc_core::scattering::{extinction_ratio, Target};
use kiparc_core::Error;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn mhz(v: f64) -> f64 {
    hz_to_rad(v * 1e6)
}

fn sp(ka: f64, kb: f64, xi: f64) -> ScatteringParams {
    ScatteringParams::on_resonance(mhz(ka), mhz(kb), Complex64::new(mhz(xi), 0.0)).unwrap()
}

fn rel(fit: &FitResult, name: &str, truth: f64) -> f64 {
    (fit.value(name).unwrap() / truth - 1.0).abs()
}

/// Additive (dB) or multiplicative Gaussian noise on every value.
fn noisy(d: &Dataset, sigma: f64, multiplicative: bool, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let points = d
        .points
        .iter()
        .map(|p| {
            let mut q = *p;
            for v in q.values.iter_mut().flatten() {
                let e = normal.sample(&mut rng);
                if multiplicative {
                    *v *= 1.0 + e;
                } else {
                    *v += e;
                }
            }
            q
        })
        .collect();
    Dataset::new(d.kind, points).unwrap()
}

fn keep_channel(d: &Dataset, slot: usize) -> Dataset {
    let points = d
        .points
        .iter()
        .map(|p| {
            let mut values = [None, None];
            values[slot] = p.values[slot];
            DataPoint { values, ..*p }
        })
        .collect();
    Dataset::new(d.kind, points).unwrap()
}

fn assert_monotone(fit: &FitResult) {
    assert!(
        fit.cost_history.windows(2).all(|w| w[1] <= w[0]),
        "cost increased: {:?}",
        fit.cost_history
    );
}

// gain maps

const MAP: (f64, f64, f64) = (4.597, 3.210, 7.408);

fn map_modes() -> DeviceModes {
    DeviceModes::new(hz_to_rad(5.5e9), hz_to_rad(6.3e9), sp(MAP.0, MAP.1, MAP.2)).unwrap()
}

fn map_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -15e6 + 30e6 * k as f64 / (n - 1) as f64).collect()
}

fn map_data(n: usize) -> Dataset {
    gain_map_dataset(&map_modes(), &map_grid(n), &map_grid(n)).unwrap()
}

/// ±20% corners of (κ_a, κ_b, |ξ|) that keep the guess below threshold.
fn perturbed_guesses(ka: f64, kb: f64, xi: f64) -> Vec<ScatteringParams> {
    let mut out = Vec::new();
    for fa in [0.8, 1.2] {
        for fb in [0.8, 1.2] {
            for fx in [0.8, 1.2] {
                let (a, b, x) = (ka * fa, kb * fb, xi * fx);
                if x < 2.0 * (a * b).sqrt() {
                    out.push(sp(a, b, x));
                }
            }
        }
    }
    out
}

#[test]
fn gain_map_noiseless_round_trip() {
    let data = map_data(21);
    let guesses = perturbed_guesses(MAP.0, MAP.1, MAP.2);
    assert!(guesses.len() >= 4);
    for init in guesses {
        let fit = fit_gain_map(&data, &map_modes(), &init, &GainMapFitOptions::default()).unwrap();
        assert!(rel(&fit, "kappa_a_hz", MAP.0 * 1e6) < 1e-6);
        assert!(rel(&fit, "kappa_b_hz", MAP.1 * 1e6) < 1e-6);
        assert!(rel(&fit, "xi_hz", MAP.2 * 1e6) < 1e-6);
        assert_monotone(&fit);
    }
}

#[test]
fn gain_map_round_trip_with_centres() {
    // true modes at 5.5 / 6.3 GHz; coordinates are re-expressed relative to
    // a nominal guess that is off by +0.4 MHz and −0.3 MHz
    let (da, db) = (0.4e6, -0.3e6);
    let shifted: Vec<DataPoint> = map_data(21)
        .points
        .iter()
        .map(|p| DataPoint {
            coords: [p.coords[0] - db, p.coords[1] - da],
            ..*p
        })
        .collect();
    let data = Dataset::new(DatasetKind::GainMap, shifted).unwrap();
    let nominal = DeviceModes::new(hz_to_rad(5.5e9 + da), hz_to_rad(6.3e9 + db), sp(MAP.0, MAP.1, MAP.2)).unwrap();
    let options = GainMapFitOptions {
        fit_centers: true,
        ..Default::default()
    };
    let fit = fit_gain_map(&data, &nominal, &sp(4.0, 3.6, 7.0), &options).unwrap();
    assert!((fit.value("f_a_hz").unwrap() - 5.5e9).abs() < 1.0, "{:?}", fit.value("f_a_hz"));
    assert!((fit.value("f_b_hz").unwrap() - 6.3e9).abs() < 1.0, "{:?}", fit.value("f_b_hz"));
    assert!(rel(&fit, "xi_hz", MAP.2 * 1e6) < 1e-6);
    assert!(rel(&fit, "kappa_a_hz", MAP.0 * 1e6) < 1e-6);
}

#[test]
fn gain_map_noisy_recovery_within_two_percent() {
    let data = noisy(&map_data(41), 0.5, false, 20261019);
    let fit = fit_gain_map(&data, &map_modes(), &sp(4.0, 3.6, 7.0), &GainMapFitOptions::default()).unwrap();
    for (name, truth) in [("kappa_a_hz", MAP.0), ("kappa_b_hz", MAP.1), ("xi_hz", MAP.2)] {
        assert!(rel(&fit, name, truth * 1e6) < 0.02, "{name}: {:?}", fit.value(name));
        assert!(fit.standard_error(name).unwrap() > 0.0);
    }
    assert_monotone(&fit);
}

#[test]
fn signal_and_idler_maps_agree() {
    let data = noisy(&map_data(31), 0.5, false, 7);
    let init = sp(4.0, 3.6, 7.0);
    let options = GainMapFitOptions::default();
    let s = fit_gain_map(&keep_channel(&data, 0), &map_modes(), &init, &options).unwrap();
    let i = fit_gain_map(&keep_channel(&data, 1), &map_modes(), &init, &options).unwrap();
    for name in ["kappa_a_hz", "kappa_b_hz", "xi_hz"] {
        let diff = (s.value(name).unwrap() - i.value(name).unwrap()).abs();
        let joint = s.standard_error(name).unwrap().hypot(i.standard_error(name).unwrap());
        assert!(diff < 3.0 * joint, "{name}: {diff} vs joint σ {joint}");
    }
}

#[test]
fn decibel_and_linear_residuals_agree_on_low_noise() {
    let data = noisy(&map_data(21), 0.02, false, 3);
    let init = sp(4.2, 3.4, 7.1);
    let db = fit_gain_map(&data, &map_modes(), &init, &GainMapFitOptions::default()).unwrap();
    let lin = fit_gain_map(
        &data,
        &map_modes(),
        &init,
        &GainMapFitOptions {
            residual_space: ResidualSpace::Linear,
            ..Default::default()
        },
    )
    .unwrap();
    for name in ["kappa_a_hz", "kappa_b_hz", "xi_hz"] {
        let diff = (db.value(name).unwrap() - lin.value(name).unwrap()).abs();
        let joint = db.standard_error(name).unwrap().hypot(lin.standard_error(name).unwrap());
        assert!(diff < 3.0 * joint, "{name}: {diff} vs joint σ {joint}");
    }
}

#[test]
fn gain_map_guess_above_threshold_is_rejected() {
    let err = fit_gain_map(&map_data(5), &map_modes(), &sp(3.0, 3.0, 6.5), &GainMapFitOptions::default()).unwrap_err();
    assert!(matches!(err, Error::ThresholdViolation { .. }), "{err:?}");
}

// tuning curves

fn two_mode_tuning() -> TuningModel {
    TuningModel::quadratic(5.5e9, 6.3e9, 779e-6, 1033e-6).unwrap()
}

fn currents(max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| max * k as f64 / (n - 1) as f64).collect()
}

#[test]
fn tuning_noiseless_round_trip() {
    let data = tuning_dataset(&two_mode_tuning(), &currents(370e-6, 12)).unwrap();
    for (fa, fb) in [(0.8, 1.2), (1.2, 0.8), (1.2, 1.2), (0.8, 0.8)] {
        let init = TuningModel::quadratic(5.5e9 * 1.01, 6.3e9 * 0.99, 779e-6 * fa, 1033e-6 * fb).unwrap();
        let fit = fit_tuning_curve(&data, &init, &TuningFitOptions::default()).unwrap();
        assert!(rel(&fit, "f0_a_hz", 5.5e9) < 1e-6);
        assert!(rel(&fit, "f0_b_hz", 6.3e9) < 1e-6);
        assert!(rel(&fit, "i_star_a_amp", 779e-6) < 1e-6);
        assert!(rel(&fit, "i_star_b_amp", 1033e-6) < 1e-6);
        assert_monotone(&fit);
    }
}

#[test]
fn tuning_noisy_two_mode_recovery_within_one_percent() {
    let data = noisy(&tuning_dataset(&two_mode_tuning(), &currents(1.4e-3, 40)).unwrap(), 1e-3, true, 11);
    let init = TuningModel::quadratic(5.4e9, 6.4e9, 900e-6, 900e-6).unwrap();
    let fit = fit_tuning_curve(&data, &init, &TuningFitOptions::default()).unwrap();
    assert!(rel(&fit, "i_star_a_amp", 779e-6) < 0.01);
    assert!(rel(&fit, "i_star_b_amp", 1033e-6) < 0.01);
    assert!(fit.value("i_star_b_amp").unwrap() > fit.value("i_star_a_amp").unwrap());
}

#[test]
fn tuning_recovers_quartic_coefficient() {
    let truth = TuningModel::new(5.5e9, 6.3e9, 779e-6, 1033e-6, 0.5, 0.5).unwrap();
    let clean = keep_channel(&tuning_dataset(&truth, &currents(0.9 * 2.0 * 779e-6, 40)).unwrap(), 0);
    let data = noisy(&clean, 1e-3, true, 5);
    let init = TuningModel::new(5.5e9, 6.3e9, 700e-6, 1033e-6, 0.3, 0.0).unwrap();
    let fit = fit_tuning_curve(&data, &init, &TuningFitOptions { fit_alpha: true }).unwrap();
    assert!(rel(&fit, "alpha_a", 0.5) < 0.1, "alpha {:?}", fit.value("alpha_a"));
    assert!(fit.value("f0_b_hz").is_none());
}

#[test]
fn tuning_over_tiny_current_span_is_ill_conditioned() {
    let truth = TuningModel::new(5.5e9, 6.3e9, 779e-6, 1033e-6, 0.5, 0.5).unwrap();
    let data = keep_channel(&tuning_dataset(&truth, &currents(5e-6, 6)).unwrap(), 0);
    let err = fit_tuning_curve(&data, &truth, &TuningFitOptions { fit_alpha: true }).unwrap_err();
    assert!(matches!(err, Error::IllConditioned { .. }), "{err:?}");
}

#[test]
fn tuning_estimator_is_consistent() {
    let clean = tuning_dataset(&two_mode_tuning(), &currents(1.4e-3, 20)).unwrap();
    let init = two_mode_tuning();
    let fits: Vec<FitResult> = (0..100)
        .map(|seed| fit_tuning_curve(&noisy(&clean, 1e-3, true, seed), &init, &TuningFitOptions::default()).unwrap())
        .collect();
    for (name, truth) in [("i_star_a_amp", 779e-6), ("i_star_b_amp", 1033e-6), ("f0_a_hz", 5.5e9)] {
        let mean = fits.iter().map(|f| f.value(name).unwrap()).sum::<f64>() / fits.len() as f64;
        let se = fits.iter().map(|f| f.standard_error(name).unwrap()).sum::<f64>() / fits.len() as f64;
        assert!((mean - truth).abs() < 3.0 * se, "{name}: mean {mean}, se {se}");
    }
}

// fringes

const FRINGE: (f64, f64, f64, f64, f64) = (4.55, 3.57, 7.00, 1.28, 0.7);

fn phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect()
}

fn fringe_data() -> Dataset {
    let (ka, kb, xi, ratio, phi0) = FRINGE;
    fringe_dataset(&sp(ka, kb, xi), ratio, phi0, &[-4e6, -2e6, 0.0, 2e6, 4e6], &phases(72)).unwrap()
}

#[test]
fn fringe_noiseless_round_trip() {
    let data = fringe_data();
    let (ka, kb, xi, ratio, phi0) = FRINGE;
    for init in perturbed_guesses(ka, kb, xi) {
        for r in [0.8, 1.2] {
            let options = FringeFitOptions {
                phase_offset_guess: phi0 - 0.3,
                ..Default::default()
            };
            let fit = fit_fringe(&data, &init, ratio * r, &options).unwrap();
            assert!(rel(&fit, "kappa_a_hz", ka * 1e6) < 1e-4);
            assert!(rel(&fit, "kappa_b_hz", kb * 1e6) < 1e-4);
            assert!(rel(&fit, "xi_hz", xi * 1e6) < 1e-4);
            assert!(rel(&fit, "power_ratio", ratio) < 1e-4);
            assert!((fit.value("phase_offset_rad").unwrap() - phi0).abs() < 1e-4);
            assert_monotone(&fit);
        }
    }
}

#[test]
fn fringe_noisy_power_ratio_within_five_percent() {
    let data = noisy(&fringe_data(), 0.3, false, 99);
    let options = FringeFitOptions {
        phase_offset_guess: 0.4,
        ..Default::default()
    };
    let fit = fit_fringe(&data, &sp(5.0, 3.2, 6.5), 1.5, &options).unwrap();
    assert!(rel(&fit, "power_ratio", FRINGE.3) < 0.05);
}

#[test]
fn fringe_gain_offset_is_recovered() {
    let shifted: Vec<DataPoint> = fringe_data()
        .points
        .iter()
        .map(|p| DataPoint {
            values: p.values.map(|v| v.map(|g| g - 0.7)),
            ..*p
        })
        .collect();
    let data = Dataset::new(DatasetKind::Fringe, shifted).unwrap();
    let options = FringeFitOptions {
        phase_offset_guess: 0.5,
        fit_gain_offset: true,
        ..Default::default()
    };
    let fit = fit_fringe(&data, &sp(4.3, 3.8, 6.8), 1.1, &options).unwrap();
    assert!((fit.value("gain_offset_db").unwrap() + 0.7).abs() < 1e-6);
    assert!(rel(&fit, "power_ratio", FRINGE.3) < 1e-6);
}

#[test]
fn single_sweep_fringe_is_ill_conditioned() {
    let (ka, kb, xi, ratio, phi0) = FRINGE;
    let data = fringe_dataset(&sp(ka, kb, xi), ratio, phi0, &[0.0], &phases(72)).unwrap();
    let err = fit_fringe(&data, &sp(ka, kb, xi), ratio, &FringeFitOptions::default()).unwrap_err();
    assert!(matches!(err, Error::IllConditioned { .. } | Error::NonConvergence { .. }), "{err:?}");
}

#[test]
fn fringe_without_idler_drive_is_degenerate() {
    let (ka, kb, xi, _, phi0) = FRINGE;
    let data = fringe_dataset(&sp(ka, kb, xi), 0.0, phi0, &[0.0, 2e6], &phases(36)).unwrap();
    let err = fit_fringe(&data, &sp(ka, kb, xi), 1.0, &FringeFitOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Degenerate(_)), "{err:?}");
}

#[test]
fn fringe_needs_a_full_turn_of_phase() {
    let (ka, kb, xi, ratio, phi0) = FRINGE;
    let half: Vec<f64> = (0..36).map(|k| PI * k as f64 / 36.0).collect();
    let data = fringe_dataset(&sp(ka, kb, xi), ratio, phi0, &[0.0, 2e6], &half).unwrap();
    let err = fit_fringe(&data, &sp(ka, kb, xi), ratio, &FringeFitOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidDataset(_)), "{err:?}");
}

#[test]
fn fitted_fringe_reproduces_deep_deamplification() {
    // single-input signal gain of 10 dB and an idler amplitude 1.4% short of
    // exact extinction: the null floor is 10 + 20·log10(0.014) ≈ −27.1 dB
    let (ka, kb) = (mhz(4.55), mhz(3.57));
    let xi = 2.0 * (ka * kb * (1.0 - 10f64.powf(-0.5))).sqrt();
    let truth = ScatteringParams::on_resonance(ka, kb, Complex64::new(xi, 0.0)).unwrap();
    let rho = extinction_ratio(&truth, 0.0, Target::Signal).unwrap();
    let ratio = (0.986 / rho.norm()).powi(2);

    let offsets_hz = [-3e6, 0.0, 3e6];
    let data = fringe_dataset(&truth, ratio, 0.3, &offsets_hz, &phases(90)).unwrap();
    let options = FringeFitOptions {
        phase_offset_guess: 0.2,
        ..Default::default()
    };
    let init = ScatteringParams::on_resonance(ka * 1.1, kb * 0.9, Complex64::new(xi * 0.95, 0.0)).unwrap();
    let fit = fit_fringe(&data, &init, ratio * 1.1, &options).unwrap();

    let fitted = ScatteringParams::on_resonance(
        hz_to_rad(fit.value("kappa_a_hz").unwrap()),
        hz_to_rad(fit.value("kappa_b_hz").unwrap()),
        Complex64::new(hz_to_rad(fit.value("xi_hz").unwrap()), 0.0),
    )
    .unwrap();
    let dense = phases(7200);
    let (gs, _) = fringe_model(
        &fitted,
        fit.value("power_ratio").unwrap(),
        fit.value("phase_offset_rad").unwrap(),
        0.0,
        &dense,
    )
    .unwrap();
    let depth = gs.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((depth + 27.08).abs() < 0.1, "depth {depth}");
}

// noise figure

const GAINS: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 100.0, 1000.0];

#[test]
fn noise_noiseless_round_trip() {
    let fit = fit_noise(&noise_dataset(0.167, &GAINS).unwrap(), &NoiseFitOptions::default()).unwrap();
    assert!((fit.value("n_ratio").unwrap() - 0.167).abs() < 1e-9);
}

#[test]
fn noise_noisy_recovery_within_ten_percent() {
    let data = noisy(&noise_dataset(0.167, &GAINS).unwrap(), 0.05, true, 1);
    let fit = fit_noise(&data, &NoiseFitOptions::default()).unwrap();
    assert!(rel(&fit, "n_ratio", 0.167) < 0.1);
}

#[test]
fn noise_estimator_is_consistent() {
    let clean = noise_dataset(0.167, &GAINS).unwrap();
    let fits: Vec<FitResult> = (0..100)
        .map(|seed| fit_noise(&noisy(&clean, 0.05, true, seed), &NoiseFitOptions::default()).unwrap())
        .collect();
    let mean = fits.iter().map(|f| f.value("n_ratio").unwrap()).sum::<f64>() / 100.0;
    let se = fits.iter().map(|f| f.standard_error("n_ratio").unwrap()).sum::<f64>() / 100.0;
    assert!((mean - 0.167).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn weights_scale_the_cost() {
    let data = noisy(&noise_dataset(0.167, &GAINS).unwrap(), 0.05, true, 2);
    let heavy = Dataset::new(DatasetKind::Noise, data.points.iter().map(|p| p.weighted(4.0)).collect()).unwrap();
    let a = fit_noise(&data, &NoiseFitOptions::default()).unwrap();
    let b = fit_noise(&heavy, &NoiseFitOptions::default()).unwrap();
    assert!((a.value("n_ratio").unwrap() / b.value("n_ratio").unwrap() - 1.0).abs() < 1e-9);
    assert!((b.residual_norm / a.residual_norm - 2.0).abs() < 1e-6);
}
