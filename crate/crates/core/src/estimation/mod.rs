//! Parameter estimation against gain-map, tuning, fringe and noise data.
//!
//! Every fitter minimizes weighted squared residuals with [`lm::minimize`].
//! Positive quantities (rates, frequencies, current scales, ratios) are
//! fitted through their logarithm. Standard errors come from the scaled
//! inverse normal matrix at the optimum, mapped back to natural units.

pub mod lm;
pub mod synthetic;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{hz_to_rad, DeviceModes, Mode, ScatteringParams, TuningModel};
use crate::resonance::inductance_factor;
use crate::scattering::{interference_fringe, noise_figure, power_db, signal_idler_gains_db};

use lm::{condition_number, covariance, minimize, scaled_condition_number, LmConfig, LmReport};

/// Condition number of the normal matrix in the internal parameters
/// (`ln f0`, `ln I*`, `α`) beyond which a tuning fit is rejected.
pub const TUNING_CONDITION_LIMIT: f64 = 1e8;

/// Condition number beyond which any other fit is rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    GainMap,
    GainSlice,
    Tuning,
    Fringe,
    Noise,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::GainMap => "gain_map",
            DatasetKind::GainSlice => "gain_slice",
            DatasetKind::Tuning => "tuning",
            DatasetKind::Fringe => "fringe",
            DatasetKind::Noise => "noise",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "gain_map" => Ok(DatasetKind::GainMap),
            "gain_slice" => Ok(DatasetKind::GainSlice),
            "tuning" => Ok(DatasetKind::Tuning),
            "fringe" => Ok(DatasetKind::Fringe),
            "noise" => Ok(DatasetKind::Noise),
            other => Err(Error::InvalidDataset(format!("unknown dataset kind `{other}`"))),
        }
    }
}

/// One row of measured data, in external units.
///
/// | kind                 | `coords`                       | `values`              |
/// |----------------------|--------------------------------|-----------------------|
/// | gain map / slice     | `ω_s−ω_b`, `ω_i−ω_a` (Hz)      | `G_s`, `G_i` (dB)     |
/// | tuning               | bias current (A), unused       | `f_a`, `f_b` (Hz)     |
/// | fringe               | signal phase (rad), offset (Hz)| `G_s`, `G_i` (dB)     |
/// | noise                | gain (linear), unused          | NF (linear), unused   |
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataPoint {
    pub coords: [f64; 2],
    pub values: [Option<f64>; 2],
    pub weight: f64,
}

impl DataPoint {
    pub fn new(coords: [f64; 2], values: [Option<f64>; 2]) -> Self {
        Self {
            coords,
            values,
            weight: 1.0,
        }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub points: Vec<DataPoint>,
}

impl Dataset {
    pub fn new(kind: DatasetKind, points: Vec<DataPoint>) -> Result<Self> {
        for (k, p) in points.iter().enumerate() {
            if p.coords.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidDataset(format!("point {k}: non-finite coordinate")));
            }
            if p.values.iter().all(Option::is_none) {
                return Err(Error::InvalidDataset(format!("point {k}: no values")));
            }
            if p.values.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("point {k}: non-finite value")));
            }
            if !(p.weight.is_finite() && p.weight > 0.0) {
                return Err(Error::InvalidDataset(format!(
                    "point {k}: weight must be positive, got {}",
                    p.weight
                )));
            }
        }
        Ok(Self { kind, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn expect_kind(&self, allowed: &[DatasetKind]) -> Result<()> {
        if allowed.contains(&self.kind) {
            Ok(())
        } else {
            Err(Error::InvalidDataset(format!(
                "expected a {} dataset, got {}",
                allowed.iter().map(|k| k.name()).collect::<Vec<_>>().join(" or "),
                self.kind
            )))
        }
    }
}

/// Estimated parameters with uncertainties and convergence diagnostics.
///
/// Parameter names carry their unit: `_hz` for rates and frequencies (the
/// value is the angular quantity divided by 2π), `_amp` for currents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub parameters: BTreeMap<String, f64>,
    pub standard_errors: BTreeMap<String, f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_measure: f64,
    pub condition_number: f64,
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).copied()
    }

    pub fn standard_error(&self, name: &str) -> Option<f64> {
        self.standard_errors.get(name).copied()
    }
}

/// Whether residuals compare dB values or linear power ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualSpace {
    #[default]
    Decibel,
    Linear,
}

impl ResidualSpace {
    fn residual(self, model_db: f64, data_db: f64) -> f64 {
        match self {
            ResidualSpace::Decibel => model_db - data_db,
            ResidualSpace::Linear => 10f64.powf(model_db / 10.0) - 10f64.powf(data_db / 10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Transform {
    Log,
    Linear,
}

/// A fitted parameter: name, internal transform, natural→reported scale.
#[derive(Debug, Clone, Copy)]
struct Param {
    name: &'static str,
    transform: Transform,
    report_scale: f64,
    /// Finite-difference floor in internal units.
    typical: f64,
}

impl Param {
    fn log(name: &'static str, report_scale: f64) -> Self {
        Self {
            name,
            transform: Transform::Log,
            report_scale,
            typical: 1.0,
        }
    }

    fn linear(name: &'static str, report_scale: f64, typical: f64) -> Self {
        Self {
            name,
            transform: Transform::Linear,
            report_scale,
            typical,
        }
    }

    fn natural(&self, internal: f64) -> f64 {
        match self.transform {
            Transform::Log => internal.exp(),
            Transform::Linear => internal,
        }
    }

    fn derivative(&self, internal: f64) -> f64 {
        match self.transform {
            Transform::Log => internal.exp(),
            Transform::Linear => 1.0,
        }
    }
}

const TO_HZ: f64 = 1.0 / TAU;

/// How the normal matrix is conditioned before it is trusted.
#[derive(Debug, Clone, Copy)]
enum Conditioning {
    /// Column-normalized: flags collinear parameters only.
    Scaled(f64),
    /// Raw internal parameters: also flags parameters the data barely move.
    Raw(f64),
}

fn finish(params: &[Param], report: LmReport, conditioning: Conditioning, what: &str) -> Result<FitResult> {
    let (condition, condition_limit) = match conditioning {
        Conditioning::Scaled(limit) => (scaled_condition_number(&report.jacobian), limit),
        Conditioning::Raw(limit) => (condition_number(&report.jacobian), limit),
    };
    if !(condition <= condition_limit) {
        return Err(Error::IllConditioned {
            condition,
            reason: format!("data do not constrain all {what} parameters"),
        });
    }
    let cov = covariance(&report).ok_or_else(|| Error::IllConditioned {
        condition,
        reason: "normal matrix is singular".into(),
    })?;
    let mut parameters = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    for (k, param) in params.iter().enumerate() {
        let theta = report.params[k];
        let value = param.natural(theta) * param.report_scale;
        let se = param.derivative(theta) * param.report_scale.abs() * cov[(k, k)].max(0.0).sqrt();
        parameters.insert(param.name.to_string(), value);
        standard_errors.insert(param.name.to_string(), se);
    }
    Ok(FitResult {
        parameters,
        standard_errors,
        residual_norm: report.cost.sqrt(),
        iterations: report.iterations,
        converged: true,
        gradient_measure: report.gradient_measure,
        condition_number: condition,
        cost_history: report.cost_history,
    })
}

fn check_threshold(kappa_a: f64, kappa_b: f64, xi: f64) -> Result<()> {
    let threshold = 2.0 * (kappa_a * kappa_b).sqrt();
    if xi >= threshold {
        Err(Error::ThresholdViolation { xi, threshold })
    } else {
        Ok(())
    }
}

/// Options for [`fit_gain_map`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainMapFitOptions {
    /// Also fit the mode frequencies (as offsets from the nominal ones).
    pub fit_centers: bool,
    pub residual_space: ResidualSpace,
}

/// Fits `(|ξ|, κ_a, κ_b)` and optionally `(ω_a, ω_b)` to a signal and/or
/// idler gain map.
///
/// Map coordinates are measured from the nominal modes in `modes`. The
/// phase of ξ is not observable in power gains and is reported as zero.
/// Reported names: `xi_hz`, `kappa_a_hz`, `kappa_b_hz` and, with centre
/// fitting, `f_a_hz`, `f_b_hz`.
pub fn fit_gain_map(
    data: &Dataset,
    modes: &DeviceModes,
    init: &ScatteringParams,
    options: &GainMapFitOptions,
) -> Result<FitResult> {
    data.expect_kind(&[DatasetKind::GainMap, DatasetKind::GainSlice])?;
    let xi0 = init.xi().norm();
    if xi0 == 0.0 {
        return Err(Error::InvalidParameter {
            name: "init.xi",
            reason: "initial pump rate must be nonzero".into(),
        });
    }
    check_threshold(init.kappa_a(), init.kappa_b(), xi0)?;

    let mut params = vec![
        Param::log("xi_hz", TO_HZ),
        Param::log("kappa_a_hz", TO_HZ),
        Param::log("kappa_b_hz", TO_HZ),
    ];
    let mut start = vec![xi0.ln(), init.kappa_a().ln(), init.kappa_b().ln()];
    if options.fit_centers {
        let scale = init.kappa_a().min(init.kappa_b());
        params.push(Param::linear("f_a_hz", TO_HZ, scale));
        params.push(Param::linear("f_b_hz", TO_HZ, scale));
        start.push(modes.omega_a());
        start.push(modes.omega_b());
    }

    let space = options.residual_space;
    let residuals = |theta: &[f64]| -> Result<Vec<f64>> {
        let (xi, ka, kb) = (theta[0].exp(), theta[1].exp(), theta[2].exp());
        check_threshold(ka, kb, xi)?;
        let sp = ScatteringParams::on_resonance(ka, kb, Complex64::new(xi, 0.0))?;
        let fitted = if options.fit_centers {
            DeviceModes::new(theta[3], theta[4], sp)?
        } else {
            DeviceModes::new(modes.omega_a(), modes.omega_b(), sp)?
        };
        let (da, db) = (fitted.omega_a() - modes.omega_a(), fitted.omega_b() - modes.omega_b());
        let mut out = Vec::with_capacity(2 * data.len());
        for p in &data.points {
            let x = hz_to_rad(p.coords[0]) - db;
            let y = hz_to_rad(p.coords[1]) - da;
            let (delta, frame) = fitted.map_axes_to_frame(x, y)?;
            let (gs, gi) = signal_idler_gains_db(&frame, delta)?;
            let w = p.weight.sqrt();
            for (model, value) in [gs, gi].into_iter().zip(p.values) {
                if let Some(v) = value {
                    out.push(w * space.residual(model, v));
                }
            }
        }
        Ok(out)
    };

    let typical: Vec<f64> = params.iter().map(|p| p.typical).collect();
    let report = minimize(residuals, &start, &typical, &LmConfig::default())?;
    finish(&params, report, Conditioning::Scaled(CONDITION_LIMIT), "gain-map")
}

/// Options for [`fit_tuning_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TuningFitOptions {
    /// Fit the quartic coefficients; otherwise they stay at their initial
    /// values.
    pub fit_alpha: bool,
}

/// Fits `f_m(I) = f0_m / √(1 + (I/2I*_m)² + α_m (I/2I*_m)⁴)` per mode.
///
/// A mode without data keeps its initial parameters and is not reported.
/// Residuals are relative frequency errors. Reported names per mode `m`:
/// `f0_m_hz`, `i_star_m_amp` and, when fitted, `alpha_m`.
pub fn fit_tuning_curve(data: &Dataset, init: &TuningModel, options: &TuningFitOptions) -> Result<FitResult> {
    data.expect_kind(&[DatasetKind::Tuning])?;
    if let Some(p) = data.points.iter().find(|p| p.coords[0] < 0.0) {
        return Err(Error::InvalidDataset(format!(
            "bias currents must be nonnegative, got {}",
            p.coords[0]
        )));
    }

    let mut params = Vec::new();
    let mut start = Vec::new();
    let mut fitted_modes = Vec::new();
    for (slot, mode) in [Mode::A, Mode::B].into_iter().enumerate() {
        let mut currents: Vec<f64> = data
            .points
            .iter()
            .filter(|p| p.values[slot].is_some())
            .map(|p| p.coords[0])
            .collect();
        if currents.is_empty() {
            continue;
        }
        currents.sort_by(f64::total_cmp);
        currents.dedup();
        if currents.len() < 4 {
            return Err(Error::InvalidDataset(format!(
                "{mode} needs at least 4 distinct currents, got {}",
                currents.len()
            )));
        }
        let (f0, istar, alpha) = match mode {
            Mode::A => ("f0_a_hz", "i_star_a_amp", "alpha_a"),
            Mode::B => ("f0_b_hz", "i_star_b_amp", "alpha_b"),
        };
        params.push(Param::log(f0, 1.0));
        params.push(Param::log(istar, 1.0));
        start.push(init.f0(mode).ln());
        start.push(init.i_star(mode).ln());
        if options.fit_alpha {
            params.push(Param::linear(alpha, 1.0, 1.0));
            start.push(init.alpha(mode));
        }
        fitted_modes.push((slot, mode));
    }
    if fitted_modes.is_empty() {
        return Err(Error::InvalidDataset("tuning dataset has no frequencies".into()));
    }
    let per_mode = if options.fit_alpha { 3 } else { 2 };

    let residuals = |theta: &[f64]| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (k, &(slot, mode)) in fitted_modes.iter().enumerate() {
            let block = &theta[k * per_mode..(k + 1) * per_mode];
            let f0 = block[0].exp();
            let istar = block[1].exp();
            let alpha = if options.fit_alpha { block[2] } else { init.alpha(mode) };
            let model = TuningModel::new(f0, f0, istar, istar, alpha, alpha)?;
            for p in &data.points {
                if let Some(f) = p.values[slot] {
                    let factor = inductance_factor(p.coords[0], &model, Mode::A);
                    if !(factor > 0.0) {
                        return Err(Error::InvalidParameter {
                            name: "alpha",
                            reason: format!("inductance factor {factor} is not positive"),
                        });
                    }
                    out.push(p.weight.sqrt() * (f0 / factor.sqrt() / f - 1.0));
                }
            }
        }
        Ok(out)
    };

    let typical: Vec<f64> = params.iter().map(|p| p.typical).collect();
    let report = minimize(residuals, &start, &typical, &LmConfig::default())?;
    finish(&params, report, Conditioning::Raw(TUNING_CONDITION_LIMIT), "tuning")
}

/// Gains versus signal phase for the fringe model used by [`fit_fringe`].
///
/// The pump sits on the sum resonance and the signal is offset by
/// `signal_offset` (rad/s) from mode b. The idler drive has amplitude
/// `√power_ratio` (relative to the signal) and zero phase; the signal drive
/// is `e^{i(φ + phase_offset)}`. Detunings in `sp` are ignored.
pub fn fringe_model(
    sp: &ScatteringParams,
    power_ratio: f64,
    phase_offset: f64,
    signal_offset: f64,
    phases: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(power_ratio.is_finite() && power_ratio >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "power_ratio",
            reason: format!("must be finite and >= 0, got {power_ratio}"),
        });
    }
    // δ = 0 with Δ_a = x, Δ_b = −x puts the signal at ω_b + x and the idler at ω_a − x
    let frame = sp.with_detunings(signal_offset, -signal_offset)?;
    let shifted: Vec<f64> = phases.iter().map(|p| p + phase_offset).collect();
    let fr = interference_fringe(
        &frame,
        0.0,
        Complex64::new(power_ratio.sqrt(), 0.0),
        1.0,
        &shifted,
    )?;
    Ok((fr.g_s_db, fr.g_i_db))
}

/// Options for [`fit_fringe`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FringeFitOptions {
    pub phase_offset_guess: f64,
    /// Fit a common dB offset (calibration error) on both channels.
    pub fit_gain_offset: bool,
    pub residual_space: ResidualSpace,
}

/// Fits `(κ_a, κ_b, |ξ|, P_i/P_s, phase offset)` to interference fringes.
///
/// The couplings are only separately identifiable when the data include
/// fringes at more than one signal offset (coordinate 2); a single
/// on-resonance sweep constrains only `|ξ|²/κ_aκ_b` and is rejected as
/// ill-conditioned. Reported names: `kappa_a_hz`, `kappa_b_hz`, `xi_hz`,
/// `power_ratio`, `phase_offset_rad` and optionally `gain_offset_db`.
pub fn fit_fringe(
    data: &Dataset,
    init: &ScatteringParams,
    power_ratio_guess: f64,
    options: &FringeFitOptions,
) -> Result<FitResult> {
    data.expect_kind(&[DatasetKind::Fringe])?;
    if data.is_empty() {
        return Err(Error::InvalidDataset("empty fringe dataset".into()));
    }
    check_fringe_coverage(data)?;
    let xi0 = init.xi().norm();
    check_threshold(init.kappa_a(), init.kappa_b(), xi0)?;
    if !(power_ratio_guess > 0.0) {
        return Err(Error::InvalidParameter {
            name: "power_ratio_guess",
            reason: format!("must be > 0, got {power_ratio_guess}"),
        });
    }

    let mut params = vec![
        Param::log("kappa_a_hz", TO_HZ),
        Param::log("kappa_b_hz", TO_HZ),
        Param::log("xi_hz", TO_HZ),
        Param::log("power_ratio", 1.0),
        Param::linear("phase_offset_rad", 1.0, 1.0),
    ];
    let mut start = vec![
        init.kappa_a().ln(),
        init.kappa_b().ln(),
        xi0.ln(),
        power_ratio_guess.ln(),
        options.phase_offset_guess,
    ];
    if options.fit_gain_offset {
        params.push(Param::linear("gain_offset_db", 1.0, 1.0));
        start.push(0.0);
    }

    // group points by signal offset so each group shares one gain evaluation
    let mut offsets: Vec<f64> = data.points.iter().map(|p| p.coords[1]).collect();
    offsets.sort_by(f64::total_cmp);
    offsets.dedup();
    let groups: Vec<(f64, Vec<&DataPoint>)> = offsets
        .iter()
        .map(|&o| (o, data.points.iter().filter(|p| p.coords[1] == o).collect()))
        .collect();

    let space = options.residual_space;
    let residuals = |theta: &[f64]| -> Result<Vec<f64>> {
        let (ka, kb, xi) = (theta[0].exp(), theta[1].exp(), theta[2].exp());
        check_threshold(ka, kb, xi)?;
        let sp = ScatteringParams::on_resonance(ka, kb, Complex64::new(xi, 0.0))?;
        let ratio = theta[3].exp();
        let gain_offset = if options.fit_gain_offset { theta[5] } else { 0.0 };
        let mut out = Vec::with_capacity(2 * data.len());
        for (offset, points) in &groups {
            let phases: Vec<f64> = points.iter().map(|p| p.coords[0]).collect();
            let (gs, gi) = fringe_model(&sp, ratio, theta[4], hz_to_rad(*offset), &phases)?;
            for (k, p) in points.iter().enumerate() {
                let w = p.weight.sqrt();
                for (model, value) in [gs[k], gi[k]].into_iter().zip(p.values) {
                    if let Some(v) = value {
                        out.push(w * space.residual(model + gain_offset, v));
                    }
                }
            }
        }
        Ok(out)
    };

    let typical: Vec<f64> = params.iter().map(|p| p.typical).collect();
    let report = minimize(residuals, &start, &typical, &LmConfig::default())?;
    let mut result = finish(&params, report, Conditioning::Scaled(CONDITION_LIMIT), "fringe")?;
    if let Some(phi) = result.parameters.get_mut("phase_offset_rad") {
        *phi = (*phi + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
    }
    Ok(result)
}

fn check_fringe_coverage(data: &Dataset) -> Result<()> {
    let mut offsets: Vec<f64> = data.points.iter().map(|p| p.coords[1]).collect();
    offsets.sort_by(f64::total_cmp);
    offsets.dedup();
    let mut max_swing = 0.0_f64;
    for o in offsets {
        let mut phases: Vec<f64> = data
            .points
            .iter()
            .filter(|p| p.coords[1] == o)
            .map(|p| p.coords[0])
            .collect();
        phases.sort_by(f64::total_cmp);
        let span = phases.last().unwrap() - phases[0];
        let widest_gap = phases.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if span + widest_gap < TAU - 1e-9 {
            return Err(Error::InvalidDataset(format!(
                "fringe at offset {o} Hz spans {span:.3} rad; at least 2π is required"
            )));
        }
        for slot in 0..2 {
            let vals: Vec<f64> = data
                .points
                .iter()
                .filter(|p| p.coords[1] == o)
                .filter_map(|p| p.values[slot])
                .collect();
            if vals.len() > 1 {
                let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
                let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
                max_swing = max_swing.max(hi - lo);
            }
        }
    }
    if max_swing < 0.01 {
        return Err(Error::Degenerate(format!(
            "no interference fringes (largest swing {max_swing:.2e} dB); single-input data?"
        )));
    }
    Ok(())
}

/// Options for [`fit_noise`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseFitOptions {
    pub residual_space: ResidualSpace,
}

/// One-parameter fit of `N_KIPC/N_sys` (reported as `n_ratio`) to
/// noise-figure data.
pub fn fit_noise(data: &Dataset, options: &NoiseFitOptions) -> Result<FitResult> {
    data.expect_kind(&[DatasetKind::Noise])?;
    let points: Vec<(f64, f64, f64)> = data
        .points
        .iter()
        .filter_map(|p| p.values[0].map(|nf| (p.coords[0], nf, p.weight)))
        .collect();
    if points.len() < 2 {
        return Err(Error::InvalidDataset("noise fit needs at least 2 points".into()));
    }
    if let Some((g, nf, _)) = points.iter().find(|(g, nf, _)| *g < 1.0 || *nf <= 0.0) {
        return Err(Error::InvalidDataset(format!(
            "noise data need G >= 1 and NF > 0, got G = {g}, NF = {nf}"
        )));
    }
    let g_min = points.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    let g_max = points.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    if g_max < 10.0 * g_min {
        return Err(Error::InvalidDataset(format!(
            "gains span {g_min}..{g_max}; at least a decade is required"
        )));
    }

    // linear least squares on NF·G − 1 = n (G − 1) for the starting point
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), (g, nf, w)| {
        (num + w * (g - 1.0) * (nf * g - 1.0), den + w * (g - 1.0) * (g - 1.0))
    });
    let n0 = if num > 0.0 && den > 0.0 { num / den } else { 0.1 };

    let space = options.residual_space;
    let residuals = |theta: &[f64]| -> Result<Vec<f64>> {
        let n = theta[0].exp();
        Ok(points
            .iter()
            .map(|(g, nf, w)| {
                w.sqrt() * space.residual(power_db(noise_figure(*g, n)), power_db(*nf))
            })
            .collect())
    };
    let params = [Param::log("n_ratio", 1.0)];
    let report = minimize(residuals, &[n0.ln()], &[1.0], &LmConfig::default())?;
    finish(&params, report, Conditioning::Scaled(CONDITION_LIMIT), "noise")
}
