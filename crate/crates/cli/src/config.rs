//! Run configuration: a single JSON document, validated into a [`Plan`]
//! before any numerics run.
//!
//! External units are Hz, A, dB and radians of phase. Every rate is
//! converted to rad/s with `ω = 2π·f` on the way in.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use kiparc_core::estimation::{DatasetKind, ResidualSpace};
use kiparc_core::model::{hz_to_rad, DeviceModes, RingGeometry, ScatteringParams, TuningModel};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Ring resonance frequencies and standing-wave profiles from geometry
    Resonances,
    /// Mode frequencies versus DC bias current
    Tuning,
    /// Signal and idler gain maps over signal/idler detuning
    GainMap,
    /// Two-tone interference fringes versus signal phase
    Fringe,
    /// Output quadratures versus signal phase, aligned
    Quadratures,
    /// Noise figure versus gain
    Noise,
    /// Least-squares fit of a dataset
    Fit,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Resonances => "resonances",
            Scenario::Tuning => "tuning",
            Scenario::GainMap => "gain-map",
            Scenario::Fringe => "fringe",
            Scenario::Quadratures => "quadratures",
            Scenario::Noise => "noise",
            Scenario::Fit => "fit",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    geometry: Option<Value>,
    modes: Option<Value>,
    coupling: Option<Value>,
    tuning: Option<Value>,
    drive: Option<Value>,
    noise_model: Option<Value>,
    measurement_noise: Option<Value>,
    sweep: Option<Value>,
    fit: Option<Value>,
}

impl RawConfig {
    fn blocks(&self) -> [(&'static str, bool); 9] {
        [
            ("geometry", self.geometry.is_some()),
            ("modes", self.modes.is_some()),
            ("coupling", self.coupling.is_some()),
            ("tuning", self.tuning.is_some()),
            ("drive", self.drive.is_some()),
            ("noise_model", self.noise_model.is_some()),
            ("measurement_noise", self.measurement_noise.is_some()),
            ("sweep", self.sweep.is_some()),
            ("fit", self.fit.is_some()),
        ]
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryBlock {
    total_length_m: f64,
    inductance_per_length_h_per_m: f64,
    impedance_a_ohm: Option<f64>,
    impedance_b_ohm: Option<f64>,
    cap_a_f_per_m: Option<f64>,
    cap_b_f_per_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModesBlock {
    f_a_hz: f64,
    f_b_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingBlock {
    kappa_a_hz: f64,
    kappa_b_hz: f64,
    xi_hz: f64,
    #[serde(default)]
    xi_phase_rad: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TuningBlock {
    f0_a_hz: f64,
    f0_b_hz: f64,
    i_star_a_amp: f64,
    i_star_b_amp: f64,
    #[serde(default)]
    alpha_a: f64,
    #[serde(default)]
    alpha_b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveBlock {
    /// Idler-to-signal input power ratio `P_i/P_s`.
    power_ratio: f64,
    #[serde(default)]
    phase_offset_rad: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseModelBlock {
    n_ratio: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementNoiseBlock {
    sigma: f64,
}

/// A sampled axis: either explicit values or `n` evenly spaced points
/// from `min` to `max` inclusive.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Grid {
    Values(Vec<f64>),
    Range { min: f64, max: f64, n: usize },
}

impl Grid {
    fn points(&self, path: &str) -> CliResult<Vec<f64>> {
        let pts = match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Range { min, max, n } => {
                if n < 2 || !(max > min) {
                    return Err(CliError::config(path, "range needs n >= 2 and max > min"));
                }
                (0..n)
                    .map(|k| if k + 1 == n { max } else { min + (max - min) * k as f64 / (n - 1) as f64 })
                    .collect()
            }
        };
        if pts.is_empty() {
            return Err(CliError::config(path, "grid is empty"));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config(path, "grid values must be finite"));
        }
        Ok(pts)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResonanceSweep {
    band_hz: [f64; 2],
    #[serde(default = "default_profile_samples")]
    profile_samples: usize,
}

fn default_profile_samples() -> usize {
    33
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TuningSweep {
    currents_a: Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainMapSweep {
    x_hz: Grid,
    y_hz: Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FringeSweep {
    phases_rad: Option<Grid>,
    #[serde(default = "default_offsets")]
    offsets_hz: Vec<f64>,
}

fn default_offsets() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadratureSweep {
    phases_rad: Option<Grid>,
    #[serde(default)]
    signal_offset_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSweep {
    gain_db: Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitBlock {
    kind: String,
    datasets: Vec<PathBuf>,
    #[serde(default)]
    fit_alpha: bool,
    #[serde(default)]
    fit_centers: bool,
    #[serde(default)]
    fit_gain_offset: bool,
    #[serde(default)]
    residual_space: Option<String>,
    power_ratio_guess: Option<f64>,
    #[serde(default)]
    phase_offset_guess_rad: f64,
}

/// Validated fit request.
#[derive(Debug, Clone, PartialEq)]
pub struct FitPlan {
    pub kind: DatasetKind,
    pub datasets: Vec<PathBuf>,
    pub modes: Option<DeviceModes>,
    pub coupling: Option<ScatteringParams>,
    pub tuning: Option<TuningModel>,
    pub fit_alpha: bool,
    pub fit_centers: bool,
    pub fit_gain_offset: bool,
    pub residual_space: ResidualSpace,
    pub power_ratio_guess: Option<f64>,
    pub phase_offset_guess: f64,
}

/// A fully validated scenario. Rates are in rad/s; sweep axes keep their
/// external units (Hz, A, dB, rad) because they are echoed into outputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Resonances {
        geometry: RingGeometry,
        band_hz: (f64, f64),
        profile_samples: usize,
    },
    Tuning {
        model: TuningModel,
        currents_a: Vec<f64>,
        relative_noise: Option<f64>,
    },
    GainMap {
        modes: DeviceModes,
        x_hz: Vec<f64>,
        y_hz: Vec<f64>,
        noise_db: Option<f64>,
    },
    Fringe {
        params: ScatteringParams,
        power_ratio: f64,
        phase_offset: f64,
        phases: Vec<f64>,
        offsets_hz: Vec<f64>,
        noise_db: Option<f64>,
    },
    Quadratures {
        params: ScatteringParams,
        power_ratio: f64,
        phase_offset: f64,
        phases: Vec<f64>,
        signal_offset_hz: f64,
    },
    Noise {
        n_ratio: f64,
        gains_db: Vec<f64>,
        relative_noise: Option<f64>,
    },
    Fit(FitPlan),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub plan: Plan,
    /// The document as read, echoed into the run manifest.
    pub echo: Value,
}

/// Reads and validates a configuration file for `scenario`.
///
/// Relative dataset paths are resolved against the file's directory.
pub fn load_config(path: &Path, scenario: Scenario) -> CliResult<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, scenario, base)
}

/// Validates a configuration document for `scenario`.
pub fn parse_config(text: &str, scenario: Scenario, base_dir: &Path) -> CliResult<Config> {
    let echo: Value = serde_json::from_str(text)
        .map_err(|e| CliError::config("$", format!("invalid JSON: {e}")))?;
    let raw: RawConfig = block(&echo, "$")?;

    if let Some(name) = &raw.scenario {
        if name != scenario.name() {
            return Err(CliError::config(
                "scenario",
                format!("config is for `{name}` but `{scenario}` was requested"),
            ));
        }
    }
    if let Some(dir) = &raw.output_dir {
        if dir.as_os_str().is_empty() {
            return Err(CliError::config("output_dir", "must not be empty"));
        }
    }

    let plan = match scenario {
        Scenario::Resonances => {
            expect_blocks(&raw, &["geometry", "sweep"], &[])?;
            let geometry = geometry(&raw)?;
            let sweep: ResonanceSweep = required(&raw.sweep, "sweep")?;
            let [lo, hi] = sweep.band_hz;
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(CliError::config("sweep.band_hz", "need 0 < min < max"));
            }
            if sweep.profile_samples < 3 {
                return Err(CliError::config("sweep.profile_samples", "must be at least 3"));
            }
            Plan::Resonances {
                geometry,
                band_hz: (lo, hi),
                profile_samples: sweep.profile_samples,
            }
        }
        Scenario::Tuning => {
            expect_blocks(&raw, &["tuning", "sweep"], &["measurement_noise"])?;
            let model = tuning(&raw)?;
            let sweep: TuningSweep = required(&raw.sweep, "sweep")?;
            let currents_a = sweep.currents_a.points("sweep.currents_a")?;
            if currents_a.iter().any(|&i| i < 0.0) {
                return Err(CliError::config("sweep.currents_a", "currents must be nonnegative"));
            }
            if currents_a.windows(2).any(|w| w[1] < w[0]) {
                return Err(CliError::config("sweep.currents_a", "currents must be ascending"));
            }
            Plan::Tuning {
                model,
                currents_a,
                relative_noise: measurement_noise(&raw)?,
            }
        }
        Scenario::GainMap => {
            expect_blocks(&raw, &["modes", "coupling", "sweep"], &["measurement_noise"])?;
            let modes = device_modes(&raw)?;
            let sweep: GainMapSweep = required(&raw.sweep, "sweep")?;
            Plan::GainMap {
                modes,
                x_hz: sweep.x_hz.points("sweep.x_hz")?,
                y_hz: sweep.y_hz.points("sweep.y_hz")?,
                noise_db: measurement_noise(&raw)?,
            }
        }
        Scenario::Fringe => {
            expect_blocks(&raw, &["coupling", "drive", "sweep"], &["measurement_noise"])?;
            let params = coupling(&raw)?;
            let (power_ratio, phase_offset) = drive(&raw)?;
            let sweep: FringeSweep = required(&raw.sweep, "sweep")?;
            let phases = phase_grid(sweep.phases_rad, "sweep.phases_rad")?;
            if sweep.offsets_hz.is_empty() || sweep.offsets_hz.iter().any(|v| !v.is_finite()) {
                return Err(CliError::config("sweep.offsets_hz", "need at least one finite offset"));
            }
            Plan::Fringe {
                params,
                power_ratio,
                phase_offset,
                phases,
                offsets_hz: sweep.offsets_hz,
                noise_db: measurement_noise(&raw)?,
            }
        }
        Scenario::Quadratures => {
            expect_blocks(&raw, &["coupling", "sweep"], &["drive"])?;
            let params = coupling(&raw)?;
            let (power_ratio, phase_offset) = if raw.drive.is_some() { drive(&raw)? } else { (0.0, 0.0) };
            let sweep: QuadratureSweep = required(&raw.sweep, "sweep")?;
            let phases = phase_grid(sweep.phases_rad, "sweep.phases_rad")?;
            if !phases.iter().any(|p| (p + PI).abs() <= 1e-12) {
                return Err(CliError::config(
                    "sweep.phases_rad",
                    "the alignment reference phase -pi must be sampled",
                ));
            }
            if !sweep.signal_offset_hz.is_finite() {
                return Err(CliError::config("sweep.signal_offset_hz", "must be finite"));
            }
            Plan::Quadratures {
                params,
                power_ratio,
                phase_offset,
                phases,
                signal_offset_hz: sweep.signal_offset_hz,
            }
        }
        Scenario::Noise => {
            expect_blocks(&raw, &["noise_model", "sweep"], &["measurement_noise"])?;
            let model: NoiseModelBlock = required(&raw.noise_model, "noise_model")?;
            if !(model.n_ratio.is_finite() && model.n_ratio > 0.0) {
                return Err(CliError::config("noise_model.n_ratio", "must be finite and > 0"));
            }
            let sweep: NoiseSweep = required(&raw.sweep, "sweep")?;
            let gains_db = sweep.gain_db.points("sweep.gain_db")?;
            if gains_db.iter().any(|&g| g < 0.0) {
                return Err(CliError::config("sweep.gain_db", "gains must be >= 0 dB"));
            }
            Plan::Noise {
                n_ratio: model.n_ratio,
                gains_db,
                relative_noise: measurement_noise(&raw)?,
            }
        }
        Scenario::Fit => Plan::Fit(fit_plan(&raw, base_dir)?),
    };

    Ok(Config {
        scenario,
        seed: raw.seed,
        output_dir: raw.output_dir,
        plan,
        echo,
    })
}

fn block<T: DeserializeOwned>(value: &Value, prefix: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            ("$", ".") => "$".to_string(),
            ("$", p) => p.to_string(),
            (pre, ".") => pre.to_string(),
            (pre, p) => format!("{pre}.{p}"),
        };
        CliError::config(path, e.into_inner().to_string())
    })
}

fn required<T: DeserializeOwned>(value: &Option<Value>, name: &str) -> CliResult<T> {
    match value {
        Some(v) => block(v, name),
        None => Err(CliError::config(name, "required block is missing")),
    }
}

/// Enforces that exactly the scenario's blocks are present.
fn expect_blocks(raw: &RawConfig, required: &[&str], optional: &[&str]) -> CliResult<()> {
    for (name, present) in raw.blocks() {
        if required.contains(&name) && !present {
            return Err(CliError::config(name, "required block is missing"));
        }
        if present && !required.contains(&name) && !optional.contains(&name) {
            return Err(CliError::config(name, "block is not used by this scenario"));
        }
    }
    Ok(())
}

fn core_err(path: &str) -> impl Fn(kiparc_core::Error) -> CliError + '_ {
    move |e| CliError::config(path, e.to_string())
}

fn geometry(raw: &RawConfig) -> CliResult<RingGeometry> {
    let g: GeometryBlock = required(&raw.geometry, "geometry")?;
    let by_impedance = (g.impedance_a_ohm, g.impedance_b_ohm);
    let by_capacitance = (g.cap_a_f_per_m, g.cap_b_f_per_m);
    match (by_impedance, by_capacitance) {
        ((Some(za), Some(zb)), (None, None)) => {
            RingGeometry::from_impedances(g.total_length_m, g.inductance_per_length_h_per_m, za, zb)
        }
        ((None, None), (Some(ca), Some(cb))) => {
            RingGeometry::new(g.total_length_m, g.inductance_per_length_h_per_m, ca, cb)
        }
        _ => {
            return Err(CliError::config(
                "geometry",
                "give either impedance_a_ohm and impedance_b_ohm, or cap_a_f_per_m and cap_b_f_per_m",
            ))
        }
    }
    .map_err(core_err("geometry"))
}

fn coupling(raw: &RawConfig) -> CliResult<ScatteringParams> {
    let c: CouplingBlock = required(&raw.coupling, "coupling")?;
    if !(c.xi_hz.is_finite() && c.xi_hz >= 0.0) {
        return Err(CliError::config("coupling.xi_hz", "must be finite and >= 0"));
    }
    ScatteringParams::on_resonance(
        hz_to_rad(c.kappa_a_hz),
        hz_to_rad(c.kappa_b_hz),
        Complex64::from_polar(hz_to_rad(c.xi_hz), c.xi_phase_rad),
    )
    .map_err(core_err("coupling"))
}

fn device_modes(raw: &RawConfig) -> CliResult<DeviceModes> {
    let params = coupling(raw)?;
    let m: ModesBlock = required(&raw.modes, "modes")?;
    DeviceModes::new(hz_to_rad(m.f_a_hz), hz_to_rad(m.f_b_hz), params).map_err(core_err("modes"))
}

fn tuning(raw: &RawConfig) -> CliResult<TuningModel> {
    let t: TuningBlock = required(&raw.tuning, "tuning")?;
    TuningModel::new(t.f0_a_hz, t.f0_b_hz, t.i_star_a_amp, t.i_star_b_amp, t.alpha_a, t.alpha_b)
        .map_err(core_err("tuning"))
}

fn drive(raw: &RawConfig) -> CliResult<(f64, f64)> {
    let d: DriveBlock = required(&raw.drive, "drive")?;
    if !(d.power_ratio.is_finite() && d.power_ratio >= 0.0) {
        return Err(CliError::config("drive.power_ratio", "must be finite and >= 0"));
    }
    if !d.phase_offset_rad.is_finite() {
        return Err(CliError::config("drive.phase_offset_rad", "must be finite"));
    }
    Ok((d.power_ratio, d.phase_offset_rad))
}

fn measurement_noise(raw: &RawConfig) -> CliResult<Option<f64>> {
    match &raw.measurement_noise {
        None => Ok(None),
        Some(v) => {
            let m: MeasurementNoiseBlock = block(v, "measurement_noise")?;
            if !(m.sigma.is_finite() && m.sigma >= 0.0) {
                return Err(CliError::config("measurement_noise.sigma", "must be finite and >= 0"));
            }
            Ok(Some(m.sigma))
        }
    }
}

/// Default phase sweep: 360 points from −π in steps of 2π/360.
fn phase_grid(grid: Option<Grid>, path: &str) -> CliResult<Vec<f64>> {
    match grid {
        Some(g) => g.points(path),
        None => Ok((0..360).map(|k| -PI + 2.0 * PI * k as f64 / 360.0).collect()),
    }
}

fn fit_plan(raw: &RawConfig, base_dir: &Path) -> CliResult<FitPlan> {
    let f: FitBlock = required(&raw.fit, "fit")?;
    let kind: DatasetKind = f
        .kind
        .parse()
        .map_err(|e: kiparc_core::Error| CliError::config("fit.kind", e.to_string()))?;
    match kind {
        DatasetKind::GainMap | DatasetKind::GainSlice => expect_blocks(raw, &["fit", "modes", "coupling"], &[])?,
        DatasetKind::Tuning => expect_blocks(raw, &["fit", "tuning"], &[])?,
        DatasetKind::Fringe => expect_blocks(raw, &["fit", "coupling"], &[])?,
        DatasetKind::Noise => expect_blocks(raw, &["fit"], &[])?,
    }
    if f.datasets.is_empty() {
        return Err(CliError::config("fit.datasets", "list at least one dataset file"));
    }
    let residual_space = match f.residual_space.as_deref() {
        None | Some("db") => ResidualSpace::Decibel,
        Some("linear") => ResidualSpace::Linear,
        Some(other) => {
            return Err(CliError::config(
                "fit.residual_space",
                format!("expected `db` or `linear`, got `{other}`"),
            ))
        }
    };
    let flag_applies = [
        ("fit.fit_alpha", f.fit_alpha, kind == DatasetKind::Tuning),
        (
            "fit.fit_centers",
            f.fit_centers,
            matches!(kind, DatasetKind::GainMap | DatasetKind::GainSlice),
        ),
        ("fit.fit_gain_offset", f.fit_gain_offset, kind == DatasetKind::Fringe),
        (
            "fit.power_ratio_guess",
            f.power_ratio_guess.is_some(),
            kind == DatasetKind::Fringe,
        ),
    ];
    for (path, set, applies) in flag_applies {
        if set && !applies {
            return Err(CliError::config(path, format!("not used when fitting {kind} data")));
        }
    }
    let power_ratio_guess = match (kind, f.power_ratio_guess) {
        (DatasetKind::Fringe, None) => {
            return Err(CliError::config("fit.power_ratio_guess", "required for fringe fits"))
        }
        (_, Some(r)) if !(r.is_finite() && r > 0.0) => {
            return Err(CliError::config("fit.power_ratio_guess", "must be finite and > 0"))
        }
        (_, r) => r,
    };

    let (modes, coupling) = match kind {
        DatasetKind::GainMap | DatasetKind::GainSlice => {
            let m = device_modes(raw)?;
            (Some(m.clone()), Some(*m.params()))
        }
        DatasetKind::Fringe => (None, Some(coupling(raw)?)),
        _ => (None, None),
    };
    if let Some(c) = &coupling {
        if c.xi().norm() >= c.oscillation_threshold() {
            return Err(CliError::config(
                "coupling.xi_hz",
                "initial pump rate must be below the oscillation threshold 2*sqrt(kappa_a*kappa_b)",
            ));
        }
    }
    let tuning = match kind {
        DatasetKind::Tuning => Some(tuning(raw)?),
        _ => None,
    };

    Ok(FitPlan {
        kind,
        datasets: f.datasets.iter().map(|p| base_dir.join(p)).collect(),
        modes,
        coupling,
        tuning,
        fit_alpha: f.fit_alpha,
        fit_centers: f.fit_centers,
        fit_gain_offset: f.fit_gain_offset,
        residual_space,
        power_ratio_guess,
        phase_offset_guess: f.phase_offset_guess_rad,
    })
}
