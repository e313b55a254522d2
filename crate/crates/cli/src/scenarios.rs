//! Scenario execution. Everything is computed in memory; nothing touches
//! the filesystem except dataset loading for fits.

use kiparc_core::estimation::{
    fit_fringe, fit_gain_map, fit_noise, fit_tuning_curve, fringe_model, Dataset, FitResult, FringeFitOptions,
    GainMapFitOptions, NoiseFitOptions, TuningFitOptions,
};
use kiparc_core::model::{hz_to_rad, rad_to_hz, DeviceModes, DriveState, Mode, ScatteringParams};
use kiparc_core::resonance::{mode_profile, solve_mode_frequencies, tuning_curve};
use kiparc_core::scattering::{
    align_quadratures, extinction_ratio, gain_map, noise_figure, quadratures, Target,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::config::{FitPlan, Plan};
use crate::dataset::load_dataset;
use crate::error::{CliError, CliResult};
use crate::output::{fmt_num, Artifact, CsvTable};

/// Seeded Gaussian measurement noise, drawn in output order.
struct Noise {
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
}

impl Noise {
    fn new(seed: u64, sigma: Option<f64>) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: sigma.filter(|s| *s > 0.0).map(|s| Normal::new(0.0, s).expect("sigma validated")),
        }
    }

    fn additive(&mut self, v: f64) -> f64 {
        match &self.normal {
            Some(n) if v.is_finite() => v + n.sample(&mut self.rng),
            _ => v,
        }
    }

    fn multiplicative(&mut self, v: f64) -> f64 {
        match &self.normal {
            Some(n) => v * (1.0 + n.sample(&mut self.rng)),
            None => v,
        }
    }
}

fn numeric(context: &str) -> impl Fn(kiparc_core::Error) -> CliError + '_ {
    move |e| CliError::core(context, e)
}

fn coupling_summary(sp: &ScatteringParams) -> String {
    format!(
        "kappa_a_Hz={}, kappa_b_Hz={}, xi_Hz={}, xi_phase_rad={}",
        fmt_num(rad_to_hz(sp.kappa_a())),
        fmt_num(rad_to_hz(sp.kappa_b())),
        fmt_num(rad_to_hz(sp.xi().norm())),
        fmt_num(sp.xi().arg())
    )
}

fn noise_label(sigma: Option<f64>, unit: &str) -> String {
    match sigma {
        Some(s) => format!("gaussian sigma={} {unit}", fmt_num(s)),
        None => "none".to_string(),
    }
}

/// Runs a validated plan and returns its output files.
pub fn run_plan(plan: &Plan, seed: u64) -> CliResult<Vec<Artifact>> {
    match plan {
        Plan::Resonances {
            geometry,
            band_hz,
            profile_samples,
        } => {
            let modes = solve_mode_frequencies(geometry, *band_hz).map_err(numeric("resonances"))?;
            let geometry_line = format!(
                "total_length_m={}, L_a_H_per_m={}, L_b_H_per_m={}, Z_a_ohm={}, Z_b_ohm={}, v_a_m_per_s={}, v_b_m_per_s={}",
                fmt_num(geometry.total_length()),
                fmt_num(geometry.inductance_a()),
                fmt_num(geometry.inductance_b()),
                fmt_num(geometry.impedance_a()),
                fmt_num(geometry.impedance_b()),
                fmt_num(geometry.velocity_a()),
                fmt_num(geometry.velocity_b()),
            );
            let mut table = CsvTable::new(&["f_a_Hz", "f_b_Hz"])
                .meta("geometry", geometry_line.clone())
                .meta("band_Hz", format!("{}, {}", fmt_num(band_hz.0), fmt_num(band_hz.1)));
            table.push(vec![modes.f_a, modes.f_b]);
            let mut out = vec![table.into_artifact("resonances.csv")?];
            for mode in [Mode::A, Mode::B] {
                let p = mode_profile(geometry, &modes, mode, *profile_samples).map_err(numeric("mode profile"))?;
                let mut t = CsvTable::new(&["position_m", "voltage", "current"])
                    .meta("mode", mode.label().to_string())
                    .meta("frequency_Hz", fmt_num(p.frequency))
                    .meta("position", "arc length from port 1")
                    .meta("normalization", "max |voltage| = 1")
                    .meta("geometry", geometry_line.clone());
                for k in 0..p.positions.len() {
                    t.push(vec![p.positions[k], p.voltage[k], p.current[k]]);
                }
                out.push(t.into_artifact(&format!("profile_{}.csv", mode.label()))?);
            }
            Ok(out)
        }

        Plan::Tuning {
            model,
            currents_a,
            relative_noise,
        } => {
            let curve = tuning_curve(model, currents_a).map_err(numeric("tuning"))?;
            let mut noise = Noise::new(seed, *relative_noise);
            let mut table = CsvTable::new(&["I_A", "f_a_Hz", "f_b_Hz"])
                .meta(
                    "params",
                    format!(
                        "f0_a_Hz={}, f0_b_Hz={}, i_star_a_A={}, i_star_b_A={}, alpha_a={}, alpha_b={}",
                        fmt_num(model.f0(Mode::A)),
                        fmt_num(model.f0(Mode::B)),
                        fmt_num(model.i_star(Mode::A)),
                        fmt_num(model.i_star(Mode::B)),
                        fmt_num(model.alpha(Mode::A)),
                        fmt_num(model.alpha(Mode::B)),
                    ),
                )
                .meta("measurement_noise", noise_label(*relative_noise, "relative"))
                .meta("seed", seed.to_string());
            for (i, pair) in currents_a.iter().zip(&curve) {
                let fa = noise.multiplicative(pair.f_a);
                let fb = noise.multiplicative(pair.f_b);
                table.push(vec![*i, fa, fb]);
            }
            Ok(vec![table.into_artifact("tuning.csv")?])
        }

        Plan::GainMap {
            modes,
            x_hz,
            y_hz,
            noise_db,
        } => gain_map_artifacts(modes, x_hz, y_hz, *noise_db, seed),

        Plan::Fringe {
            params,
            power_ratio,
            phase_offset,
            phases,
            offsets_hz,
            noise_db,
        } => {
            let mut noise = Noise::new(seed, *noise_db);
            let mut out = Vec::new();
            for (k, &offset) in offsets_hz.iter().enumerate() {
                let x = hz_to_rad(offset);
                let (gs, gi) =
                    fringe_model(params, *power_ratio, *phase_offset, x, phases).map_err(numeric("fringe"))?;
                let frame = params.with_detunings(x, -x).map_err(numeric("fringe"))?;
                let null_ratio = |target| -> CliResult<String> {
                    match extinction_ratio(&frame, 0.0, target) {
                        Ok(rho) => Ok(fmt_num(1.0 / rho.norm_sqr())),
                        Err(kiparc_core::Error::ZeroPump) => Ok("undefined (no pump)".to_string()),
                        Err(e) => Err(CliError::core("fringe", e)),
                    }
                };
                let mut table = CsvTable::new(&["phase_rad", "Gs_dB", "Gi_dB"])
                    .meta("offset_Hz", fmt_num(offset))
                    .meta("params", coupling_summary(params))
                    .meta(
                        "drive",
                        format!(
                            "power_ratio_Pi_over_Ps={}, phase_offset_rad={}",
                            fmt_num(*power_ratio),
                            fmt_num(*phase_offset)
                        ),
                    )
                    .meta("gains", "relative to signal input power")
                    .meta("signal_null_power_ratio", null_ratio(Target::Signal)?)
                    .meta("idler_null_power_ratio", null_ratio(Target::Idler)?)
                    .meta("measurement_noise", noise_label(*noise_db, "dB"))
                    .meta("seed", seed.to_string());
                for (i, &phi) in phases.iter().enumerate() {
                    let s = noise.additive(gs[i]);
                    let g = noise.additive(gi[i]);
                    table.push(vec![phi, s, g]);
                }
                let name = if offsets_hz.len() == 1 {
                    "fringe.csv".to_string()
                } else {
                    format!("fringe_{:02}.csv", k + 1)
                };
                out.push(table.into_artifact(&name)?);
            }
            Ok(out)
        }

        Plan::Quadratures {
            params,
            power_ratio,
            phase_offset,
            phases,
            signal_offset_hz,
        } => {
            let x = hz_to_rad(*signal_offset_hz);
            let frame = params.with_detunings(x, -x).map_err(numeric("quadratures"))?;
            let alpha = Complex64::new(power_ratio.sqrt(), 0.0);
            let sweep = phases
                .iter()
                .map(|&phi| {
                    let drive = DriveState::new(alpha, Complex64::from_polar(1.0, phi + phase_offset));
                    quadratures(&frame, 0.0, &drive).map(|q| (phi, q))
                })
                .collect::<kiparc_core::Result<Vec<_>>>()
                .map_err(numeric("quadratures"))?;
            let aligned = align_quadratures(&sweep).map_err(numeric("quadrature alignment"))?;
            let mut table = CsvTable::new(&["phi_s_rad", "Is", "Qs", "Ii", "Qi"])
                .meta("params", coupling_summary(params))
                .meta("signal_offset_Hz", fmt_num(*signal_offset_hz))
                .meta(
                    "drive",
                    format!(
                        "power_ratio_Pi_over_Ps={}, phase_offset_rad={}",
                        fmt_num(*power_ratio),
                        fmt_num(*phase_offset)
                    ),
                )
                .meta("alignment", "each channel rotated and scaled so the phi_s = -pi sample is (-1, 0)");
            for (phi, q) in aligned {
                table.push(vec![phi, q.i_s, q.q_s, q.i_i, q.q_i]);
            }
            Ok(vec![table.into_artifact("quadratures.csv")?])
        }

        Plan::Noise {
            n_ratio,
            gains_db,
            relative_noise,
        } => {
            let mut noise = Noise::new(seed, *relative_noise);
            let mut table = CsvTable::new(&["G_linear", "NF_linear"])
                .meta("n_ratio", fmt_num(*n_ratio))
                .meta("asymptotic_NF_dB", fmt_num(10.0 * n_ratio.log10()))
                .meta("measurement_noise", noise_label(*relative_noise, "relative"))
                .meta("seed", seed.to_string());
            for &g_db in gains_db {
                let g = 10f64.powf(g_db / 10.0);
                let nf = noise.multiplicative(noise_figure(g, *n_ratio));
                table.push(vec![g, nf]);
            }
            Ok(vec![table.into_artifact("noise.csv")?])
        }

        Plan::Fit(fit) => run_fit(fit),
    }
}

fn gain_map_artifacts(
    modes: &DeviceModes,
    x_hz: &[f64],
    y_hz: &[f64],
    noise_db: Option<f64>,
    seed: u64,
) -> CliResult<Vec<Artifact>> {
    let xs: Vec<f64> = x_hz.iter().map(|&v| hz_to_rad(v)).collect();
    let ys: Vec<f64> = y_hz.iter().map(|&v| hz_to_rad(v)).collect();
    let map = gain_map(modes, &xs, &ys).map_err(numeric("gain map"))?;
    if map.masked_count() > 0 {
        log::warn!("{} gain-map cells sit on a pole and are written as nan", map.masked_count());
    }
    let params = format!(
        "f_a_Hz={}, f_b_Hz={}, {}",
        fmt_num(rad_to_hz(modes.omega_a())),
        fmt_num(rad_to_hz(modes.omega_b())),
        coupling_summary(modes.params())
    );
    let mut noise = Noise::new(seed, noise_db);
    let mut out = Vec::new();
    for (slot, (column, name)) in [("Gs_dB", "gain_map_signal.csv"), ("Gi_dB", "gain_map_idler.csv")]
        .into_iter()
        .enumerate()
    {
        let mut table = CsvTable::new(&["x", "y", column])
            .meta("axis_x", "omega_s_minus_omega_b_Hz")
            .meta("axis_y", "omega_i_minus_omega_a_Hz")
            .meta("params", params.clone())
            .meta("units", "x and y in Hz (f = omega/2pi); gain in dB")
            .meta("measurement_noise", noise_label(noise_db, "dB"))
            .meta("seed", seed.to_string());
        for (iy, &y) in y_hz.iter().enumerate() {
            for (ix, &x) in x_hz.iter().enumerate() {
                let g = map.get(ix, iy).map_or(f64::NAN, |c| if slot == 0 { c.0 } else { c.1 });
                table.push(vec![x, y, noise.additive(g)]);
            }
        }
        out.push(table.into_artifact(name)?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct FitReport<'a> {
    kind: String,
    datasets: Vec<String>,
    points: usize,
    result: &'a FitResult,
}

fn run_fit(plan: &FitPlan) -> CliResult<Vec<Artifact>> {
    let mut points = Vec::new();
    for path in &plan.datasets {
        points.extend(load_dataset(path, plan.kind)?.points);
    }
    let data = Dataset::new(plan.kind, points).map_err(numeric("fit.datasets"))?;
    let context = format!("fitting {} data", plan.kind);
    let result = match plan.kind {
        kiparc_core::estimation::DatasetKind::GainMap | kiparc_core::estimation::DatasetKind::GainSlice => {
            let modes = plan.modes.as_ref().expect("validated");
            let options = GainMapFitOptions {
                fit_centers: plan.fit_centers,
                residual_space: plan.residual_space,
            };
            fit_gain_map(&data, modes, modes.params(), &options)
        }
        kiparc_core::estimation::DatasetKind::Tuning => fit_tuning_curve(
            &data,
            plan.tuning.as_ref().expect("validated"),
            &TuningFitOptions {
                fit_alpha: plan.fit_alpha,
            },
        ),
        kiparc_core::estimation::DatasetKind::Fringe => fit_fringe(
            &data,
            plan.coupling.as_ref().expect("validated"),
            plan.power_ratio_guess.expect("validated"),
            &FringeFitOptions {
                phase_offset_guess: plan.phase_offset_guess,
                fit_gain_offset: plan.fit_gain_offset,
                residual_space: plan.residual_space,
            },
        ),
        kiparc_core::estimation::DatasetKind::Noise => fit_noise(
            &data,
            &NoiseFitOptions {
                residual_space: plan.residual_space,
            },
        ),
    }
    .map_err(|e| CliError::core(context, e))?;

    for (name, value) in &result.parameters {
        log::info!("  {name} = {value} ± {}", result.standard_errors[name]);
    }
    let report = FitReport {
        kind: plan.kind.to_string(),
        datasets: plan
            .datasets
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
            .collect(),
        points: data.len(),
        result: &result,
    };
    let mut contents =
        serde_json::to_vec_pretty(&report).map_err(|e| CliError::io("serializing fit result", e.into()))?;
    contents.push(b'\n');
    Ok(vec![Artifact {
        name: "fit_result.json".to_string(),
        contents,
    }])
}
