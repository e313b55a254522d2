//! Four-port input-output response of the pumped two-mode ring.
//!
//! Mode b couples to ports 2/4 (signal) and mode a to ports 1/3 (idler).
//! Inputs enter at ports 1 (idler, amplitude α) and 2 (signal, amplitude β);
//! ports 3 and 4 are the measured outputs. A signal at detuning δ from ω_p/2
//! pairs with an idler at −δ, so signal-side gains are evaluated at `+δ` and
//! idler-side gains at `−δ`.

use std::f64::consts::PI;

use nalgebra::SMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DeviceModes, DriveState, GainSet, QuadratureSample, ScatteringParams};

/// Relative size of |D| (in units of (κ_a + κ_b)²) treated as a pole.
pub const POLE_RTOL: f64 = 1e-12;

/// Floor applied when converting a zero power ratio to dB.
pub const DB_FLOOR: f64 = -300.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Power ratio in dB, floored at [`DB_FLOOR`].
pub fn power_db(ratio: f64) -> f64 {
    if ratio > 0.0 {
        (10.0 * ratio.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

fn denominators(sp: &ScatteringParams, arg: f64) -> (Complex64, Complex64) {
    let (ka, kb) = (sp.kappa_a(), sp.kappa_b());
    let pump = 0.25 * sp.xi().norm_sqr();
    let d_s = (I * (arg + sp.delta_a()) - ka) * (I * (arg - sp.delta_b()) - kb) - pump;
    let d_i = (I * (arg - sp.delta_a()) - ka) * (I * (arg + sp.delta_b()) - kb) - pump;
    (d_s, d_i)
}

/// Amplitude gains at frequency argument `arg` (rad/s) in the rotating frame.
///
/// `g_ss`, `g_is` share the denominator `D_s`; `g_ii`, `g_si` share `D_i`.
/// Fails with [`Error::Pole`] when either denominator is within
/// [`POLE_RTOL`]·(κ_a + κ_b)² of zero.
pub fn amplitude_gains(sp: &ScatteringParams, arg: f64) -> Result<GainSet> {
    let (ka, kb) = (sp.kappa_a(), sp.kappa_b());
    let (d_s, d_i) = denominators(sp, arg);
    let floor = POLE_RTOL * (ka + kb).powi(2);
    for d in [d_s, d_i] {
        if !(d.norm() > floor) {
            return Err(Error::Pole {
                magnitude: d.norm(),
            });
        }
    }
    let conversion = 0.5 * (ka * kb).sqrt() * I * sp.xi();
    GainSet::from_parts(
        kb * (I * (arg + sp.delta_a()) - ka) / d_s,
        conversion / d_i,
        ka * (I * (arg + sp.delta_b()) - kb) / d_i,
        conversion / d_s,
        d_s,
        d_i,
    )
}

/// The gains that act on a signal at `+δ` and its idler at `−δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneGains {
    /// Evaluated at `+δ`: use `g_ss` and `g_is`.
    pub signal: GainSet,
    /// Evaluated at `−δ`: use `g_ii` and `g_si`.
    pub idler: GainSet,
}

impl ToneGains {
    pub fn new(sp: &ScatteringParams, delta: f64) -> Result<Self> {
        Ok(Self {
            signal: amplitude_gains(sp, delta)?,
            idler: amplitude_gains(sp, -delta)?,
        })
    }

    pub fn g_ss(&self) -> Complex64 {
        self.signal.g_ss()
    }

    pub fn g_is(&self) -> Complex64 {
        self.signal.g_is()
    }

    pub fn g_ii(&self) -> Complex64 {
        self.idler.g_ii()
    }

    pub fn g_si(&self) -> Complex64 {
        self.idler.g_si()
    }
}

/// `(10·log10|g_ss|², 10·log10|g_si|²)` of a single gain set.
pub fn power_gains_db(gs: &GainSet) -> (f64, f64) {
    (power_db(gs.g_ss().norm_sqr()), power_db(gs.g_si().norm_sqr()))
}

/// Signal and idler power gains (dB) for a lone signal input at detuning δ:
/// `G_s = |g_ss(δ)|²`, `G_i = |g_si(−δ)|²`.
pub fn signal_idler_gains_db(sp: &ScatteringParams, delta: f64) -> Result<(f64, f64)> {
    let g = ToneGains::new(sp, delta)?;
    Ok((power_db(g.g_ss().norm_sqr()), power_db(g.g_si().norm_sqr())))
}

/// Signal and idler gain maps over `(ω_s − ω_b, ω_i − ω_a)`.
///
/// Cells are stored row-major with `y` as the slow index. Cells at a pole
/// are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMap {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub cells: Vec<Option<(f64, f64)>>,
}

impl GainMap {
    pub fn get(&self, ix: usize, iy: usize) -> Option<(f64, f64)> {
        self.cells[iy * self.x.len() + ix]
    }

    pub fn masked_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }
}

/// Evaluates signal/idler gains (dB) on a grid of map axes (rad/s).
pub fn gain_map(modes: &DeviceModes, x_grid: &[f64], y_grid: &[f64]) -> Result<GainMap> {
    if let Some(bad) = x_grid.iter().chain(y_grid).find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("grid values must be finite, got {bad}"),
        });
    }
    let rows: Vec<Vec<Option<(f64, f64)>>> = y_grid
        .par_iter()
        .map(|&y| {
            x_grid
                .iter()
                .map(|&x| {
                    let (delta, sp) = modes.map_axes_to_frame(x, y).ok()?;
                    signal_idler_gains_db(&sp, delta).ok()
                })
                .collect()
        })
        .collect();
    Ok(GainMap {
        x: x_grid.to_vec(),
        y: y_grid.to_vec(),
        cells: rows.into_iter().flatten().collect(),
    })
}

/// Mean-field output amplitudes at the four ports.
///
/// `out1`, `out3` are at the idler frequency; `out2`, `out4` at the signal
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PortOutputs {
    pub out1: Complex64,
    pub out2: Complex64,
    pub out3: Complex64,
    pub out4: Complex64,
}

/// Output amplitudes for drive `α` at port 1 and `β` at port 2.
///
/// `out3 = g_ii α + g_si β*`, `out4 = g_ss β + g_is α*`, and the input
/// ports reflect `out1 = α + out3`, `out2 = β + out4`.
pub fn output_fields(sp: &ScatteringParams, delta: f64, drive: &DriveState) -> Result<PortOutputs> {
    let g = ToneGains::new(sp, delta)?;
    Ok(outputs_from_gains(&g, drive))
}

fn outputs_from_gains(g: &ToneGains, drive: &DriveState) -> PortOutputs {
    let (alpha, beta) = (drive.alpha, drive.beta);
    let out3 = g.g_ii() * alpha + g.g_si() * beta.conj();
    let out4 = g.g_ss() * beta + g.g_is() * alpha.conj();
    PortOutputs {
        out1: alpha + out3,
        out2: beta + out4,
        out3,
        out4,
    }
}

/// Output quadratures at ports 4 (signal) and 3 (idler), with the free
/// propagation phase fixed to 1.
pub fn quadratures(sp: &ScatteringParams, delta: f64, drive: &DriveState) -> Result<QuadratureSample> {
    let out = output_fields(sp, delta, drive)?;
    Ok(QuadratureSample::from_outputs(out.out4, out.out3))
}

/// Rotates and scales each output channel so that the sample at `φ_s = −π`
/// sits at `(I, Q) = (−1, 0)`.
///
/// `sweep` pairs each signal phase with its sample.
pub fn align_quadratures(sweep: &[(f64, QuadratureSample)]) -> Result<Vec<(f64, QuadratureSample)>> {
    let reference = sweep
        .iter()
        .find(|(phi, _)| (phi + PI).abs() <= 1e-12)
        .map(|(_, q)| *q)
        .ok_or_else(|| {
            Error::InvalidParameter {
                name: "sweep",
                reason: "no sample at phi_s = -pi".into(),
            }
        })?;
    let (zs, zi) = (reference.signal(), reference.idler());
    if zs.norm() == 0.0 || zi.norm() == 0.0 {
        return Err(Error::Degenerate(
            "an output channel has zero amplitude at phi_s = -pi".into(),
        ));
    }
    let (rs, ri) = (-1.0 / zs, -1.0 / zi);
    Ok(sweep
        .iter()
        .map(|(phi, q)| (*phi, QuadratureSample::from_outputs(q.signal() * rs, q.idler() * ri)))
        .collect())
}

/// Which output an interfering drive should cancel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Port 4.
    Signal,
    /// Port 3.
    Idler,
}

/// Drive ratio `β/α*` that nulls the `target` output.
pub fn extinction_ratio(sp: &ScatteringParams, delta: f64, target: Target) -> Result<Complex64> {
    ToneGains::new(sp, delta)?;
    let (ka, kb) = (sp.kappa_a(), sp.kappa_b());
    let prefactor = -I * (ka / kb).sqrt();
    match target {
        Target::Signal => Ok(prefactor * sp.xi() / (2.0 * (I * (delta + sp.delta_a()) - ka))),
        Target::Idler => {
            if sp.xi().norm() == 0.0 {
                return Err(Error::ZeroPump);
            }
            Ok(prefactor * 2.0 * (I * (delta - sp.delta_b()) - kb) / sp.xi().conj())
        }
    }
}

/// Gains versus signal phase, both relative to the signal input power.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeResult {
    pub phases: Vec<f64>,
    pub g_s_db: Vec<f64>,
    pub g_i_db: Vec<f64>,
}

/// Two-tone interference: idler drive `alpha` fixed, signal drive
/// `β = beta_mag·e^{iφ}` for each phase φ.
///
/// `G_s(φ) = |out4|²/|β|²` and `G_i(φ) = |out3|²/|β|²`.
pub fn interference_fringe(
    sp: &ScatteringParams,
    delta: f64,
    alpha: Complex64,
    beta_mag: f64,
    phases: &[f64],
) -> Result<FringeResult> {
    if !(beta_mag.is_finite() && beta_mag > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta_mag",
            reason: format!("must be finite and > 0, got {beta_mag}"),
        });
    }
    let g = ToneGains::new(sp, delta)?;
    let input = beta_mag * beta_mag;
    let (g_s_db, g_i_db) = phases
        .par_iter()
        .map(|&phi| {
            let drive = DriveState::new(alpha, Complex64::from_polar(beta_mag, phi));
            let out = outputs_from_gains(&g, &drive);
            (power_db(out.out4.norm_sqr() / input), power_db(out.out3.norm_sqr() / input))
        })
        .unzip();
    Ok(FringeResult {
        phases: phases.to_vec(),
        g_s_db,
        g_i_db,
    })
}

/// Noise figure `NF = (1 + (G − 1)·n) / G` for power gain `G ≥ 1` and
/// added-noise ratio `n = N_KIPC/N_sys`.
pub fn noise_figure(gain: f64, n_ratio: f64) -> f64 {
    (1.0 + (gain - 1.0) * n_ratio) / gain
}

/// Large-gain SNR improvement, `−10·log10(n)` dB.
pub fn asymptotic_snr_improvement_db(n_ratio: f64) -> f64 {
    -10.0 * n_ratio.log10()
}

/// Canonical form `diag(+1, +1, −1, −1, +1, +1, −1, −1)` on the stacked
/// port vector.
pub fn canonical_form() -> SMatrix<Complex64, 8, 8> {
    let mut eta = SMatrix::<Complex64, 8, 8>::zeros();
    for (k, s) in [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0].into_iter().enumerate() {
        eta[(k, k)] = Complex64::new(s, 0.0);
    }
    eta
}

/// Four-port scattering matrix on `(in1, in3, in2†, in4†, in2, in4, in1†, in3†)`.
///
/// The first block carries the idler-frequency ports (at `−δ`) together
/// with the conjugated signal ports; the second block the reverse. The
/// output stack uses the same ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovMatrix {
    pub entries: SMatrix<Complex64, 8, 8>,
}

impl BogoliubovMatrix {
    pub fn apply(&self, input: &[Complex64; 8]) -> [Complex64; 8] {
        let v = self.entries * nalgebra::SVector::<Complex64, 8>::from_column_slice(input);
        std::array::from_fn(|k| v[k])
    }

    /// Max-norm of `M·η·M† − η`.
    pub fn canonical_deviation(&self) -> f64 {
        let eta = canonical_form();
        let m = &self.entries;
        (m * eta * m.adjoint() - eta)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

pub fn bogoliubov_matrix(sp: &ScatteringParams, delta: f64) -> Result<BogoliubovMatrix> {
    let g = ToneGains::new(sp, delta)?;
    let one = Complex64::new(1.0, 0.0);
    let mut m = SMatrix::<Complex64, 8, 8>::zeros();

    // annihilation rows of one block and creation rows of the other:
    // out_x = in_x + g_direct (in_x + in_y) + g_conv (in_u + in_v)†
    let mut fill = |offset: usize, direct: Complex64, conv: Complex64, c_direct: Complex64, c_conv: Complex64| {
        for r in 0..2 {
            for c in 0..2 {
                m[(offset + r, offset + c)] = direct + if r == c { one } else { 0.0.into() };
                m[(offset + r, offset + 2 + c)] = conv;
                m[(offset + 2 + r, offset + c)] = c_conv;
                m[(offset + 2 + r, offset + 2 + c)] = c_direct + if r == c { one } else { 0.0.into() };
            }
        }
    };
    fill(0, g.g_ii(), g.g_si(), g.g_ss().conj(), g.g_is().conj());
    fill(4, g.g_ss(), g.g_is(), g.g_ii().conj(), g.g_si().conj());
    Ok(BogoliubovMatrix { entries: m })
}
