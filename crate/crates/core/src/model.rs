//! Shared domain types and rotating-frame conversions.
//!
//! Every frequency handled inside the crate is angular (rad/s). Values that
//! cross an external boundary are in Hz and converted with [`hz_to_rad`] /
//! [`rad_to_hz`]; coupling and pump rates quoted "in MHz" are read as
//! `rate / 2π` so that `κ [rad/s] = 2π · κ [Hz]`.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Converts a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f_hz: f64) -> f64 {
    TAU * f_hz
}

/// Converts an angular frequency in rad/s to Hz.
#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// One of the two fundamental ring modes.
///
/// Mode `A` has its voltage antinodes at ports 1/3, mode `B` at ports 2/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    pub fn label(self) -> char {
        match self {
            Mode::A => 'a',
            Mode::B => 'b',
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mode {}", self.label())
    }
}

/// A ring of four transmission-line sections of equal length.
///
/// Sections 1 and 3 (adjacent to ports 1/3) have inductance and capacitance
/// densities `inductance_a`, `cap_a`; sections 2 and 4 have `inductance_b`,
/// `cap_b`. Physical rings share one inductance density ([`RingGeometry::new`]);
/// distinct densities are allowed so that velocity and impedance can be set
/// independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingGeometry {
    total_length: f64,
    inductance_a: f64,
    inductance_b: f64,
    cap_a: f64,
    cap_b: f64,
}

impl RingGeometry {
    /// Ring with a common inductance density in all sections.
    pub fn new(
        total_length: f64,
        inductance_per_length: f64,
        cap_a: f64,
        cap_b: f64,
    ) -> Result<Self> {
        Self::with_section_inductances(
            total_length,
            inductance_per_length,
            inductance_per_length,
            cap_a,
            cap_b,
        )
    }

    pub fn with_section_inductances(
        total_length: f64,
        inductance_a: f64,
        inductance_b: f64,
        cap_a: f64,
        cap_b: f64,
    ) -> Result<Self> {
        ensure_positive("total_length", total_length)?;
        ensure_positive("inductance_a", inductance_a)?;
        ensure_positive("inductance_b", inductance_b)?;
        ensure_positive("cap_a", cap_a)?;
        ensure_positive("cap_b", cap_b)?;
        let geom = Self {
            total_length,
            inductance_a,
            inductance_b,
            cap_a,
            cap_b,
        };
        for (name, v) in [
            ("impedance_a", geom.impedance_a()),
            ("impedance_b", geom.impedance_b()),
            ("velocity_a", geom.velocity_a()),
            ("velocity_b", geom.velocity_b()),
        ] {
            ensure_positive(name, v)?;
        }
        Ok(geom)
    }

    /// Builds the geometry from section impedances: `C_j = L / Z_j²`.
    pub fn from_impedances(
        total_length: f64,
        inductance_per_length: f64,
        impedance_a: f64,
        impedance_b: f64,
    ) -> Result<Self> {
        ensure_positive("impedance_a", impedance_a)?;
        ensure_positive("impedance_b", impedance_b)?;
        Self::new(
            total_length,
            inductance_per_length,
            inductance_per_length / (impedance_a * impedance_a),
            inductance_per_length / (impedance_b * impedance_b),
        )
    }

    /// Builds the geometry from per-section velocities and impedances:
    /// `L_j = Z_j / v_j`, `C_j = 1 / (Z_j v_j)`.
    pub fn from_lines(
        total_length: f64,
        velocity_a: f64,
        velocity_b: f64,
        impedance_a: f64,
        impedance_b: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("velocity_a", velocity_a),
            ("velocity_b", velocity_b),
            ("impedance_a", impedance_a),
            ("impedance_b", impedance_b),
        ] {
            ensure_positive(name, v)?;
        }
        Self::with_section_inductances(
            total_length,
            impedance_a / velocity_a,
            impedance_b / velocity_b,
            1.0 / (impedance_a * velocity_a),
            1.0 / (impedance_b * velocity_b),
        )
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn section_length(&self) -> f64 {
        self.total_length / 4.0
    }

    pub fn inductance_a(&self) -> f64 {
        self.inductance_a
    }

    pub fn inductance_b(&self) -> f64 {
        self.inductance_b
    }

    pub fn cap_a(&self) -> f64 {
        self.cap_a
    }

    pub fn cap_b(&self) -> f64 {
        self.cap_b
    }

    pub fn impedance_a(&self) -> f64 {
        (self.inductance_a / self.cap_a).sqrt()
    }

    pub fn impedance_b(&self) -> f64 {
        (self.inductance_b / self.cap_b).sqrt()
    }

    pub fn velocity_a(&self) -> f64 {
        1.0 / (self.inductance_a * self.cap_a).sqrt()
    }

    pub fn velocity_b(&self) -> f64 {
        1.0 / (self.inductance_b * self.cap_b).sqrt()
    }

    /// Same ring with every section's inductance multiplied by `factor`.
    pub fn with_inductance_scaled(&self, factor: f64) -> Result<Self> {
        ensure_positive("inductance scale", factor)?;
        Self::with_section_inductances(
            self.total_length,
            self.inductance_a * factor,
            self.inductance_b * factor,
            self.cap_a,
            self.cap_b,
        )
    }

    /// Same ring with the two section types exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            total_length: self.total_length,
            inductance_a: self.inductance_b,
            inductance_b: self.inductance_a,
            cap_a: self.cap_b,
            cap_b: self.cap_a,
        }
    }
}

/// The two fundamental resonance frequencies, in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModePair {
    pub f_a: f64,
    pub f_b: f64,
}

impl ModePair {
    pub fn get(&self, mode: Mode) -> f64 {
        match mode {
            Mode::A => self.f_a,
            Mode::B => self.f_b,
        }
    }
}

/// Current-dependent frequency tuning of the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuningModel {
    f0_a: f64,
    f0_b: f64,
    i_star_a: f64,
    i_star_b: f64,
    alpha_a: f64,
    alpha_b: f64,
}

impl TuningModel {
    pub fn new(
        f0_a: f64,
        f0_b: f64,
        i_star_a: f64,
        i_star_b: f64,
        alpha_a: f64,
        alpha_b: f64,
    ) -> Result<Self> {
        ensure_positive("f0_a", f0_a)?;
        ensure_positive("f0_b", f0_b)?;
        ensure_positive("i_star_a", i_star_a)?;
        ensure_positive("i_star_b", i_star_b)?;
        ensure_finite("alpha_a", alpha_a)?;
        ensure_finite("alpha_b", alpha_b)?;
        Ok(Self {
            f0_a,
            f0_b,
            i_star_a,
            i_star_b,
            alpha_a,
            alpha_b,
        })
    }

    /// Tuning model with the quartic coefficients set to zero.
    pub fn quadratic(f0_a: f64, f0_b: f64, i_star_a: f64, i_star_b: f64) -> Result<Self> {
        Self::new(f0_a, f0_b, i_star_a, i_star_b, 0.0, 0.0)
    }

    pub fn f0(&self, mode: Mode) -> f64 {
        match mode {
            Mode::A => self.f0_a,
            Mode::B => self.f0_b,
        }
    }

    pub fn i_star(&self, mode: Mode) -> f64 {
        match mode {
            Mode::A => self.i_star_a,
            Mode::B => self.i_star_b,
        }
    }

    pub fn alpha(&self, mode: Mode) -> f64 {
        match mode {
            Mode::A => self.alpha_a,
            Mode::B => self.alpha_b,
        }
    }
}

/// Linearized two-mode response parameters in the frame rotating at ω_p/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringParams {
    kappa_a: f64,
    kappa_b: f64,
    xi: Complex64,
    delta_a: f64,
    delta_b: f64,
}

impl ScatteringParams {
    pub fn new(
        kappa_a: f64,
        kappa_b: f64,
        xi: Complex64,
        delta_a: f64,
        delta_b: f64,
    ) -> Result<Self> {
        ensure_positive("kappa_a", kappa_a)?;
        ensure_positive("kappa_b", kappa_b)?;
        ensure_finite("xi.re", xi.re)?;
        ensure_finite("xi.im", xi.im)?;
        ensure_finite("delta_a", delta_a)?;
        ensure_finite("delta_b", delta_b)?;
        Ok(Self {
            kappa_a,
            kappa_b,
            xi,
            delta_a,
            delta_b,
        })
    }

    /// Both modes on resonance with the half pump frequency.
    pub fn on_resonance(kappa_a: f64, kappa_b: f64, xi: Complex64) -> Result<Self> {
        Self::new(kappa_a, kappa_b, xi, 0.0, 0.0)
    }

    pub fn kappa_a(&self) -> f64 {
        self.kappa_a
    }

    pub fn kappa_b(&self) -> f64 {
        self.kappa_b
    }

    pub fn xi(&self) -> Complex64 {
        self.xi
    }

    pub fn delta_a(&self) -> f64 {
        self.delta_a
    }

    pub fn delta_b(&self) -> f64 {
        self.delta_b
    }

    pub fn with_detunings(&self, delta_a: f64, delta_b: f64) -> Result<Self> {
        Self::new(self.kappa_a, self.kappa_b, self.xi, delta_a, delta_b)
    }

    pub fn with_xi(&self, xi: Complex64) -> Result<Self> {
        Self::new(self.kappa_a, self.kappa_b, xi, self.delta_a, self.delta_b)
    }

    /// |ξ| at which the zero-detuning response diverges: 2√(κ_a κ_b).
    pub fn oscillation_threshold(&self) -> f64 {
        2.0 * (self.kappa_a * self.kappa_b).sqrt()
    }

    /// Multiplies every rate and detuning by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.kappa_a * factor,
            self.kappa_b * factor,
            self.xi * factor,
            self.delta_a * factor,
            self.delta_b * factor,
        )
    }
}

/// Lab-frame mode frequencies plus the coupling/pump template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceModes {
    omega_a: f64,
    omega_b: f64,
    params: ScatteringParams,
}

impl DeviceModes {
    pub fn new(omega_a: f64, omega_b: f64, params: ScatteringParams) -> Result<Self> {
        ensure_positive("omega_a", omega_a)?;
        ensure_finite("omega_b", omega_b)?;
        if omega_b <= omega_a {
            return Err(Error::InvalidParameter {
                name: "omega_b",
                reason: format!("must exceed omega_a ({omega_a}), got {omega_b}"),
            });
        }
        Ok(Self {
            omega_a,
            omega_b,
            params,
        })
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn omega_b(&self) -> f64 {
        self.omega_b
    }

    pub fn params(&self) -> &ScatteringParams {
        &self.params
    }

    /// Sets the frame for signal `omega_s` and pump `omega_p` (both rad/s).
    ///
    /// Returns the signal detuning δ = ω_s − ω_p/2 together with parameters
    /// whose detunings are Δ_a = ω_a − ω_p/2 and Δ_b = ω_b − ω_p/2.
    pub fn lab_to_frame(&self, omega_s: f64, omega_p: f64) -> Result<(f64, ScatteringParams)> {
        ensure_positive("omega_s", omega_s)?;
        ensure_positive("omega_p", omega_p)?;
        let half_pump = 0.5 * omega_p;
        let params = self
            .params
            .with_detunings(self.omega_a - half_pump, self.omega_b - half_pump)?;
        Ok((omega_s - half_pump, params))
    }

    /// Frame for a gain-map cell at `x = ω_s − ω_b`, `y = ω_i − ω_a`.
    ///
    /// Equivalent to `lab_to_frame(ω_b + x, ω_a + ω_b + x + y)` but formed
    /// from the mode splitting directly, so small offsets are not rounded
    /// against the absolute lab frequencies.
    pub fn map_axes_to_frame(&self, x: f64, y: f64) -> Result<(f64, ScatteringParams)> {
        ensure_finite("x", x)?;
        ensure_finite("y", y)?;
        let split = self.omega_b - self.omega_a;
        let params = self
            .params
            .with_detunings(-0.5 * (split + x + y), 0.5 * (split - x - y))?;
        Ok((0.5 * (split + x - y), params))
    }
}

/// Recovers the map axes `(ω_s − ω_b, ω_i − ω_a)` from a frame.
pub fn frame_to_axes(delta: f64, params: &ScatteringParams) -> (f64, f64) {
    (delta - params.delta_b(), -(delta + params.delta_a()))
}

/// Coherent drive: `alpha` enters port 1 at the idler frequency, `beta`
/// enters port 2 at the signal frequency. Ports 3 and 4 carry vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriveState {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl DriveState {
    pub fn new(alpha: Complex64, beta: Complex64) -> Self {
        Self { alpha, beta }
    }

    pub fn signal_only(beta: Complex64) -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            beta,
        }
    }
}

/// Complex amplitude gains at a single frequency argument.
///
/// The first letter of each gain is the input, the second the output
/// (`s` = signal/mode b/ports 2,4; `i` = idler/mode a/ports 1,3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    g_ss: Complex64,
    g_si: Complex64,
    g_ii: Complex64,
    g_is: Complex64,
    d_s: Complex64,
    d_i: Complex64,
}

impl GainSet {
    pub(crate) fn from_parts(
        g_ss: Complex64,
        g_si: Complex64,
        g_ii: Complex64,
        g_is: Complex64,
        d_s: Complex64,
        d_i: Complex64,
    ) -> Result<Self> {
        for d in [d_s, d_i] {
            if d.norm() == 0.0 || !d.is_finite() {
                return Err(Error::Pole {
                    magnitude: d.norm(),
                });
            }
        }
        Ok(Self {
            g_ss,
            g_si,
            g_ii,
            g_is,
            d_s,
            d_i,
        })
    }

    pub fn g_ss(&self) -> Complex64 {
        self.g_ss
    }

    pub fn g_si(&self) -> Complex64 {
        self.g_si
    }

    pub fn g_ii(&self) -> Complex64 {
        self.g_ii
    }

    pub fn g_is(&self) -> Complex64 {
        self.g_is
    }

    pub fn d_s(&self) -> Complex64 {
        self.d_s
    }

    pub fn d_i(&self) -> Complex64 {
        self.d_i
    }
}

/// Output quadratures of the signal (port 4) and idler (port 3).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadratureSample {
    pub i_s: f64,
    pub q_s: f64,
    pub i_i: f64,
    pub q_i: f64,
}

impl QuadratureSample {
    pub fn from_outputs(signal: Complex64, idler: Complex64) -> Self {
        Self {
            i_s: signal.re,
            q_s: signal.im,
            i_i: idler.re,
            q_i: idler.im,
        }
    }

    pub fn signal(&self) -> Complex64 {
        Complex64::new(self.i_s, self.q_s)
    }

    pub fn idler(&self) -> Complex64 {
        Complex64::new(self.i_i, self.q_i)
    }
}
