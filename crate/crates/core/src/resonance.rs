//! Fundamental resonances of the four-section ring, their standing-wave
//! profiles, and DC-current tuning.
//!
//! Each mode obeys `tan(ωl/8v_a)·tan(ωl/8v_b) = Z_a/Z_b` (mode a) or
//! `Z_b/Z_a` (mode b). The residual has tangent poles interleaved with its
//! roots, so the solver partitions the band at the analytically known pole
//! frequencies before scanning for sign changes.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Mode, ModePair, RingGeometry, TuningModel};

/// Minimum |cos| of either tangent argument accepted by the residual.
pub const POLE_GUARD: f64 = 1e-9;

/// Relative tolerance to which roots are refined.
pub const ROOT_RTOL: f64 = 1e-14;

/// Relative mismatch above which boundary conditions count as violated.
const BOUNDARY_TOL: f64 = 1e-8;

fn tangent_arguments(f_hz: f64, geom: &RingGeometry) -> (f64, f64) {
    let scale = TAU * f_hz * geom.total_length() / 8.0;
    (scale / geom.velocity_a(), scale / geom.velocity_b())
}

fn impedance_ratio(geom: &RingGeometry, mode: Mode) -> f64 {
    match mode {
        Mode::A => geom.impedance_a() / geom.impedance_b(),
        Mode::B => geom.impedance_b() / geom.impedance_a(),
    }
}

/// Residual of the characteristic equation of `mode` at `f_hz`.
///
/// Zero exactly at a resonance. Fails with [`Error::PoleProximity`] when
/// either tangent argument is within [`POLE_GUARD`] of `π/2 + nπ`.
pub fn characteristic_residual(f_hz: f64, geom: &RingGeometry, mode: Mode) -> Result<f64> {
    if !(f_hz.is_finite() && f_hz > 0.0) {
        return Err(Error::InvalidParameter {
            name: "f",
            reason: format!("must be finite and > 0, got {f_hz}"),
        });
    }
    let (ta, tb) = tangent_arguments(f_hz, geom);
    if ta.cos().abs() <= POLE_GUARD || tb.cos().abs() <= POLE_GUARD {
        return Err(Error::PoleProximity { f_hz });
    }
    Ok(ta.tan() * tb.tan() - impedance_ratio(geom, mode))
}

/// Frequencies in `(f_min, f_max)` where either tangent has a pole.
fn pole_frequencies(geom: &RingGeometry, f_min: f64, f_max: f64) -> Vec<f64> {
    let mut poles = Vec::new();
    for v in [geom.velocity_a(), geom.velocity_b()] {
        // argument ωl/8v = π/2 + nπ  ⇔  f = (2n+1)·2v/l
        let spacing = 4.0 * v / geom.total_length();
        let first = 2.0 * v / geom.total_length();
        let n0 = ((f_min - first) / spacing).ceil().max(0.0) as u64;
        let mut n = n0;
        loop {
            let f = first + n as f64 * spacing;
            if f >= f_max {
                break;
            }
            if f > f_min {
                poles.push(f);
            }
            n += 1;
        }
    }
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    poles
}

/// All roots of the characteristic equation of `mode` inside the band.
pub fn roots_in_band(geom: &RingGeometry, mode: Mode, band: (f64, f64)) -> Result<Vec<f64>> {
    let (f_min, f_max) = band;
    if !(f_min.is_finite() && f_min > 0.0) {
        return Err(Error::InvalidParameter {
            name: "band.f_min",
            reason: format!("must be finite and > 0, got {f_min}"),
        });
    }
    if !(f_max.is_finite() && f_max > f_min) {
        return Err(Error::InvalidParameter {
            name: "band.f_max",
            reason: format!("must be finite and exceed f_min ({f_min}), got {f_max}"),
        });
    }

    let step = geom.velocity_a().min(geom.velocity_b()) / (32.0 * geom.total_length());
    let mut edges = vec![f_min];
    edges.extend(pole_frequencies(geom, f_min, f_max));
    edges.push(f_max);

    let residual = |f: f64| characteristic_residual(f, geom, mode).ok();
    let mut roots = Vec::new();
    for pair in edges.windows(2) {
        // keep clear of the poles bounding this piece
        let guard = 1e-7 * pair[1];
        let lo = if pair[0] > f_min { pair[0] + guard } else { pair[0] };
        let hi = if pair[1] < f_max { pair[1] - guard } else { pair[1] };
        if hi <= lo {
            continue;
        }
        let n = ((hi - lo) / step).ceil().max(1.0) as usize;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=n {
            let f = if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 };
            let Some(r) = residual(f) else {
                prev = None;
                continue;
            };
            if r == 0.0 {
                roots.push(f);
                prev = Some((f, r));
                continue;
            }
            if let Some((fp, rp)) = prev {
                if rp != 0.0 && rp.signum() != r.signum() {
                    roots.push(brent(|x| residual(x).unwrap_or(f64::NAN), fp, f, rp, r));
                }
            }
            prev = Some((f, r));
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    Ok(roots)
}

/// Brent's method on a bracket with `fa`, `fb` of opposite sign.
fn brent(f: impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64) -> f64 {
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * ROOT_RTOL * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            // stepped onto a guarded point; fall back to bisection
            b = a + 0.5 * (c - a);
            fb = f(b);
        }
    }
    b
}

fn solve_one(geom: &RingGeometry, mode: Mode, band: (f64, f64)) -> Result<f64> {
    let roots = roots_in_band(geom, mode, band)?;
    match roots.as_slice() {
        [] => Err(Error::NoRootInBand {
            mode: mode.label(),
            f_min: band.0,
            f_max: band.1,
        }),
        [f] => Ok(*f),
        many => Err(Error::MultipleRootsInBand {
            mode: mode.label(),
            count: many.len(),
            f_min: band.0,
            f_max: band.1,
        }),
    }
}

/// Fundamental resonance frequencies (Hz) of both modes within `band`.
pub fn solve_mode_frequencies(geom: &RingGeometry, band: (f64, f64)) -> Result<ModePair> {
    Ok(ModePair {
        f_a: solve_one(geom, Mode::A, band)?,
        f_b: solve_one(geom, Mode::B, band)?,
    })
}

/// Amplitude and phase of the standing wave in one section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionAmplitude {
    pub amplitude: f64,
    pub phase: f64,
}

/// Voltage and current standing waves of one mode around the ring.
///
/// Positions are arc lengths measured from port 1 (centre of section 1)
/// towards port 2, covering `[-l/8, 7l/8]`. Each section is sampled
/// including both of its end points, so boundary positions appear twice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeProfile {
    pub mode: Mode,
    pub frequency: f64,
    pub positions: Vec<f64>,
    pub voltage: Vec<f64>,
    pub current: Vec<f64>,
    pub section_amplitudes: [SectionAmplitude; 4],
    wavenumbers: [f64; 4],
    impedances: [f64; 4],
    section_length: f64,
}

impl ModeProfile {
    /// Section index (0-based) and local coordinate `x ∈ [-l/8, l/8]`.
    fn locate(&self, s: f64) -> (usize, f64) {
        let len = self.section_length;
        let shifted = (s + 0.5 * len).rem_euclid(4.0 * len);
        let j = ((shifted / len).floor() as usize).min(3);
        (j, shifted - j as f64 * len - 0.5 * len)
    }

    fn eval_in(&self, j: usize, x: f64) -> (f64, f64) {
        let SectionAmplitude { amplitude, phase } = self.section_amplitudes[j];
        let arg = self.wavenumbers[j] * x + phase;
        (
            self.impedances[j] * amplitude * arg.cos(),
            amplitude * arg.sin(),
        )
    }

    /// Voltage and current at arc length `s` (wrapped onto the ring).
    pub fn evaluate(&self, s: f64) -> (f64, f64) {
        let (j, x) = self.locate(s);
        self.eval_in(j, x)
    }

    /// Voltage and current at the ends of section `j` (0-based):
    /// `(left end, right end)`.
    pub fn section_ends(&self, j: usize) -> ((f64, f64), (f64, f64)) {
        let h = 0.5 * self.section_length;
        (self.eval_in(j, -h), self.eval_in(j, h))
    }

    /// Arc length of the centre of section `j` (0-based).
    pub fn section_center(&self, j: usize) -> f64 {
        j as f64 * self.section_length
    }
}

/// Standing-wave profile of `mode` at its solved frequency.
///
/// Voltage antinodes of mode a sit at the centres of sections 1/3 and its
/// nodes at sections 2/4; mode b is the reverse. The result is normalized
/// so that the largest |voltage| on the ring equals 1.
pub fn mode_profile(
    geom: &RingGeometry,
    modes: &ModePair,
    mode: Mode,
    samples_per_section: usize,
) -> Result<ModeProfile> {
    if samples_per_section < 3 {
        return Err(Error::InvalidParameter {
            name: "samples_per_section",
            reason: format!("must be at least 3, got {samples_per_section}"),
        });
    }
    let f = modes.get(mode);
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidParameter {
            name: "modes",
            reason: format!("{mode} frequency must be positive, got {f}"),
        });
    }
    let omega = TAU * f;
    let (za, zb) = (geom.impedance_a(), geom.impedance_b());
    let (k1, k2) = (omega / geom.velocity_a(), omega / geom.velocity_b());
    let h = geom.total_length() / 8.0;

    // Continuity at the section-1/2 junction: A1·c1 = A2·c2 for current and
    // Z_a·A1·v1 = Z_b·A2·v2 for voltage.
    let (c1, c2, v1, v2) = match mode {
        Mode::A => ((k1 * h).sin(), (k2 * h).cos(), (k1 * h).cos(), (k2 * h).sin()),
        Mode::B => ((k1 * h).cos(), (k2 * h).sin(), (k1 * h).sin(), (k2 * h).cos()),
    };
    let a1 = 1.0;
    // solve with whichever junction equation is better conditioned
    let a2 = if c2.abs() >= v2.abs() {
        a1 * c1 / c2
    } else {
        a1 * za * v1 / (zb * v2)
    };
    let current_scale = c1.abs().max((a2 * c2).abs()).max(f64::MIN_POSITIVE);
    let voltage_scale = (za * v1).abs().max((zb * a2 * v2).abs()).max(f64::MIN_POSITIVE);
    let residual = ((a1 * c1 - a2 * c2).abs() / current_scale)
        .max((za * a1 * v1 - zb * a2 * v2).abs() / voltage_scale);
    if !residual.is_finite() || residual > BOUNDARY_TOL {
        return Err(Error::InconsistentModes { residual });
    }

    let phases: [f64; 4] = match mode {
        Mode::A => [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
        Mode::B => [FRAC_PI_2, PI, 3.0 * FRAC_PI_2, TAU],
    };
    let amps = [a1, a2, a1, a2];
    let wavenumbers = [k1, k2, k1, k2];
    let impedances = [za, zb, za, zb];

    // largest |Z_j A_j cos(k_j x + φ_j)| over x ∈ [-h, h]
    let vmax = (0..4)
        .map(|j| {
            let lo = phases[j] - wavenumbers[j] * h;
            let hi = phases[j] + wavenumbers[j] * h;
            let peak = if (lo / PI).ceil() <= hi / PI {
                1.0
            } else {
                lo.cos().abs().max(hi.cos().abs())
            };
            (impedances[j] * amps[j]).abs() * peak
        })
        .fold(0.0_f64, f64::max);
    let norm = 1.0 / vmax;

    let mut profile = ModeProfile {
        mode,
        frequency: f,
        positions: Vec::with_capacity(4 * samples_per_section),
        voltage: Vec::with_capacity(4 * samples_per_section),
        current: Vec::with_capacity(4 * samples_per_section),
        section_amplitudes: std::array::from_fn(|j| SectionAmplitude {
            amplitude: amps[j] * norm,
            phase: phases[j],
        }),
        wavenumbers,
        impedances,
        section_length: 2.0 * h,
    };
    for j in 0..4 {
        for k in 0..samples_per_section {
            let x = -h + 2.0 * h * k as f64 / (samples_per_section - 1) as f64;
            let (v, i) = profile.eval_in(j, x);
            profile.positions.push(j as f64 * 2.0 * h + x);
            profile.voltage.push(v);
            profile.current.push(i);
        }
    }
    Ok(profile)
}

/// Inductance ratio `L(I)/L0 = 1 + u² + α·u⁴` with `u = (I/2)/I*`.
///
/// The bias current splits between the two halves of the ring, hence the
/// factor 1/2. The sign of `i_dc` is irrelevant.
pub fn inductance_factor(i_dc: f64, tuning: &TuningModel, mode: Mode) -> f64 {
    let u = 0.5 * i_dc.abs() / tuning.i_star(mode);
    let u2 = u * u;
    1.0 + u2 + tuning.alpha(mode) * u2 * u2
}

/// Mode frequencies at each bias current.
///
/// A uniform rescaling of the inductance leaves the impedance ratio in the
/// characteristic equation unchanged and scales both velocities by
/// `1/√factor`, so `f_m(I) = f0_m / √(L(I)/L0)` exactly.
pub fn tuning_curve(tuning: &TuningModel, currents: &[f64]) -> Result<Vec<ModePair>> {
    let mut last = 0.0;
    for (k, &i) in currents.iter().enumerate() {
        if !(i.is_finite() && i >= 0.0) || (k > 0 && i < last) {
            return Err(Error::InvalidParameter {
                name: "currents",
                reason: format!("must be nonnegative and ascending; entry {k} is {i}"),
            });
        }
        last = i;
    }
    currents
        .iter()
        .map(|&i| {
            let shift = |mode| {
                let factor = inductance_factor(i, tuning, mode);
                if factor < 1.0 {
                    Err(Error::InvalidParameter {
                        name: "alpha",
                        reason: format!(
                            "L(I)/L0 = {factor} < 1 at I = {i} A for {mode}; quartic term too negative"
                        ),
                    })
                } else {
                    Ok(tuning.f0(mode) / factor.sqrt())
                }
            };
            Ok(ModePair {
                f_a: shift(Mode::A)?,
                f_b: shift(Mode::B)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const L_TOTAL: f64 = 2.2e-3;

    fn device_ring() -> RingGeometry {
        RingGeometry::from_impedances(L_TOTAL, 1.0e-4, 940.0, 1320.0).unwrap()
    }

    /// Independent brute-force root locator: dense scan of the raw formula,
    /// skipping sign flips where |residual| is large (poles).
    fn scan_roots(geom: &RingGeometry, ratio: f64, f_lo: f64, f_hi: f64, n: usize) -> Vec<f64> {
        let r = |f: f64| {
            let a = TAU * f * geom.total_length() / 8.0;
            (a / geom.velocity_a()).tan() * (a / geom.velocity_b()).tan() - ratio
        };
        let mut out = Vec::new();
        let mut prev = (f_lo, r(f_lo));
        for k in 1..=n {
            let f = f_lo + (f_hi - f_lo) * k as f64 / n as f64;
            let v = r(f);
            if prev.1.signum() != v.signum() && prev.1.abs() < 10.0 && v.abs() < 10.0 {
                out.push(prev.0 - prev.1 * (f - prev.0) / (v - prev.1));
            }
            prev = (f, v);
        }
        out
    }

    #[test]
    fn symmetric_ring_residual_vanishes_at_v_over_l() {
        let g = RingGeometry::from_impedances(L_TOTAL, 1e-4, 1000.0, 1000.0).unwrap();
        let f = g.velocity_a() / L_TOTAL;
        assert!(characteristic_residual(f, &g, Mode::A).unwrap().abs() < 1e-14);
        assert!(characteristic_residual(f, &g, Mode::B).unwrap().abs() < 1e-14);
    }

    #[test]
    fn device_geometry_residual_near_4_47_ghz() {
        let g = device_ring();
        let r = characteristic_residual(4.47e9, &g, Mode::A).unwrap();
        assert!(r.abs() < 2e-3, "residual {r}");
    }

    #[test]
    fn residual_rejects_pole() {
        let g = device_ring();
        // first pole of the mode-a section tangent: f = 2 v_a / l
        let f_pole = 2.0 * g.velocity_a() / L_TOTAL;
        assert!(matches!(
            characteristic_residual(f_pole, &g, Mode::A),
            Err(Error::PoleProximity { .. })
        ));
        assert!(characteristic_residual(-1.0, &g, Mode::A).is_err());
    }

    #[test]
    fn equal_velocity_closed_form_root() {
        let v = 1.0e7;
        let expected = 8.0 * 0.5_f64.sqrt().atan() / TAU * v / L_TOTAL;
        assert_relative_eq!(expected / (v / L_TOTAL), 0.7837, epsilon = 1e-4);
        let brute = {
            let r = |f: f64| (TAU * f * L_TOTAL / (8.0 * v)).tan().powi(2) - 0.5;
            let (mut lo, mut hi) = (0.5 * v / L_TOTAL, 1.0 * v / L_TOTAL);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if r(lo).signum() == r(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        assert_relative_eq!(brute, expected, max_relative = 1e-12);

        let g = RingGeometry::from_lines(L_TOTAL, v, v, 500.0, 1000.0).unwrap();
        assert!(characteristic_residual(expected, &g, Mode::A).unwrap().abs() < 1e-12);
        let modes = solve_mode_frequencies(&g, (1e9, 8e9)).unwrap();
        assert_relative_eq!(modes.f_a, expected, max_relative = 1e-12);
        assert_relative_eq!(modes.f_a, 3.562e9, max_relative = 1e-3);
        assert_relative_eq!(modes.f_b, 5.529e9, max_relative = 1e-3);
        assert_relative_eq!(modes.f_a + modes.f_b, 2.0 * v / L_TOTAL, max_relative = 1e-12);
        let scanned = scan_roots(&g, 2.0, 1e9, 8e9, 100_000);
        assert_eq!(scanned.len(), 1);
        assert_relative_eq!(scanned[0], modes.f_b, max_relative = 1e-8);
    }

    #[test]
    fn solves_device_geometry() {
        let g = device_ring();
        let modes = solve_mode_frequencies(&g, (1e9, 8e9)).unwrap();
        assert_relative_eq!(modes.f_a, 4.4694e9, max_relative = 1e-4);
        assert_relative_eq!(modes.f_b, 5.5051e9, max_relative = 1e-4);
        assert!((modes.f_a / 4.5e9 - 1.0).abs() < 0.02);
        assert!((modes.f_b / 5.5e9 - 1.0).abs() < 0.02);
        for (f, mode) in [(modes.f_a, Mode::A), (modes.f_b, Mode::B)] {
            assert!(characteristic_residual(f, &g, mode).unwrap().abs() < 1e-10);
        }
        // brute-force scan agrees
        let ratio = g.impedance_a() / g.impedance_b();
        let scanned = scan_roots(&g, ratio, 1e9, 8e9, 200_000);
        assert_eq!(scanned.len(), 1);
        assert_relative_eq!(scanned[0], modes.f_a, max_relative = 1e-8);
    }

    #[test]
    fn symmetric_ring_is_degenerate() {
        let v = 1.0e7;
        let l_per = 1e-4;
        let c = 1.0 / (l_per * v * v);
        let g = RingGeometry::new(L_TOTAL, l_per, c, c).unwrap();
        let modes = solve_mode_frequencies(&g, (1e9, 8e9)).unwrap();
        assert_relative_eq!(modes.f_a, 4.545454545e9, max_relative = 1e-9);
        assert_relative_eq!(modes.f_b, modes.f_a, max_relative = 1e-13);
    }

    #[test]
    fn swap_symmetry() {
        let g = device_ring();
        let m = solve_mode_frequencies(&g, (1e9, 8e9)).unwrap();
        let s = solve_mode_frequencies(&g.swapped(), (1e9, 8e9)).unwrap();
        assert_relative_eq!(m.f_a, s.f_b, max_relative = 1e-13);
        assert_relative_eq!(m.f_b, s.f_a, max_relative = 1e-13);
    }

    #[test]
    fn band_errors() {
        let g = device_ring();
        assert!(matches!(
            solve_mode_frequencies(&g, (1e9, 2e9)),
            Err(Error::NoRootInBand { mode: 'a', .. })
        ));
        assert!(matches!(
            solve_mode_frequencies(&g, (1e9, 40e9)),
            Err(Error::MultipleRootsInBand { .. })
        ));
        assert!(solve_mode_frequencies(&g, (0.0, 8e9)).is_err());
        assert!(solve_mode_frequencies(&g, (5e9, 4e9)).is_err());
    }

    #[test]
    fn symmetric_profile_is_cosine() {
        let g = RingGeometry::from_impedances(L_TOTAL, 1e-4, 1000.0, 1000.0).unwrap();
        let modes = solve_mode_frequencies(&g, (1e9, 7e9)).unwrap();
        let p = mode_profile(&g, &modes, Mode::A, 33).unwrap();
        for (s, v) in p.positions.iter().zip(&p.voltage) {
            assert!((v - (TAU * s / L_TOTAL).cos()).abs() < 1e-9, "s={s} v={v}");
        }
        let max = p.voltage.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert_relative_eq!(max, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn device_profile_nodes_and_amplitudes() {
        let g = device_ring();
        let modes = solve_mode_frequencies(&g, (1e9, 8e9)).unwrap();
        let p = mode_profile(&g, &modes, Mode::A, 21).unwrap();
        for j in [1, 3] {
            let (v, _) = p.evaluate(p.section_center(j));
            assert!(v.abs() < 1e-9, "mode a node at section {}: {v}", j + 1);
        }
        let h = L_TOTAL / 8.0;
        let k1 = TAU * modes.f_a / g.velocity_a();
        let k2 = TAU * modes.f_a / g.velocity_b();
        let ratio = p.section_amplitudes[1].amplitude / p.section_amplitudes[0].amplitude;
        assert_relative_eq!(ratio, (k1 * h).sin() / (k2 * h).cos(), max_relative = 1e-12);
        // numeric continuity straddling the 1/2 junction
        let eps = 1e-12;
        let (vl, il) = p.evaluate(h - eps);
        let (vr, ir) = p.evaluate(h + eps);
        assert!((vl - vr).abs() < 1e-6 && (il - ir).abs() < 1e-6);

        let pb = mode_profile(&g, &modes, Mode::B, 21).unwrap();
        for j in [0, 2] {
            let (v, _) = pb.evaluate(pb.section_center(j));
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn profile_rejects_non_resonant_frequency() {
        let g = device_ring();
        let bad = ModePair { f_a: 4.0e9, f_b: 5.0e9 };
        assert!(matches!(
            mode_profile(&g, &bad, Mode::A, 8),
            Err(Error::InconsistentModes { .. })
        ));
        let modes = solve_mode_frequencies(&g, (1e9, 8e9)).unwrap();
        assert!(mode_profile(&g, &modes, Mode::A, 2).is_err());
    }

    #[test]
    fn inductance_factor_cases() {
        let t = TuningModel::quadratic(5.5e9, 6.3e9, 779e-6, 1033e-6).unwrap();
        assert_eq!(inductance_factor(0.0, &t, Mode::A), 1.0);
        assert_relative_eq!(
            inductance_factor(320e-6, &t, Mode::A),
            1.0 + (160.0_f64 / 779.0).powi(2),
            max_relative = 1e-14
        );
        assert_relative_eq!(inductance_factor(320e-6, &t, Mode::A), 1.04218, epsilon = 1e-5);
        let t1 = TuningModel::new(5.5e9, 6.3e9, 1e-3, 1e-3, 1.0, 1.0).unwrap();
        assert_relative_eq!(inductance_factor(2e-3, &t1, Mode::B), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn tuning_curve_shift_and_monotonicity() {
        let t = TuningModel::quadratic(5.5e9, 6.3e9, 779e-6, 1033e-6).unwrap();
        let curve = tuning_curve(&t, &[0.0, 100e-6, 320e-6]).unwrap();
        assert_eq!(curve[0], ModePair { f_a: 5.5e9, f_b: 6.3e9 });
        assert_relative_eq!(curve[2].f_a, 5.388e9, max_relative = 2e-4);
        let shift = curve[2].f_a / 5.5e9 - 1.0;
        assert!((shift + 0.0205).abs() < 1e-4, "shift {shift}");
        assert!(curve.windows(2).all(|w| w[1].f_a < w[0].f_a && w[1].f_b < w[0].f_b));
        assert!(tuning_curve(&t, &[1e-4, 0.0]).is_err());
        assert!(tuning_curve(&t, &[-1e-4]).is_err());
    }

    #[test]
    fn tuning_curve_rejects_negative_quartic_runaway() {
        let t = TuningModel::new(5.5e9, 6.3e9, 1e-4, 1e-4, -1.0, 0.0).unwrap();
        assert!(tuning_curve(&t, &[1e-3]).is_err());
    }
}
