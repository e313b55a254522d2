//! Noiseless datasets generated by the forward models the fitters use.
//!
//! Callers add their own measurement noise; these builders stay
//! deterministic so they can double as round-trip oracles.

use crate::error::Result;
use crate::model::{hz_to_rad, DeviceModes, Mode, ScatteringParams, TuningModel};
use crate::resonance::inductance_factor;
use crate::scattering::{gain_map, noise_figure};

use super::{fringe_model, DataPoint, Dataset, DatasetKind};

/// Signal and idler gains on a grid of map axes given in Hz.
///
/// Cells that sit on a pole of the response are left out.
pub fn gain_map_dataset(modes: &DeviceModes, x_hz: &[f64], y_hz: &[f64]) -> Result<Dataset> {
    let xs: Vec<f64> = x_hz.iter().map(|&v| hz_to_rad(v)).collect();
    let ys: Vec<f64> = y_hz.iter().map(|&v| hz_to_rad(v)).collect();
    let map = gain_map(modes, &xs, &ys)?;
    let mut points = Vec::with_capacity(map.cells.len());
    for (iy, &y) in y_hz.iter().enumerate() {
        for (ix, &x) in x_hz.iter().enumerate() {
            if let Some((gs, gi)) = map.get(ix, iy) {
                points.push(DataPoint::new([x, y], [Some(gs), Some(gi)]));
            }
        }
    }
    Dataset::new(DatasetKind::GainMap, points)
}

/// Mode frequencies (Hz) of a tuning model at the given bias currents (A).
pub fn tuning_dataset(model: &TuningModel, currents: &[f64]) -> Result<Dataset> {
    let points = currents
        .iter()
        .map(|&i| {
            let f = |m| model.f0(m) / inductance_factor(i, model, m).sqrt();
            DataPoint::new([i, 0.0], [Some(f(Mode::A)), Some(f(Mode::B))])
        })
        .collect();
    Dataset::new(DatasetKind::Tuning, points)
}

/// Interference fringes at each signal offset (Hz) over the given phases.
pub fn fringe_dataset(
    sp: &ScatteringParams,
    power_ratio: f64,
    phase_offset: f64,
    offsets_hz: &[f64],
    phases: &[f64],
) -> Result<Dataset> {
    let mut points = Vec::with_capacity(offsets_hz.len() * phases.len());
    for &offset in offsets_hz {
        let (gs, gi) = fringe_model(sp, power_ratio, phase_offset, hz_to_rad(offset), phases)?;
        for (k, &phi) in phases.iter().enumerate() {
            points.push(DataPoint::new([phi, offset], [Some(gs[k]), Some(gi[k])]));
        }
    }
    Dataset::new(DatasetKind::Fringe, points)
}

/// Noise figure (linear) at each linear gain.
pub fn noise_dataset(n_ratio: f64, gains: &[f64]) -> Result<Dataset> {
    let points = gains
        .iter()
        .map(|&g| DataPoint::new([g, 0.0], [Some(noise_figure(g, n_ratio)), None]))
        .collect();
    Dataset::new(DatasetKind::Noise, points)
}
