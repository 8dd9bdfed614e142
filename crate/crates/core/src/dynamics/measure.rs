//! Emulated readout: time-of-flight momentum orders, in-situ density,
//! and the vibrational spectrum of a hold trajectory.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeConfig, MomentumDistribution};

use super::grid1d::Wavefunction1d;
use super::grid2d::Wavefunction2d;

/// Highest reported momentum order; weight beyond is the residual channel.
pub const MAX_ORDER: i64 = 5;

fn bin_orders(power: &[f64], ks: &[f64], total: f64) -> MomentumDistribution {
    let orders: Vec<i64> = (-MAX_ORDER..=MAX_ORDER).collect();
    let mut probabilities = vec![0.0; orders.len()];
    for (p, &k) in power.iter().zip(ks) {
        // bins are 2 hbar k_L wide, centered on even multiples of k_L
        let m = ((k + 1.0).div_euclid(2.0)).floor() as i64;
        if (-MAX_ORDER..=MAX_ORDER).contains(&m) {
            probabilities[(m + MAX_ORDER) as usize] += p / total;
        }
    }
    MomentumDistribution { orders, probabilities }
}

/// TOF-style readout: momentum-space density integrated over bins
/// [(2m-1) k_L, (2m+1) k_L), reported for orders |m| <= 5.
pub fn measure_momentum_orders(wf: &Wavefunction1d) -> MomentumDistribution {
    let n = wf.grid.n;
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = wf.psi.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut buf, &mut scratch);
    let power: Vec<f64> = buf.iter().map(|b| b.norm_sqr()).collect();
    let ks: Vec<f64> = (0..n).map(|j| wf.grid.k(j)).collect();
    let total: f64 = power.iter().sum();
    bin_orders(&power, &ks, total)
}

/// Momentum orders along one axis of a 2D state (0 = x, 1 = z), with the
/// other axis traced out.
pub fn measure_momentum_orders_axis(wf: &Wavefunction2d, axis: usize) -> MomentumDistribution {
    let power = wf.momentum_power_axis(axis);
    let ks: Vec<f64> = (0..power.len()).map(|j| wf.k_axis(axis, j)).collect();
    let total: f64 = power.iter().sum();
    bin_orders(&power, &ks, total)
}

/// In-situ density profile; integrates to 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityProfile {
    /// Positions in meters.
    pub positions: Vec<f64>,
    /// Probability density per meter.
    pub density: Vec<f64>,
    /// Time stamp, seconds.
    pub t: f64,
}

pub fn density_snapshot(wf: &Wavefunction1d, config: &LatticeConfig) -> DensityProfile {
    let kl = config.k_l();
    let positions: Vec<f64> = (0..wf.grid.n).map(|i| wf.grid.x(i) / kl).collect();
    let density: Vec<f64> = wf.psi.iter().map(|p| p.norm_sqr() * kl).collect();
    DensityProfile { positions, density, t: wf.t }
}

/// Dominant nonzero frequency (Hz) of a momentum-population time series
/// recorded during a hold. Uses a Hann window and parabolic peak
/// interpolation on a zero-padded DFT.
pub fn vibrational_spectrum(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 8 {
        return Err(Error::WindowTooShort(format!("{} samples", series.len())));
    }
    let n = series.len();
    let t0 = series[0].0;
    let t1 = series[n - 1].0;
    let duration = t1 - t0;
    if duration <= 0.0 {
        return Err(Error::WindowTooShort("non-increasing time stamps".into()));
    }
    let dt = duration / (n - 1) as f64;
    let mean = series.iter().map(|&(_, p)| p).sum::<f64>() / n as f64;

    let pad = (8 * n).next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); pad];
    for (i, &(_, p)) in series.iter().enumerate() {
        let w = 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos());
        buf[i] = C64::new((p - mean) * w, 0.0);
    }
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(pad);
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut buf, &mut scratch);

    // positive frequencies, skipping the Hann-widened DC lobe
    let lo = (3 * pad) / (n - 1); // ~3 bins of the original resolution
    let hi = pad / 2;
    let mut peak = lo;
    let mut peak_mag = 0.0;
    for j in lo..hi {
        let m = buf[j].norm();
        if m > peak_mag {
            peak_mag = m;
            peak = j;
        }
    }
    if peak_mag < 1e-6 {
        return Err(Error::Numerical("no oscillation above the noise floor".into()));
    }
    // parabolic interpolation around the peak
    let ym = buf[peak - 1].norm();
    let y0 = buf[peak].norm();
    let yp = buf[peak + 1].norm();
    let denom = ym - 2.0 * y0 + yp;
    let delta = if denom.abs() > 1e-300 { 0.5 * (ym - yp) / denom } else { 0.0 };
    let freq = (peak as f64 + delta) / (pad as f64 * dt);
    if duration < 2.0 / freq {
        return Err(Error::WindowTooShort(format!(
            "window {duration:.3e} s covers fewer than two periods of {freq:.1} Hz"
        )));
    }
    Ok(freq)
}
