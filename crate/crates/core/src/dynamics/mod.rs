//! Time-dependent dynamics under the shaken lattice: a few-mode solver at
//! fixed quasimomentum for gate design and verification, and split-step
//! spectral grid solvers (1D and 2D) for wavepacket simulation with
//! inertial signals.

mod fewmode;
mod grid1d;
mod grid2d;
mod measure;
mod waveform;

pub use fewmode::{propagate_fewmode, FewModePropagator, FewModeTrajectory};
pub use grid1d::{evolve_grid_1d, prepare_wavepacket, EvolveOptions, Grid1d, Snapshot1d, Trajectory1d, Wavefunction1d};
pub use grid2d::{evolve_grid_2d, prepare_wavepacket_2d, Grid2dSpec, Snapshot2d, Trajectory2d, Wavefunction2d};
pub use measure::{density_snapshot, measure_momentum_orders, measure_momentum_orders_axis, vibrational_spectrum, DensityProfile};
pub use waveform::{DriveSegment, GateRole, Waveform, WaveformMeta, SAMPLE_PERIOD_NS};

use serde::{Deserialize, Serialize};

/// An inertial signal applied to the atoms as a lab-frame potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SignalSpec {
    None,
    /// Acceleration a in m/s^2: V_I(x) = m a x.
    Acceleration(f64),
    /// Gradient g' in 1/s^2: V_I(x) = m g' x^2.
    Gradient(f64),
    /// Rotation Omega in rad/s about the axis normal to the x-z plane.
    Rotation(f64),
}

impl SignalSpec {
    pub fn magnitude(&self) -> f64 {
        match *self {
            SignalSpec::None => 0.0,
            SignalSpec::Acceleration(a) => a,
            SignalSpec::Gradient(g) => g,
            SignalSpec::Rotation(o) => o,
        }
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        if !self.magnitude().is_finite() {
            return Err(crate::error::Error::Invalid("signal magnitude must be finite".into()));
        }
        Ok(())
    }

    pub fn with_magnitude(&self, v: f64) -> SignalSpec {
        match self {
            SignalSpec::None => SignalSpec::None,
            SignalSpec::Acceleration(_) => SignalSpec::Acceleration(v),
            SignalSpec::Gradient(_) => SignalSpec::Gradient(v),
            SignalSpec::Rotation(_) => SignalSpec::Rotation(v),
        }
    }
}
