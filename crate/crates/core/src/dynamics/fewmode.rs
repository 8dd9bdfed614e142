//! Propagation of plane-wave coefficients at fixed quasimomentum.
//!
//! The lattice-phase control enters as H(phi) = D(phi) H(0) D(phi)^dag with
//! D(phi) = diag(exp(i l phi)), so every per-sample propagator is the
//! similarity transform of one precomputed matrix exponential
//! U0 = exp(-i H(0) dt). Each step is therefore exact for a
//! piecewise-constant control and costs one small matrix-vector product.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{BlochState, LatticeConfig};
use crate::linalg;

use super::waveform::Waveform;

pub struct FewModePropagator {
    /// Plane-wave orders l as floats.
    pub l: Vec<f64>,
    /// Eigenvalues of H(q, phi=0) in E_r.
    pub evals: Vec<f64>,
    /// Real orthogonal eigenvector matrix of H(q, 0), columns are states.
    pub evecs: Array2<f64>,
    pub q: f64,
    pub recoil_time: f64,
}

impl FewModePropagator {
    pub fn new(config: &LatticeConfig, q: f64) -> Result<Self> {
        let n = config.dim();
        let diag: Vec<f64> = config.orders().map(|l| (2.0 * l as f64 + q).powi(2)).collect();
        let off = vec![config.depth / 4.0; n - 1];
        let (evals, evecs) =
            linalg::eig_sym_tridiag(&diag, &off).map_err(|_| Error::EigenConvergence { q })?;
        Ok(Self {
            l: config.orders().map(|l| l as f64).collect(),
            evals,
            evecs,
            q,
            recoil_time: config.recoil_time(),
        })
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    /// U0 = exp(-i H(q,0) dt), dt in recoil times.
    pub fn u0(&self, dt_tr: f64) -> Array2<C64> {
        let n = self.dim();
        let mut u = Array2::<C64>::zeros((n, n));
        // W exp(-i E dt) W^T
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    let ph = C64::from_polar(1.0, -self.evals[k] * dt_tr);
                    acc += self.evecs[(i, k)] * ph * self.evecs[(j, k)];
                }
                u[(i, j)] = acc;
            }
        }
        u
    }

    /// One step psi <- D(phi) U0 D(phi)^dag psi.
    pub fn apply_step(&self, u0: &Array2<C64>, phi: f64, psi: &mut [C64], scratch: &mut [C64]) {
        for ((s, p), &l) in scratch.iter_mut().zip(psi.iter()).zip(&self.l) {
            *s = p * C64::from_polar(1.0, -l * phi);
        }
        let tmp: Vec<C64> = scratch.to_vec();
        linalg::matvec(u0, &tmp, scratch);
        for ((p, s), &l) in psi.iter_mut().zip(scratch.iter()).zip(&self.l) {
            *p = s * C64::from_polar(1.0, l * phi);
        }
    }

    /// Eigenstate n of H(q, 0) as a phase-fixed coefficient vector.
    pub fn eigenstate(&self, band: usize) -> Array1<C64> {
        let mut c = linalg::column_c64(&self.evecs, band);
        crate::lattice::fix_phase(&mut c);
        c
    }
}

#[derive(Debug, Clone)]
pub struct FewModeTrajectory {
    /// Times in seconds at each recorded snapshot.
    pub times: Vec<f64>,
    pub snapshots: Vec<Array1<C64>>,
    pub final_coeffs: Array1<C64>,
}

/// Propagate an initial state through a sampled waveform at fixed
/// quasimomentum. `snap_every` records every k-th sample when set.
pub fn propagate_fewmode(
    initial: &BlochState,
    waveform: &Waveform,
    config: &LatticeConfig,
    snap_every: Option<usize>,
) -> Result<FewModeTrajectory> {
    if initial.coeffs.len() != config.dim() {
        return Err(Error::Invalid(format!(
            "state dimension {} does not match config dimension {}",
            initial.coeffs.len(),
            config.dim()
        )));
    }
    let dt_ns = waveform.sample_period_ns;
    let shaken = waveform.samples.iter().any(|&s| s != 0.0);
    if shaken && dt_ns > 1_000 {
        return Err(Error::StepTooLarge { dt_us: dt_ns as f64 * 1e-3 });
    }
    let prop = FewModePropagator::new(config, initial.q)?;
    let dt_tr = dt_ns as f64 * 1e-9 / config.recoil_time();
    let u0 = prop.u0(dt_tr);

    let mut psi: Vec<C64> = initial.coeffs.to_vec();
    let mut scratch = vec![C64::new(0.0, 0.0); psi.len()];
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    for (k, &phi) in waveform.samples.iter().enumerate() {
        prop.apply_step(&u0, phi, &mut psi, &mut scratch);
        if let Some(every) = snap_every {
            if (k + 1) % every == 0 {
                times.push((k + 1) as f64 * dt_ns as f64 * 1e-9);
                snapshots.push(Array1::from_vec(psi.clone()));
            }
        }
    }
    let norm = linalg::norm2(&psi);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!("few-mode norm drifted to {norm}")));
    }
    Ok(FewModeTrajectory { times, snapshots, final_coeffs: Array1::from_vec(psi) })
}
