//! Split-step spectral propagation of a 1D wavepacket in the shaken
//! lattice with an optional inertial potential.
//!
//! Stepping is symmetric half-kinetic / full-potential / half-kinetic, so
//! every step is unitary by construction. Gate segments step at the
//! waveform sample period; holds step coarsely since the Hamiltonian is
//! constant there.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::Fft;

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeConfig, MomentumDistribution};

use super::measure;
use super::waveform::DriveSegment;
use super::SignalSpec;

/// Uniform spatial grid in lattice units (lengths in 1/k_L).
#[derive(Debug, Clone)]
pub struct Grid1d {
    pub n: usize,
    pub n_sites: usize,
    pub points_per_site: usize,
    /// Grid step in 1/k_L; one lattice site spans pi.
    pub dx: f64,
}

impl Grid1d {
    pub fn new(n_sites: usize, points_per_site: usize) -> Result<Self> {
        if points_per_site < 8 {
            return Err(Error::Config(format!(
                "need >= 8 points per lattice site, got {points_per_site}"
            )));
        }
        if n_sites < 4 {
            return Err(Error::Config("need at least 4 lattice sites".into()));
        }
        let n = n_sites * points_per_site;
        Ok(Self { n, n_sites, points_per_site, dx: std::f64::consts::PI / points_per_site as f64 })
    }

    /// Domain length in 1/k_L.
    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Coordinate of point i, centered on 0.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.n as f64 / 2.0) * self.dx
    }

    /// FFT wavenumber of bin j, in units of k_L.
    pub fn k(&self, j: usize) -> f64 {
        let dk = std::f64::consts::TAU / self.length();
        if j < self.n / 2 {
            j as f64 * dk
        } else {
            (j as f64 - self.n as f64) * dk
        }
    }
}

/// Complex amplitudes on a 1D grid; L2-normalized with the continuum
/// measure sum |psi|^2 dx = 1.
#[derive(Clone)]
pub struct Wavefunction1d {
    pub grid: Grid1d,
    pub psi: Vec<C64>,
    /// Elapsed time in seconds.
    pub t: f64,
}

impl Wavefunction1d {
    pub fn norm(&self) -> f64 {
        (self.psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.grid.dx).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.psi.iter_mut().for_each(|p| *p *= inv);
        }
    }

    /// Density centroid in meters.
    pub fn centroid(&self, config: &LatticeConfig) -> f64 {
        let mut acc = 0.0;
        for (i, p) in self.psi.iter().enumerate() {
            acc += self.grid.x(i) * p.norm_sqr();
        }
        config.xi_to_meters(acc * self.grid.dx)
    }

    /// RMS width about the centroid, in meters.
    pub fn rms_width(&self, config: &LatticeConfig) -> f64 {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, p) in self.psi.iter().enumerate() {
            let w = p.norm_sqr();
            let x = self.grid.x(i);
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
        }
        let mean = m1 / m0;
        config.xi_to_meters((m2 / m0 - mean * mean).max(0.0).sqrt())
    }

    /// Centroids of the left (x<0) and right (x>0) half-plane clouds, in
    /// meters. Used to track the two interferometer arms.
    pub fn cloud_centroids(&self, config: &LatticeConfig) -> (f64, f64) {
        let (mut wl, mut xl, mut wr, mut xr) = (0.0, 0.0, 0.0, 0.0);
        for (i, p) in self.psi.iter().enumerate() {
            let x = self.grid.x(i);
            let w = p.norm_sqr();
            if x < 0.0 {
                wl += w;
                xl += w * x;
            } else {
                wr += w;
                xr += w * x;
            }
        }
        (
            config.xi_to_meters(if wl > 0.0 { xl / wl } else { 0.0 }),
            config.xi_to_meters(if wr > 0.0 { xr / wr } else { 0.0 }),
        )
    }

    /// <H> in E_r for the static lattice at `phi` plus the signal.
    pub fn energy_expectation(&self, config: &LatticeConfig, phi: f64, signal: &SignalSpec) -> f64 {
        let n = self.grid.n;
        let mut planner = rustfft::FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let mut buf = self.psi.clone();
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut buf, &mut scratch);
        let mut kin = 0.0;
        let mut px = 0.0;
        for (j, b) in buf.iter().enumerate() {
            let k = self.grid.k(j);
            kin += k * k * b.norm_sqr();
            px += b.norm_sqr();
        }
        kin /= px;
        let vsig = signal_potential(config, signal, &self.grid);
        let mut pot = 0.0;
        for (i, p) in self.psi.iter().enumerate() {
            let x = self.grid.x(i);
            let v = 0.5 * config.depth * (2.0 * x + phi).cos() + vsig.as_ref().map_or(0.0, |v| v[i]);
            pot += v * p.norm_sqr();
        }
        pot *= self.grid.dx;
        kin + pot
    }
}

/// Ground-band (or stated-band) Bloch wave at q = 0 under a Gaussian
/// envelope of RMS width n_sites * (lambda/2) / 2, centered at
/// `center_sites` sites from the domain center.
pub fn prepare_wavepacket_at(
    config: &LatticeConfig,
    n_sites: usize,
    band: usize,
    grid: &Grid1d,
    center_sites: f64,
) -> Result<Wavefunction1d> {
    if band > 4 {
        return Err(Error::Invalid(format!("band must be in 0..=4, got {band}")));
    }
    if n_sites < 4 {
        return Err(Error::Invalid("envelope must span at least 4 sites".into()));
    }
    let sigma = n_sites as f64 * std::f64::consts::PI / 2.0;
    if grid.length() < 6.0 * sigma {
        return Err(Error::DomainTooSmall(format!(
            "domain {:.0} (1/k_L) < 6 envelope widths ({:.0})",
            grid.length(),
            6.0 * sigma
        )));
    }
    let (_, states) = lattice::solve_at_q(config, 0.0, band + 1)?;
    let state = &states[band];
    let x0 = center_sites * std::f64::consts::PI;
    let nmax = state.n_max() as i64;
    let mut psi = vec![C64::new(0.0, 0.0); grid.n];
    for (i, p) in psi.iter_mut().enumerate() {
        let x = grid.x(i);
        let mut u = C64::new(0.0, 0.0);
        for l in -nmax..=nmax {
            u += state.coeff(l) * C64::from_polar(1.0, 2.0 * l as f64 * x);
        }
        let env = (-((x - x0) * (x - x0)) / (4.0 * sigma * sigma)).exp();
        *p = u * env;
    }
    let mut wf = Wavefunction1d { grid: grid.clone(), psi, t: 0.0 };
    wf.normalize();
    Ok(wf)
}

pub fn prepare_wavepacket(
    config: &LatticeConfig,
    n_sites: usize,
    band: usize,
    grid: &Grid1d,
) -> Result<Wavefunction1d> {
    prepare_wavepacket_at(config, n_sites, band, grid, 0.0)
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Step during phi-constant holds, ns. Must be <= 1000.
    pub dt_hold_ns: u64,
    /// Record a snapshot every this many ns.
    pub snap_every_ns: Option<u64>,
    /// Keep full density profiles in snapshots.
    pub store_density: bool,
    /// Edge probability above this raises a wrap hazard.
    pub edge_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { dt_hold_ns: 500, snap_every_ns: None, store_density: false, edge_threshold: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot1d {
    pub t: f64,
    pub momentum: MomentumDistribution,
    pub centroid_m: f64,
    pub rms_m: f64,
    pub cloud_left_m: f64,
    pub cloud_right_m: f64,
    pub density: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Trajectory1d {
    pub snapshots: Vec<Snapshot1d>,
    pub norm_drift: f64,
    pub steps: u64,
}

fn signal_potential(config: &LatticeConfig, signal: &SignalSpec, grid: &Grid1d) -> Option<Vec<f64>> {
    let er = config.recoil_energy();
    let kl = config.k_l();
    match *signal {
        SignalSpec::None => None,
        SignalSpec::Acceleration(a) => {
            let c = config.atom_mass * a / (er * kl);
            Some((0..grid.n).map(|i| c * grid.x(i)).collect())
        }
        SignalSpec::Gradient(g) => {
            let c = config.atom_mass * g / (er * kl * kl);
            Some((0..grid.n).map(|i| c * grid.x(i).powi(2)).collect())
        }
        SignalSpec::Rotation(_) => None, // 2D only
    }
}

struct Stepper1d {
    n: usize,
    dx: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    /// Half-step kinetic kicks keyed by dt in ns, with 1/n folded in.
    kicks: HashMap<u64, Vec<C64>>,
    cos2x: Vec<f64>,
    sin2x: Vec<f64>,
    vsig: Option<Vec<f64>>,
    half_depth: f64,
    tr_per_ns: f64,
    /// Cached pointwise potential propagator for hold runs.
    hold_cache: Option<(u64, u64, Vec<C64>)>, // (phi bits, dt ns, factors)
}

impl Stepper1d {
    fn new(config: &LatticeConfig, grid: &Grid1d, signal: &SignalSpec) -> Self {
        let mut planner = rustfft::FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.n);
        let ifft = planner.plan_fft_inverse(grid.n);
        let len = fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len());
        Self {
            n: grid.n,
            dx: grid.dx,
            fft,
            ifft,
            scratch: vec![C64::new(0.0, 0.0); len],
            kicks: HashMap::new(),
            cos2x: (0..grid.n).map(|i| (2.0 * grid.x(i)).cos()).collect(),
            sin2x: (0..grid.n).map(|i| (2.0 * grid.x(i)).sin()).collect(),
            vsig: signal_potential(config, signal, grid),
            half_depth: 0.5 * config.depth,
            tr_per_ns: 1e-9 / config.recoil_time(),
            hold_cache: None,
        }
    }

    fn kick_for(&mut self, grid: &Grid1d, dt_ns: u64) -> &Vec<C64> {
        let n = self.n;
        let tr = self.tr_per_ns;
        self.kicks.entry(dt_ns).or_insert_with(|| {
            let dt_tr = dt_ns as f64 * tr;
            let inv_n = 1.0 / n as f64;
            (0..n)
                .map(|j| {
                    let k = grid.k(j);
                    C64::from_polar(inv_n, -k * k * dt_tr / 2.0)
                })
                .collect()
        })
    }

    fn half_kinetic(&mut self, grid: &Grid1d, psi: &mut [C64], dt_ns: u64) {
        self.fft.process_with_scratch(psi, &mut self.scratch);
        let kick = self.kicks.get(&dt_ns).map(|k| k.as_ptr());
        if kick.is_none() {
            self.kick_for(grid, dt_ns);
        }
        let kick = self.kicks.get(&dt_ns).unwrap();
        for (p, k) in psi.iter_mut().zip(kick.iter()) {
            *p *= k;
        }
        self.ifft.process_with_scratch(psi, &mut self.scratch);
    }

    fn potential(&mut self, psi: &mut [C64], phi: f64, dt_ns: u64, cache: bool) {
        let dt_tr = dt_ns as f64 * self.tr_per_ns;
        if cache {
            let key = (phi.to_bits(), dt_ns);
            let valid = matches!(&self.hold_cache, Some((pb, dn, _)) if *pb == key.0 && *dn == key.1);
            if !valid {
                let (c, s) = (phi.cos(), phi.sin());
                let factors: Vec<C64> = (0..self.n)
                    .map(|i| {
                        let v = self.half_depth * (self.cos2x[i] * c - self.sin2x[i] * s)
                            + self.vsig.as_ref().map_or(0.0, |vs| vs[i]);
                        C64::from_polar(1.0, -v * dt_tr)
                    })
                    .collect();
                self.hold_cache = Some((key.0, key.1, factors));
            }
            let factors = &self.hold_cache.as_ref().unwrap().2;
            for (p, f) in psi.iter_mut().zip(factors.iter()) {
                *p *= f;
            }
        } else {
            let (c, s) = (phi.cos(), phi.sin());
            for i in 0..self.n {
                let v = self.half_depth * (self.cos2x[i] * c - self.sin2x[i] * s)
                    + self.vsig.as_ref().map_or(0.0, |vs| vs[i]);
                psi[i] *= C64::from_polar(1.0, -v * dt_tr);
            }
        }
    }

    fn step(&mut self, grid: &Grid1d, psi: &mut [C64], phi: f64, dt_ns: u64, hold: bool) {
        self.half_kinetic(grid, psi, dt_ns);
        self.potential(psi, phi, dt_ns, hold);
        self.half_kinetic(grid, psi, dt_ns);
    }

    fn edge_probability(&self, psi: &[C64]) -> f64 {
        let guard = (self.n / 64).max(4);
        let head: f64 = psi[..guard].iter().map(|p| p.norm_sqr()).sum();
        let tail: f64 = psi[self.n - guard..].iter().map(|p| p.norm_sqr()).sum();
        (head + tail) * self.dx
    }
}

/// Evolve under a drive schedule plus an optional trailing hold.
/// Snapshots stream into the returned trajectory per `opts.snap_every_ns`.
pub fn evolve_grid_1d(
    wf: &mut Wavefunction1d,
    drive: &[DriveSegment],
    signal: &SignalSpec,
    extra_hold_s: f64,
    config: &LatticeConfig,
    opts: &EvolveOptions,
) -> Result<Trajectory1d> {
    signal.validate()?;
    if matches!(signal, SignalSpec::Rotation(_)) {
        return Err(Error::Invalid("rotation signals require the 2D solver".into()));
    }
    if opts.dt_hold_ns == 0 || opts.dt_hold_ns > 1_000 {
        return Err(Error::Config(format!(
            "hold step must be in (0, 1000] ns, got {}",
            opts.dt_hold_ns
        )));
    }
    let mut segs: Vec<DriveSegment> = drive.to_vec();
    if extra_hold_s > 0.0 {
        let phi = segs.last().map(|s| s.last_phi()).unwrap_or(0.0);
        segs.push(DriveSegment::Hold { phi, duration_ns: (extra_hold_s * 1e9).round() as u64 });
    }

    let mut stepper = Stepper1d::new(config, &wf.grid, signal);
    let norm0 = wf.norm();
    let grid = wf.grid.clone();

    let mut t_ns: u64 = (wf.t * 1e9).round() as u64;
    let mut next_snap = opts.snap_every_ns.map(|s| t_ns + s);
    let mut snapshots = Vec::new();
    let mut steps: u64 = 0;

    let snap = |wf: &Wavefunction1d, t_ns: u64, snaps: &mut Vec<Snapshot1d>| {
        let momentum = measure::measure_momentum_orders(wf);
        let (cl, cr) = wf.cloud_centroids(config);
        snaps.push(Snapshot1d {
            t: t_ns as f64 * 1e-9,
            momentum,
            centroid_m: wf.centroid(config),
            rms_m: wf.rms_width(config),
            cloud_left_m: cl,
            cloud_right_m: cr,
            density: if opts.store_density {
                Some(measure::density_snapshot(wf, config).density)
            } else {
                None
            },
        });
    };

    for seg in &segs {
        match seg {
            DriveSegment::Sampled { samples, period_ns } => {
                let shaken = samples.iter().any(|&s| s != 0.0);
                if shaken && *period_ns > 1_000 {
                    return Err(Error::StepTooLarge { dt_us: *period_ns as f64 * 1e-3 });
                }
                for &phi in samples {
                    stepper.step(&grid, &mut wf.psi, phi, *period_ns, false);
                    t_ns += period_ns;
                    steps += 1;
                    if let Some(ns) = next_snap {
                        if t_ns >= ns {
                            wf.t = t_ns as f64 * 1e-9;
                            snap(wf, t_ns, &mut snapshots);
                            next_snap = Some(ns + opts.snap_every_ns.unwrap());
                        }
                    }
                }
            }
            DriveSegment::Hold { phi, duration_ns } => {
                let mut remaining = *duration_ns;
                while remaining > 0 {
                    let dt = remaining.min(opts.dt_hold_ns);
                    stepper.step(&grid, &mut wf.psi, *phi, dt, true);
                    t_ns += dt;
                    remaining -= dt;
                    steps += 1;
                    if let Some(ns) = next_snap {
                        if t_ns >= ns {
                            wf.t = t_ns as f64 * 1e-9;
                            snap(wf, t_ns, &mut snapshots);
                            next_snap = Some(ns + opts.snap_every_ns.unwrap());
                        }
                    }
                }
            }
        }
        let edge = stepper.edge_probability(&wf.psi);
        if edge > opts.edge_threshold {
            return Err(Error::WrapHazard(format!(
                "edge probability {edge:.3e} at t = {:.3} ms",
                t_ns as f64 * 1e-6
            )));
        }
    }
    wf.t = t_ns as f64 * 1e-9;
    let norm_drift = (wf.norm() - norm0).abs();
    if norm_drift > 1e-8 {
        return Err(Error::Numerical(format!("norm drift {norm_drift:.3e} exceeds 1e-8")));
    }
    Ok(Trajectory1d { snapshots, norm_drift, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::measure::measure_momentum_orders;

    fn cfg() -> LatticeConfig {
        LatticeConfig::rb87_1064(10.0, 12)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1d::new(128, 4).is_err());
        assert!(Grid1d::new(2, 8).is_err());
        assert!(Grid1d::new(128, 8).is_ok());
    }

    #[test]
    fn wavepacket_momentum_matches_band_composition() {
        let c = cfg();
        let grid = Grid1d::new(256, 8).unwrap();
        let wf = prepare_wavepacket(&c, 20, 0, &grid).unwrap();
        assert!((wf.norm() - 1.0).abs() < 1e-8);
        let p = measure_momentum_orders(&wf);
        let (_, states) = lattice::solve_at_q(&c, 0.0, 1).unwrap();
        let comp = lattice::momentum_composition(&states[0]);
        for m in -3..=3 {
            assert!(
                (p.probability(m) - comp.probability(m)).abs() < 0.01,
                "order {m}: {} vs {}",
                p.probability(m),
                comp.probability(m)
            );
        }
    }

    #[test]
    fn wavepacket_band3_peaks() {
        let c = cfg();
        let grid = Grid1d::new(256, 8).unwrap();
        let wf = prepare_wavepacket(&c, 20, 3, &grid).unwrap();
        let p = measure_momentum_orders(&wf);
        assert!((p.probability(2) - 0.474).abs() < 0.01);
        assert!((p.probability(-2) - 0.474).abs() < 0.01);
    }

    #[test]
    fn wavepacket_energy_approaches_band_energy() {
        let c = cfg();
        let grid = Grid1d::new(1024, 8).unwrap();
        let wf = prepare_wavepacket(&c, 120, 0, &grid).unwrap();
        let (evals, _) = lattice::solve_at_q(&c, 0.0, 1).unwrap();
        let e = wf.energy_expectation(&c, 0.0, &SignalSpec::None);
        assert!((e - evals[0]).abs() < 1e-4, "E = {e}, E0 = {}", evals[0]);
    }

    #[test]
    fn wavepacket_band_bounds() {
        let c = cfg();
        let grid = Grid1d::new(256, 8).unwrap();
        assert!(prepare_wavepacket(&c, 20, 5, &grid).is_err());
        assert!(prepare_wavepacket(&c, 200, 0, &grid).is_err()); // envelope too wide
    }

    #[test]
    fn stationary_ground_state_stays_put() {
        let c = cfg();
        let grid = Grid1d::new(128, 8).unwrap();
        let mut wf = prepare_wavepacket(&c, 10, 0, &grid).unwrap();
        let opts = EvolveOptions::default();
        // 1 ms free hold (short form of the 7 ms stationarity check)
        let traj =
            evolve_grid_1d(&mut wf, &[], &SignalSpec::None, 1e-3, &c, &opts).unwrap();
        assert!(traj.norm_drift < 1e-10);
        assert!(wf.centroid(&c).abs() < 0.1e-6);
    }

    #[test]
    fn energy_conserved_during_hold() {
        let c = cfg();
        let grid = Grid1d::new(128, 8).unwrap();
        let mut wf = prepare_wavepacket(&c, 10, 0, &grid).unwrap();
        let e0 = wf.energy_expectation(&c, 0.0, &SignalSpec::None);
        let opts = EvolveOptions::default();
        evolve_grid_1d(&mut wf, &[], &SignalSpec::None, 10e-3, &c, &opts).unwrap();
        let e1 = wf.energy_expectation(&c, 0.0, &SignalSpec::None);
        assert!((e1 - e0).abs() < 1e-6, "dE = {:.3e}", e1 - e0);
    }

    #[test]
    fn rejects_rotation_signal() {
        let c = cfg();
        let grid = Grid1d::new(64, 8).unwrap();
        let mut wf = prepare_wavepacket(&c, 6, 0, &grid).unwrap();
        assert!(evolve_grid_1d(
            &mut wf,
            &[],
            &SignalSpec::Rotation(0.1),
            1e-6,
            &c,
            &EvolveOptions::default()
        )
        .is_err());
    }

    #[test]
    fn wrap_hazard_detected() {
        let c = cfg();
        let grid = Grid1d::new(64, 8).unwrap();
        let mut wf = prepare_wavepacket(&c, 6, 0, &grid).unwrap();
        // a hard acceleration slams the packet into the domain edge
        let res = evolve_grid_1d(
            &mut wf,
            &[],
            &SignalSpec::Acceleration(5.0),
            8e-3,
            &c,
            &EvolveOptions::default(),
        );
        assert!(matches!(res, Err(Error::WrapHazard(_))), "got {res:?}");
    }

    #[test]
    fn negation_mirrors_the_motion() {
        // evolving a symmetric state under -phi(t) mirrors the density
        let c = cfg();
        let grid = Grid1d::new(128, 8).unwrap();
        let samples: Vec<f64> = (0..2000).map(|k| 0.6 * (k as f64 * 0.02).sin()).collect();
        let seg_p = DriveSegment::Sampled { samples: samples.clone(), period_ns: 50 };
        let seg_m = DriveSegment::Sampled {
            samples: samples.iter().map(|s| -s).collect(),
            period_ns: 50,
        };
        let mut wf_p = prepare_wavepacket(&c, 10, 0, &grid).unwrap();
        let mut wf_m = wf_p.clone();
        let opts = EvolveOptions::default();
        evolve_grid_1d(&mut wf_p, &[seg_p], &SignalSpec::None, 0.0, &c, &opts).unwrap();
        evolve_grid_1d(&mut wf_m, &[seg_m], &SignalSpec::None, 0.0, &c, &opts).unwrap();
        let n = grid.n;
        for i in 0..n {
            let a = wf_p.psi[i].norm_sqr();
            let b = wf_m.psi[(n - i) % n].norm_sqr();
            assert!((a - b).abs() < 1e-6, "i = {i}: {a} vs {b}");
        }
    }

    #[test]
    fn halving_the_hold_step_changes_little() {
        let c = cfg();
        let grid = Grid1d::new(128, 8).unwrap();
        let samples: Vec<f64> = (0..1000).map(|k| 0.4 * (k as f64 * 0.03).sin()).collect();
        let mk = |dt: u64| {
            let mut wf = prepare_wavepacket(&c, 10, 0, &grid).unwrap();
            let seg = DriveSegment::Sampled { samples: samples.clone(), period_ns: 50 };
            let opts = EvolveOptions { dt_hold_ns: dt, ..Default::default() };
            evolve_grid_1d(&mut wf, &[seg], &SignalSpec::None, 0.5e-3, &c, &opts).unwrap();
            measure_momentum_orders(&wf)
        };
        let a = mk(500);
        let b = mk(250);
        for m in -5..=5 {
            assert!((a.probability(m) - b.probability(m)).abs() < 1e-6);
        }
    }
}
