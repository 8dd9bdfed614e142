//! Bloch band structure of the 1D optical lattice in a truncated
//! plane-wave basis, plus the recoil-unit conversions used everywhere else.
//!
//! Internal unit system: energies in E_r, times in t_r = hbar/E_r, lengths
//! in 1/k_L, phases in radians. Conversions to SI happen only at the
//! boundaries (file formats, CLI flags).
//!
//! Off-diagonal sign convention, fixed project-wide: the potential is
//! (V0/2) cos(2 k_L x + phi), so the plane-wave matrix element
//! H[l][l+1] = (V0/4) exp(-i phi) and H[l][l-1] = (V0/4) exp(+i phi).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Standard gravitational acceleration, m/s^2.
pub const G_STD: f64 = 9.80665;

/// Physical and numerical description of the 1D lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Lattice depth V0 in units of E_r.
    pub depth: f64,
    /// Optical wavelength lambda in meters.
    pub wavelength: f64,
    /// Atomic mass in kg.
    pub atom_mass: f64,
    /// Plane-wave truncation: orders l in [-n_max, n_max].
    pub n_max: usize,
}

impl LatticeConfig {
    pub fn new(depth: f64, wavelength: f64, atom_mass: f64, n_max: usize) -> Result<Self> {
        if !(depth > 0.0) || !depth.is_finite() {
            return Err(Error::Config(format!("depth must be positive, got {depth}")));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::Config(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if !(atom_mass > 0.0) || !atom_mass.is_finite() {
            return Err(Error::Config(format!("atom mass must be positive, got {atom_mass}")));
        }
        if n_max < 8 {
            return Err(Error::Config(format!("n_max must be >= 8, got {n_max}")));
        }
        Ok(Self { depth, wavelength, atom_mass, n_max })
    }

    /// Rubidium-87 in a 1064 nm lattice. E_r/h = 2.028 kHz, t_r = 78.5 us.
    pub fn rb87_1064(depth: f64, n_max: usize) -> Self {
        Self::new(depth, 1064e-9, 1.44316e-25, n_max).expect("preset constants are valid")
    }

    pub fn preset(name: &str, depth: f64, n_max: usize) -> Result<Self> {
        match name {
            "rb87-1064" => Ok(Self::rb87_1064(depth, n_max)),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    /// Lattice wavevector k_L = 2 pi / lambda, 1/m.
    pub fn k_l(&self) -> f64 {
        std::f64::consts::TAU / self.wavelength
    }

    /// Recoil energy E_r = hbar^2 k_L^2 / 2m, J.
    pub fn recoil_energy(&self) -> f64 {
        let k = self.k_l();
        HBAR * HBAR * k * k / (2.0 * self.atom_mass)
    }

    /// Recoil time t_r = hbar / E_r, s.
    pub fn recoil_time(&self) -> f64 {
        HBAR / self.recoil_energy()
    }

    /// Recoil velocity v_r = hbar k_L / m, m/s.
    pub fn recoil_velocity(&self) -> f64 {
        HBAR * self.k_l() / self.atom_mass
    }

    /// Lattice site spacing lambda/2, m.
    pub fn site_spacing(&self) -> f64 {
        self.wavelength / 2.0
    }

    pub fn seconds_to_tr(&self, t: f64) -> f64 {
        t / self.recoil_time()
    }

    pub fn meters_to_xi(&self, x: f64) -> f64 {
        x * self.k_l()
    }

    pub fn xi_to_meters(&self, xi: f64) -> f64 {
        xi / self.k_l()
    }

    /// Basis size 2 n_max + 1.
    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Plane-wave orders l = -n_max ..= n_max.
    pub fn orders(&self) -> impl Iterator<Item = i64> + '_ {
        -(self.n_max as i64)..=(self.n_max as i64)
    }
}

/// Band eigenstate at fixed quasimomentum, expanded over plane waves
/// exp(i (2l + q) k_L x) with l in [-n_max, n_max].
#[derive(Debug, Clone)]
pub struct BlochState {
    pub band: usize,
    /// Quasimomentum in units of k_L, in [-1, 1).
    pub q: f64,
    pub coeffs: Array1<C64>,
}

impl BlochState {
    pub fn n_max(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// Coefficient for plane-wave order l.
    pub fn coeff(&self, l: i64) -> C64 {
        let n = self.n_max() as i64;
        self.coeffs[(l + n) as usize]
    }

    pub fn norm(&self) -> f64 {
        linalg::norm2(self.coeffs.as_slice().unwrap())
    }
}

/// Band energies and eigenstates over a quasimomentum grid.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub q_grid: Vec<f64>,
    /// energies[iq][n] in E_r.
    pub energies: Vec<Vec<f64>>,
    /// states[iq][n], matching `energies`.
    pub states: Vec<Vec<BlochState>>,
}

/// Probabilities of the discrete momentum orders 2 m hbar k_L.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentumDistribution {
    pub orders: Vec<i64>,
    pub probabilities: Vec<f64>,
}

impl MomentumDistribution {
    pub fn probability(&self, m: i64) -> f64 {
        self.orders
            .iter()
            .position(|&o| o == m)
            .map(|i| self.probabilities[i])
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Plane-wave Hamiltonian at quasimomentum `q` and lattice phase `phi`,
/// in E_r units. Hermitian by construction.
pub fn build_hamiltonian(config: &LatticeConfig, q: f64, phi: f64) -> Result<Array2<C64>> {
    if !phi.is_finite() {
        return Err(Error::Invalid(format!("phi must be finite, got {phi}")));
    }
    if !(q.abs() <= 1.0) {
        return Err(Error::Invalid(format!("|q| must be <= 1, got {q}")));
    }
    let n = config.dim();
    let v4 = config.depth / 4.0;
    let up = C64::from_polar(v4, -phi); // H[l][l+1]
    let dn = up.conj(); // H[l][l-1]
    let mut h = Array2::<C64>::zeros((n, n));
    for (i, l) in config.orders().enumerate() {
        let k = 2.0 * l as f64 + q;
        h[(i, i)] = C64::new(k * k, 0.0);
        if i + 1 < n {
            h[(i, i + 1)] = up;
            h[(i + 1, i)] = dn;
        }
    }
    Ok(h)
}

/// Eigenstates at a single quasimomentum, energies ascending, phases fixed
/// so the largest-magnitude coefficient is real positive (ties broken
/// toward positive l).
pub fn solve_at_q(config: &LatticeConfig, q: f64, n_bands: usize) -> Result<(Vec<f64>, Vec<BlochState>)> {
    if n_bands > 2 * config.n_max {
        return Err(Error::Invalid(format!(
            "n_bands = {n_bands} exceeds 2 n_max = {}",
            2 * config.n_max
        )));
    }
    if !(q.abs() <= 1.0) {
        return Err(Error::Invalid(format!("|q| must be <= 1, got {q}")));
    }
    let n = config.dim();
    let diag: Vec<f64> = config.orders().map(|l| (2.0 * l as f64 + q).powi(2)).collect();
    let off = vec![config.depth / 4.0; n - 1];
    let (vals, vecs) =
        linalg::eig_sym_tridiag(&diag, &off).map_err(|_| Error::EigenConvergence { q })?;

    let mut states = Vec::with_capacity(n_bands);
    for band in 0..n_bands {
        let mut c = linalg::column_c64(&vecs, band);
        fix_phase(&mut c);
        states.push(BlochState { band, q, coeffs: c });
    }
    Ok((vals[..n_bands].to_vec(), states))
}

/// Band structure over a quasimomentum grid.
pub fn solve_bands(config: &LatticeConfig, q_grid: &[f64], n_bands: usize) -> Result<BandStructure> {
    let mut energies = Vec::with_capacity(q_grid.len());
    let mut states = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let (e, s) = solve_at_q(config, q, n_bands)?;
        energies.push(e);
        states.push(s);
    }
    Ok(BandStructure { q_grid: q_grid.to_vec(), energies, states })
}

/// Momentum-order probabilities of a Bloch state: P(m) = |c_m|^2, with
/// order m carrying momentum (2m + q) hbar k_L.
pub fn momentum_composition(state: &BlochState) -> MomentumDistribution {
    let n = state.n_max() as i64;
    let orders: Vec<i64> = (-n..=n).collect();
    let probabilities: Vec<f64> = state.coeffs.iter().map(|c| c.norm_sqr()).collect();
    MomentumDistribution { orders, probabilities }
}

/// Global-phase fix: rotate so the largest-magnitude coefficient is real
/// and positive. Ties (parity pairs) break toward positive l.
pub fn fix_phase(c: &mut Array1<C64>) {
    let mut idx = 0;
    let mut best = -1.0;
    for (i, v) in c.iter().enumerate() {
        let m = v.norm();
        if m >= best - 1e-12 {
            if m > best + 1e-12 || i > idx {
                idx = i;
                best = best.max(m);
            }
        }
    }
    let ph = c[idx].arg();
    let rot = C64::from_polar(1.0, -ph);
    c.mapv_inplace(|v| v * rot);
}

/// Uniform quasimomentum grid of `n` points covering [-1, 1).
pub fn q_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg10() -> LatticeConfig {
        LatticeConfig::rb87_1064(10.0, 12)
    }

    #[test]
    fn preset_constants() {
        let c = cfg10();
        // E_r/h ~ 2.03 kHz and t_r ~ 78 us for Rb-87 at 1064 nm
        assert!((c.recoil_energy() / PLANCK - 2027.8).abs() < 1.0);
        assert!((c.recoil_time() * 1e6 - 78.49).abs() < 0.05);
        // E_r t_r = hbar and v_r k_L t_r = 2 follow from the definitions
        assert!((c.recoil_energy() * c.recoil_time() / HBAR - 1.0).abs() < 1e-12);
        assert!((c.recoil_velocity() * c.k_l() * c.recoil_time() / 2.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(LatticeConfig::new(0.0, 1e-6, 1e-25, 12).is_err());
        assert!(LatticeConfig::new(10.0, -1.0, 1e-25, 12).is_err());
        assert!(LatticeConfig::new(10.0, 1e-6, 1e-25, 4).is_err());
        assert!(LatticeConfig::preset("cs133", 10.0, 12).is_err());
    }

    #[test]
    fn hamiltonian_free_particle_limit() {
        // depth -> 0: diagonal matrix diag((2l)^2)
        let c = LatticeConfig::new(1e-300, 1064e-9, 1.44316e-25, 12).unwrap();
        let h = build_hamiltonian(&c, 0.0, 0.0).unwrap();
        for (i, l) in c.orders().enumerate() {
            let expect = (2.0 * l as f64).powi(2);
            assert!((h[(i, i)].re - expect).abs() < 1e-12);
        }
        assert!(h[(0, 1)].norm() < 1e-290);
    }

    #[test]
    fn hamiltonian_offdiagonals_and_lowest_diagonal() {
        let c = cfg10();
        let h = build_hamiltonian(&c, 0.0, 0.0).unwrap();
        assert!((h[(3, 4)] - C64::new(2.5, 0.0)).norm() < 1e-15);
        assert!((h[(4, 3)] - C64::new(2.5, 0.0)).norm() < 1e-15);
        let hq = build_hamiltonian(&c, 0.5, 0.0).unwrap();
        let mid = c.n_max;
        assert!((hq[(mid, mid)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_hermitian_and_phase_convention() {
        let c = cfg10();
        let phi = 0.9;
        let h = build_hamiltonian(&c, 0.3, phi).unwrap();
        for i in 0..c.dim() {
            for j in 0..c.dim() {
                assert_eq!(h[(i, j)], h[(j, i)].conj());
            }
        }
        // coupling l -> l+1 carries exp(-i phi)
        assert!((h[(5, 6)] - C64::from_polar(2.5, -phi)).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_rejects_bad_inputs() {
        let c = cfg10();
        assert!(build_hamiltonian(&c, 1.5, 0.0).is_err());
        assert!(build_hamiltonian(&c, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn bands_match_dense_eigensolver_oracle() {
        // brute-force dense diagonalization at n_max = 24 via nalgebra
        let c = LatticeConfig::rb87_1064(10.0, 24);
        let (vals, _) = solve_at_q(&c, 0.0, 5).unwrap();

        let n = c.dim();
        let mut dm = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (i, l) in c.orders().enumerate() {
            dm[(i, i)] = (2.0 * l as f64).powi(2);
            if i + 1 < n {
                dm[(i, i + 1)] = 2.5;
                dm[(i + 1, i)] = 2.5;
            }
        }
        let mut oracle: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().cloned().collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, o) in vals.iter().zip(oracle.iter().take(5)) {
            assert!((v - o).abs() < 1e-10, "{v} vs {o}");
        }
    }

    #[test]
    fn bands_free_particle_limit() {
        let c = LatticeConfig::new(1e-12, 1064e-9, 1.44316e-25, 12).unwrap();
        for &q in &[0.0, 0.25, -0.7] {
            let (vals, _) = solve_at_q(&c, q, 5).unwrap();
            let mut expect: Vec<f64> = (-2i64..=2).map(|l| (2.0 * l as f64 + q).powi(2)).collect();
            expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (v, e) in vals.iter().zip(&expect) {
                assert!((v - e).abs() < 1e-6, "q={q}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn avoided_crossing_is_small() {
        let c = cfg10();
        let (vals, _) = solve_at_q(&c, 0.0, 5).unwrap();
        let gap34 = vals[4] - vals[3];
        let gap23 = vals[3] - vals[2];
        assert!(gap34 > 0.0);
        assert!(gap34 < 0.05 * gap23, "gap34 = {gap34}, gap23 = {gap23}");
    }

    #[test]
    fn truncation_convergence() {
        let c12 = cfg10();
        let c24 = LatticeConfig::rb87_1064(10.0, 24);
        let (v12, _) = solve_at_q(&c12, 0.37, 5).unwrap();
        let (v24, _) = solve_at_q(&c24, 0.37, 5).unwrap();
        for n in 0..5 {
            assert!((v12[n] - v24[n]).abs() < 1e-10);
        }
    }

    #[test]
    fn band_symmetry_in_q() {
        let c = cfg10();
        let (ep, _) = solve_at_q(&c, 0.4, 5).unwrap();
        let (em, _) = solve_at_q(&c, -0.4, 5).unwrap();
        for n in 0..5 {
            assert!((ep[n] - em[n]).abs() < 1e-10);
        }
    }

    #[test]
    fn states_normalized_and_phase_fixed() {
        let c = cfg10();
        let bs = solve_bands(&c, &q_grid(16), 5).unwrap();
        for states in &bs.states {
            for s in states {
                assert!((s.norm() - 1.0).abs() < 1e-12);
                let mut idx = 0;
                let mut best = -1.0;
                for (i, v) in s.coeffs.iter().enumerate() {
                    if v.norm() > best {
                        best = v.norm();
                        idx = i;
                    }
                }
                let v = s.coeffs[idx];
                assert!(v.re > 0.0 && v.im.abs() < 1e-12 * v.re.max(1.0));
            }
        }
    }

    #[test]
    fn parity_at_q0() {
        // definite parity c_l = +/- c_{-l}; band 3 is odd, band 4 even
        // (the lower state of the l = +/-2 crossing is the antisymmetric one)
        let c = cfg10();
        let (_, states) = solve_at_q(&c, 0.0, 5).unwrap();
        let nmax = c.n_max as i64;
        let parity = |s: &BlochState| -> f64 {
            let mut sig = 0.0;
            for l in 1..=nmax {
                let a = s.coeff(l);
                let b = s.coeff(-l);
                if a.norm() > 1e-8 {
                    sig = (a.re * b.re).signum();
                    break;
                }
            }
            sig
        };
        for s in &states {
            for l in 1..=nmax {
                let a = s.coeff(l);
                let b = s.coeff(-l);
                assert!((a.norm() - b.norm()).abs() < 1e-10);
            }
        }
        assert_eq!(parity(&states[0]), 1.0, "band 0 even");
        assert_eq!(parity(&states[3]), -1.0, "band 3 odd");
        assert_eq!(parity(&states[4]), 1.0, "band 4 even");
    }

    #[test]
    fn momentum_composition_conduction_bands() {
        // the +/-4 hbar k_L occupations of the conduction pair at depth 10;
        // band 3 carries the 47.4% anchor, band 4 sits at 0.469
        let c = cfg10();
        let (_, states) = solve_at_q(&c, 0.0, 5).unwrap();
        let p3 = momentum_composition(&states[3]);
        assert!((p3.probability(2) - 0.474).abs() < 0.005);
        assert!((p3.probability(-2) - 0.474).abs() < 0.005);
        assert!(p3.probability(0) < 1e-12, "band 3 is odd: no zero-momentum part");
        let p4 = momentum_composition(&states[4]);
        assert!((p4.probability(2) - 0.46899).abs() < 5e-4);
        assert!((p4.probability(-2) - 0.46899).abs() < 5e-4);
        assert!((p4.probability(0) - 0.00212).abs() < 5e-4);
    }

    #[test]
    fn momentum_composition_ground_band_matches_oracle() {
        // dense-diagonalization oracle for P(0) of the ground band
        let c = LatticeConfig::rb87_1064(10.0, 24);
        let (_, states) = solve_at_q(&c, 0.0, 1).unwrap();
        let p = momentum_composition(&states[0]);

        let n = c.dim();
        let mut dm = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (i, l) in c.orders().enumerate() {
            dm[(i, i)] = (2.0 * l as f64).powi(2);
            if i + 1 < n {
                dm[(i, i + 1)] = 2.5;
                dm[(i + 1, i)] = 2.5;
            }
        }
        let se = dm.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
        let g = idx[0];
        let p0_oracle = se.eigenvectors[(c.n_max, g)].powi(2);
        assert!((p.probability(0) - p0_oracle).abs() < 1e-10);
        assert!(p.probability(0) > 0.5, "ground band dominated by zero momentum");
    }

    #[test]
    fn momentum_symmetry_at_q0() {
        let c = cfg10();
        let (_, states) = solve_at_q(&c, 0.0, 5).unwrap();
        for s in &states {
            let p = momentum_composition(s);
            for l in 1..=(c.n_max as i64) {
                assert!((p.probability(l) - p.probability(-l)).abs() < 1e-10);
            }
            assert!(p.total() <= 1.0 + 1e-9);
        }
    }
}
