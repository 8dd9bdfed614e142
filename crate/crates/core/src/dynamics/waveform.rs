//! Sampled control functions phi(t) -- the artifact's central exchange
//! format -- and drive segments for the propagators.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hardware sample period: 50 ns.
pub const SAMPLE_PERIOD_NS: u64 = 50;

/// Role a gate plays in a sensing circuit. Declared in library metadata,
/// consumed by the classical segment planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateRole {
    Splitter,
    AsymSplitter,
    Mirror,
    CbSplitter,
    SplitHold,
    Echo,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WaveformMeta {
    /// Lattice depth the waveform was designed for, in E_r.
    pub depth: f64,
    /// Synthesis fidelity, when known.
    pub fidelity: Option<f64>,
    /// Master seed of the synthesis run.
    pub seed: Option<u64>,
    /// Circuit-planning role.
    pub role: Option<GateRole>,
    pub variant: Option<u8>,
    /// Hash of the sample data, for provenance tracking.
    pub provenance: String,
}

/// A sampled control function phi(t) in radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Waveform {
    pub label: String,
    pub sample_period_ns: u64,
    pub samples: Vec<f64>,
    pub meta: WaveformMeta,
}

impl Waveform {
    pub fn new(label: impl Into<String>, sample_period_ns: u64, samples: Vec<f64>, meta: WaveformMeta) -> Result<Self> {
        if sample_period_ns == 0 {
            return Err(Error::Invalid("sample period must be positive".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::Invalid(format!("sample {i} is not finite")));
            }
            if s.abs() > std::f64::consts::TAU + 1e-12 {
                return Err(Error::Invalid(format!(
                    "sample {i} = {s} exceeds the 2 pi amplitude convention"
                )));
            }
        }
        let mut w = Waveform { label: label.into(), sample_period_ns, samples, meta };
        w.meta.provenance = w.compute_hash();
        Ok(w)
    }

    pub fn duration_ns(&self) -> u64 {
        self.sample_period_ns * self.samples.len() as u64
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_ns() as f64 * 1e-9
    }

    /// Samples reordered for backward playback.
    pub fn reversed(&self) -> Waveform {
        let mut samples = self.samples.clone();
        samples.reverse();
        let mut w = self.clone();
        w.samples = samples;
        w.label = format!("{}.rev", self.label);
        w.meta.provenance = w.compute_hash();
        w
    }

    /// Samples negated: phi(t) -> -phi(t), which mirrors the motion in space.
    pub fn negated(&self) -> Waveform {
        let mut w = self.clone();
        w.samples.iter_mut().for_each(|s| *s = -*s);
        w.label = format!("{}.neg", self.label);
        w.meta.provenance = w.compute_hash();
        w
    }

    /// Zero-order-hold resample onto a finer period that divides the
    /// current one.
    pub fn resampled(&self, period_ns: u64) -> Result<Waveform> {
        if period_ns == 0 || self.sample_period_ns % period_ns != 0 {
            return Err(Error::Invalid(format!(
                "period {period_ns} ns must divide {} ns",
                self.sample_period_ns
            )));
        }
        let rep = (self.sample_period_ns / period_ns) as usize;
        let samples: Vec<f64> = self.samples.iter().flat_map(|&s| std::iter::repeat(s).take(rep)).collect();
        let mut w = self.clone();
        w.samples = samples;
        w.sample_period_ns = period_ns;
        w.meta.provenance = w.compute_hash();
        Ok(w)
    }

    pub fn compute_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.sample_period_ns.to_le_bytes());
        for s in &self.samples {
            hasher.update(s.to_le_bytes());
        }
        hex::encode(&hasher.finalize()[..16])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label,
            "sample_period_ns": self.sample_period_ns,
            "samples_rad": self.samples,
            "depth_Er": self.meta.depth,
            "fidelity": self.meta.fidelity,
            "seed": self.meta.seed,
            "role": self.meta.role,
            "variant": self.meta.variant,
            "provenance": self.meta.provenance,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Waveform> {
        let label = v["label"].as_str().unwrap_or("unnamed").to_string();
        let period = v["sample_period_ns"]
            .as_u64()
            .ok_or_else(|| Error::Invalid("missing sample_period_ns".into()))?;
        let samples: Vec<f64> = v["samples_rad"]
            .as_array()
            .ok_or_else(|| Error::Invalid("missing samples_rad".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Error::Invalid("non-numeric sample".into())))
            .collect::<Result<_>>()?;
        let meta = WaveformMeta {
            depth: v["depth_Er"].as_f64().unwrap_or(0.0),
            fidelity: v["fidelity"].as_f64(),
            seed: v["seed"].as_u64(),
            role: serde_json::from_value(v["role"].clone()).ok(),
            variant: v["variant"].as_u64().map(|x| x as u8),
            provenance: String::new(),
        };
        Waveform::new(label, period, samples, meta)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Waveform> {
        let text = std::fs::read_to_string(path)?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        Waveform::from_json(&v)
    }
}

/// One piece of a drive schedule: either sampled shaking or a constant
/// hold. Holds may be stepped coarsely since the Hamiltonian is constant.
#[derive(Debug, Clone)]
pub enum DriveSegment {
    Sampled { samples: Vec<f64>, period_ns: u64 },
    Hold { phi: f64, duration_ns: u64 },
}

impl DriveSegment {
    pub fn duration_ns(&self) -> u64 {
        match self {
            DriveSegment::Sampled { samples, period_ns } => period_ns * samples.len() as u64,
            DriveSegment::Hold { duration_ns, .. } => *duration_ns,
        }
    }

    /// Final phi value of the segment.
    pub fn last_phi(&self) -> f64 {
        match self {
            DriveSegment::Sampled { samples, .. } => samples.last().copied().unwrap_or(0.0),
            DriveSegment::Hold { phi, .. } => *phi,
        }
    }
}

/// Total duration of a drive schedule in ns.
pub fn drive_duration_ns(segs: &[DriveSegment]) -> u64 {
    segs.iter().map(|s| s.duration_ns()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wf(samples: Vec<f64>) -> Waveform {
        Waveform::new("t", 50, samples, WaveformMeta::default()).unwrap()
    }

    #[test]
    fn rejects_nonfinite_and_wild_samples() {
        assert!(Waveform::new("x", 50, vec![f64::NAN], WaveformMeta::default()).is_err());
        assert!(Waveform::new("x", 50, vec![7.0], WaveformMeta::default()).is_err());
        assert!(Waveform::new("x", 0, vec![0.1], WaveformMeta::default()).is_err());
    }

    #[test]
    fn reverse_of_constant_is_itself() {
        let w = wf(vec![0.4; 10]);
        assert_eq!(w.reversed().samples, w.samples);
    }

    #[test]
    fn negate_zero_is_zero() {
        let w = wf(vec![0.0; 5]);
        assert_eq!(w.negated().samples, vec![0.0; 5]);
    }

    #[test]
    fn json_round_trip_bit_exact() {
        let w = wf(vec![0.1, -0.72345678901234567, 3.1, 0.0]);
        let v = w.to_json();
        let text = serde_json::to_string(&v).unwrap();
        let back = Waveform::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(w.samples, back.samples);
        assert_eq!(w.sample_period_ns, back.sample_period_ns);
    }

    #[test]
    fn resample_zero_order_hold() {
        let w = Waveform::new("t", 1000, vec![0.1, 0.2], WaveformMeta::default()).unwrap();
        let r = w.resampled(50).unwrap();
        assert_eq!(r.samples.len(), 40);
        assert_eq!(r.samples[0], 0.1);
        assert_eq!(r.samples[19], 0.1);
        assert_eq!(r.samples[20], 0.2);
        assert_eq!(r.duration_ns(), w.duration_ns());
        assert!(w.resampled(300).is_err());
    }

    proptest! {
        #[test]
        fn reverse_and_negate_are_involutions(samples in proptest::collection::vec(-3.0f64..3.0, 1..80)) {
            let w = wf(samples);
            prop_assert_eq!(w.reversed().reversed().samples, w.samples.clone());
            prop_assert_eq!(w.negated().negated().samples, w.samples.clone());
        }
    }
}
