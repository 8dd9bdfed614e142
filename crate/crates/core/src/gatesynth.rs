//! Gate targets and waveform synthesis (placeholder while building).
