//! Sensing scans (placeholder while building).
