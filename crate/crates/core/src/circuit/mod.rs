//! Circuit DSL (placeholder while building).
