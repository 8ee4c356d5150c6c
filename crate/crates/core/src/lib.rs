//! Predicting low/high playback resolution of a video stream from channel
//! metrics (RSRP, RSRQ, SNR) alone.
//!
//! The pipeline runs [`ingest`] (log parsing and timestamp alignment),
//! [`stats`] (rank correlation against resolution), [`learners`] (eight
//! binary classifiers behind one contract), [`eval`] (stratified
//! cross-validation and confusion matrices) and [`persist`] (versioned model
//! files).

pub mod eval;
pub mod ingest;
pub mod learners;
pub mod persist;
pub mod stats;
