//! Experiment harness: rate fits, CSV output, configs and verification criteria.

pub mod config;
pub mod criteria;
pub mod csv;
pub mod fit;
pub mod verify;
