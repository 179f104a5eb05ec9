//! Shared helpers for the integration tests.
#![allow(dead_code)]

pub mod oracles;
pub mod synth;
