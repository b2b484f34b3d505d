//! Verification middleware: checks candidate RTL against an executable
//! reference model through lockstep co-simulation, and drives a bounded
//! regeneration loop with a code generator.

pub mod cosim;
pub mod diagnose;
pub mod genclient;
pub mod refmodel;
pub mod rtlsim;
pub mod session;
pub mod specmodel;
pub mod stimgen;
pub mod value;
