//! Closest point method discretization of the surface Helmholtz equation
//! `(c − Δ_S) u = f`, solved with restricted additive Schwarz (RAS) and
//! optimized RAS with Robin transmission conditions, either as stationary
//! iterations or as GMRES preconditioners.

pub mod arc;
pub mod band;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod lu;
pub mod manufactured;
pub mod operators;
pub mod partition;
pub mod pipeline;
pub mod solve;
pub mod sparse;
pub mod study;
pub mod subdomain;
pub mod transmission;

pub use error::{Error, Result};
