//! Analytical throughput and energy model comparing processing-in-memory
//! against a bandwidth-bound CPU, with a row-parallel NOR array simulator
//! used to check the cycle counts the model relies on.
//!
//! ```
//! use bitlet_core::catalog::{oc_of, OpKind, OpSpec};
//! use bitlet_core::model::{perf_pim, PimMachine, WorkloadPoint};
//!
//! let oc = oc_of(&OpSpec::new(OpKind::Add, 16).unwrap()).unwrap();
//! let w = WorkloadPoint::new(oc, 0, 48).unwrap();
//! let gops = perf_pim(&PimMachine::default(), &w).gops();
//! assert!((gops - 728.177).abs() < 0.01);
//! ```

pub mod analysis;
pub mod catalog;
pub mod config;
pub mod error;
pub mod figures;
pub mod microprogram;
pub mod model;
pub mod pac;
pub mod sim;
pub mod validate;

pub use error::{Error, Result};
