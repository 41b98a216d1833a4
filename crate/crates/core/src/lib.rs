//! Finite-sum nonconvex optimization with saddle-point escape.
//!
//! The crate provides CNC-SCSG (variance-reduced SCSG epochs plus an
//! occasional single-sample SGD perturbation), its escaping routine and plug-in
//! framework, first-order baselines, and spectral diagnostics that certify
//! second-order stationarity from Hessian-vector products.
//!
//! ```
//! use cnc_scsg::config::OptimizerConfig;
//! use cnc_scsg::optim::{cnc_scsg_run, IfoConvention};
//! use cnc_scsg::problem::{generate_dataset, make_sigmoid_problem};
//! use cnc_scsg::sampling::RunStreams;
//!
//! let data = generate_dataset(40, 4, 7).unwrap();
//! let p = make_sigmoid_problem(&data, 0.5).unwrap();
//! let mut cfg = OptimizerConfig::practical(40, 5, 3e-2);
//! cfg.max_epochs = 20;
//! let cfg = cfg.validated().unwrap();
//! let mut streams = RunStreams::new(0);
//! let x0 = ndarray::Array1::zeros(4);
//! let trace = cnc_scsg_run(&p, &cfg, &mut streams, x0, IfoConvention::Paper, &mut []).unwrap();
//! assert!(trace.rows.len() <= 20);
//! ```

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod harness;
pub mod optim;
pub mod problem;
pub mod sampling;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};
