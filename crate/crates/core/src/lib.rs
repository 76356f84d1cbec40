//! Cryogenic MOSFET modeling toolkit.
//!
//! * [`physics`]: freeze-out aware threshold voltage of a bulk MOS stack.
//! * [`model`]: smooth temperature-dependent drain-current model.
//! * [`extraction`]: figures of merit from measured or synthetic I-V sweeps.
//! * [`fitting`]: bounded calibration of model parameters to sweeps and anchors.
//! * [`circuits`]: ring-oscillator, flip-flop and logic-block estimates.
//! * [`formats`]: parameter files, sweep CSV and report serialization.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod error;
pub mod extraction;
pub mod fitting;
pub mod formats;
pub mod library;
pub mod model;
pub mod optimize;
pub mod physics;
pub mod sweep;

pub use error::{Error, Result};
