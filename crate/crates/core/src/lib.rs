//! Uniform bounds for expected order statistics of weighted i.i.d.
//! sequences in terms of Orlicz norms built from the underlying law, plus
//! the Monte Carlo and enumeration oracles that check them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod distributions;
pub mod error;
pub mod montecarlo;
pub mod orlicz;
pub mod partition;
pub mod quadrature;
pub mod verify;
pub mod weights;

pub use bounds::BoundReport;
pub use distributions::DistributionModel;
pub use error::{Error, Result};
pub use montecarlo::{MonteCarloEstimate, Statistic};
pub use orlicz::{BoundConstants, ConstantOverrides, OrliczFunction};
pub use partition::PartitionResult;
pub use weights::{Order, Weights};
