#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod circle;
pub mod cvec;
pub mod domains;
pub mod error;
pub mod exec;
pub mod field;
pub mod math;
pub mod moduli;
pub mod optimize;
pub mod pshlab;
pub mod rng;
pub mod spaces;
pub mod verify;

pub use circle::{mean_on_circle, power_mean_on_circle, CircleMean, QuadCtrl};
pub use cvec::CVec;
pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use field::{Field, FnField, Smoothness};
pub use moduli::{EstimatorOptions, ModulusCurve, ModulusEstimate, ModulusKind, PLConstant};
pub use optimize::SearchOptions;
pub use spaces::{Family, Space, SpaceSpec};
