//! Encrypted linear dynamic controllers over a from-scratch BGV cryptosystem.
//!
//! A linear controller is re-realized so that its state is a window of past
//! outputs and inputs. The state matrix then only shifts entries, and the
//! encrypted controller never multiplies a ciphertext twice. Two encrypted
//! designs are provided: one ciphertext per entry ([`general`]) and slot
//! packing ([`packed`]).

// NaN must fail every range check, so `!(x > 0.0)` style comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bgv;
pub mod config;
pub mod control;
pub mod design;
pub mod error;
pub mod general;
pub mod linalg;
pub mod oracle;
pub mod packed;
pub mod packing;
pub mod quant;
pub mod ring;
pub mod rng;
pub mod selftest;
pub mod sim;

pub use bgv::{validate_params, BgvContext, BgvParams, Ciphertext, NoiseReport, OpCounts, Scale, SecretKey};
pub use config::RunConfig;
pub use control::{transform, ControllerRealization, TransformedController};
pub use design::{design, DesignReport, ErrorBudget};
pub use error::{Error, Result};
pub use general::{GeneralEncController, StorageCounts};
pub use linalg::{Mat, Vector};
pub use oracle::QuantizedController;
pub use packed::{PackedEncController, PackedLayout};
pub use packing::PackingContext;
pub use quant::{QuantParams, RangeMode};
pub use ring::{Modulus, RingPoly};
pub use sim::{ControllerKind, CostReport, LoopSetup, PlantModel, SimTrace};
