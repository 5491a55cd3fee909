//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use encctl_core::{BgvContext, BgvParams, RunConfig};

/// Cryptosystem parameters of the aircraft preset.
pub fn f16_params() -> BgvParams {
    RunConfig::preset("f16").expect("bundled preset").bgv().expect("valid parameters")
}

pub fn f16_context() -> Arc<BgvContext> {
    Arc::new(BgvContext::new(f16_params()).expect("valid parameters"))
}
