//! Offline golden-vector checks for packing and the homomorphic operations.
//!
//! Ring `Z_17[X]/(X^4 + 1)` with `zeta = 2`: packing `[1, 3, 5, 7]` and
//! `[2, -4, -6, 8]`, their sum and their product, in the clear and under BGV.

use serde::Serialize;

use crate::bgv::{BgvContext, BgvParams, Scale};
use crate::packing::PackingContext;
use crate::ring::{poly_add, poly_mul};
use crate::rng::{stream_rng, Stream};

pub const GOLDEN_N: u128 = 17;
pub const GOLDEN_P: usize = 4;
pub const GOLDEN_ROOT: u128 = 2;
pub const GOLDEN_A: [i64; 4] = [1, 3, 5, 7];
pub const GOLDEN_B: [i64; 4] = [2, -4, -6, 8];
/// Coefficients, constant term first.
pub const GOLDEN_PACK_A: [i128; 4] = [4, -7, 4, -7];
pub const GOLDEN_PACK_B: [i128; 4] = [0, 7, 8, 3];
pub const GOLDEN_SUM_POLY: [i128; 4] = [4, 0, -5, -4];
pub const GOLDEN_SUM: [i64; 4] = [3, -1, -1, -2];
pub const GOLDEN_PRODUCT_POLY: [i128; 4] = [4, 4, 4, 1];
pub const GOLDEN_PRODUCT: [i64; 4] = [2, 5, 4, 5];

/// Ciphertext modulus for the encrypted checks (NTT friendly for `p = 4`).
const SELFTEST_Q: u128 = 97 * 193 * 257 * 353;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn check<T: PartialEq + std::fmt::Debug>(name: &'static str, got: T, want: T) -> Check {
    let pass = got == want;
    let detail = if pass { format!("{got:?}") } else { format!("got {got:?}, want {want:?}") };
    Check { name, pass, detail }
}

/// Runs every golden check against the shipped constants.
pub fn run() -> SelftestReport {
    run_with_root(GOLDEN_ROOT)
}

/// Same as [`run`] with `expected_root` in place of the shipped root constant.
pub fn run_with_root(expected_root: u128) -> SelftestReport {
    let mut checks = Vec::new();
    let pc = match PackingContext::new(GOLDEN_N, GOLDEN_P) {
        Ok(pc) => pc,
        Err(e) => {
            checks.push(Check { name: "packing context", pass: false, detail: e.to_string() });
            return SelftestReport { checks, pass: false };
        }
    };
    checks.push(check("primitive root", pc.zetas()[0], expected_root));
    let zetas: Vec<u128> = (0..GOLDEN_P as u32).map(|i| expected_root.pow(2 * i + 1) % GOLDEN_N).collect();
    checks.push(check("evaluation points", pc.zetas().to_vec(), zetas));
    let pa = pc.pack(&GOLDEN_A).expect("length 4");
    let pb = pc.pack(&GOLDEN_B).expect("length 4");
    checks.push(check("pack a", pa.coeffs().to_vec(), GOLDEN_PACK_A.to_vec()));
    checks.push(check("pack b", pb.coeffs().to_vec(), GOLDEN_PACK_B.to_vec()));
    let sum = poly_add(&pa, &pb).expect("same ring");
    checks.push(check("sum polynomial", sum.coeffs().to_vec(), GOLDEN_SUM_POLY.to_vec()));
    checks.push(check("sum slots", pc.unpack(&sum).expect("same ring"), GOLDEN_SUM.to_vec()));
    let prod = poly_mul(&pa, &pb).expect("same ring");
    checks.push(check("product polynomial", prod.coeffs().to_vec(), GOLDEN_PRODUCT_POLY.to_vec()));
    checks.push(check("product slots", pc.unpack(&prod).expect("same ring"), GOLDEN_PRODUCT.to_vec()));
    checks.push(check("unpack a", pc.unpack(&pa).expect("same ring"), GOLDEN_A.to_vec()));

    let params = BgvParams { n: GOLDEN_N, q: SELFTEST_Q, p: GOLDEN_P, sigma: 3.2, r_bar: 2 };
    match BgvContext::new(params) {
        Ok(ctx) => {
            let sk = ctx.keygen(17);
            let mut rng = stream_rng(17, Stream::Setup);
            let ca = ctx.encrypt_packed(&sk, &GOLDEN_A, Scale::GAIN, &mut rng).expect("encrypts");
            let cb = ctx.encrypt_packed(&sk, &GOLDEN_B, Scale::SIGNAL, &mut rng).expect("encrypts");
            let cs = ctx.encrypt_packed(&sk, &GOLDEN_B, Scale::GAIN, &mut rng).expect("encrypts");
            let got_sum = ctx.hom_add(&ca, &cs).and_then(|c| ctx.decrypt_packed(&sk, &c));
            checks.push(check("encrypted sum", got_sum.ok(), Some(GOLDEN_SUM.to_vec())));
            let got_prod = ctx.hom_mul(&ca, &cb).and_then(|c| ctx.decrypt_packed(&sk, &c));
            checks.push(check("encrypted product", got_prod.ok(), Some(GOLDEN_PRODUCT.to_vec())));
        }
        Err(e) => checks.push(Check { name: "encryption context", pass: false, detail: e.to_string() }),
    }
    let pass = checks.iter().all(|c| c.pass);
    SelftestReport { checks, pass }
}
