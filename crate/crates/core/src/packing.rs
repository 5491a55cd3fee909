//! Slot packing: integer vectors in `Z_N^p` as plaintext polynomials in `R_{p,N}`.
//!
//! Slot `i` (0-based) is the evaluation at `zeta^(2i + 1)`, so ring addition and
//! multiplication act slot-wise.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring::{centered_mod, ntt_forward, ntt_inverse, Modulus, RingPoly};

#[derive(Clone, Debug)]
pub struct PackingContext {
    modulus: Arc<Modulus>,
    zetas: Vec<u128>,
    inv_p: u128,
}

impl PackingContext {
    /// Requires `n` prime with `n = 1 (mod 2p)`.
    pub fn new(n: u128, p: usize) -> Result<Self> {
        let modulus = Modulus::new(n, p)?;
        Self::from_modulus(&modulus)
    }

    pub fn from_modulus(modulus: &Arc<Modulus>) -> Result<Self> {
        let (n, p) = (modulus.value(), modulus.degree());
        let zeta = match modulus.root() {
            Some(z) if crate::ring::is_prime(n) => z,
            _ => return Err(Error::NoRoot { modulus: n, degree: p }),
        };
        let ar = modulus.arith();
        let zeta_sq = ar.mul(zeta, zeta);
        let mut zetas = Vec::with_capacity(p);
        let mut cur = zeta;
        for _ in 0..p {
            zetas.push(cur);
            cur = ar.mul(cur, zeta_sq);
        }
        let inv_p = ar.inv(p as u128).ok_or_else(|| Error::InvalidParams("p not invertible mod N".into()))?;
        Ok(Self { modulus: Arc::clone(modulus), zetas, inv_p })
    }

    pub fn modulus(&self) -> &Arc<Modulus> {
        &self.modulus
    }

    pub fn slots(&self) -> usize {
        self.zetas.len()
    }

    /// Evaluation points `zeta_i = zeta^(2i - 1)`, `i = 1..=p`.
    pub fn zetas(&self) -> &[u128] {
        &self.zetas
    }

    pub fn inv_p(&self) -> u128 {
        self.inv_p
    }

    /// Vandermonde matrix with rows `[1, zeta_i, ..., zeta_i^(p-1)]`, centered.
    pub fn theta(&self) -> Vec<Vec<i128>> {
        let ar = self.modulus.arith();
        self.zetas
            .iter()
            .map(|&z| (0..self.slots()).map(|j| ar.center(ar.pow(z, j as u128))).collect())
            .collect()
    }

    /// The polynomial whose evaluations are `v` (centered mod N).
    pub fn pack(&self, v: &[i64]) -> Result<RingPoly> {
        if v.len() != self.slots() {
            return Err(Error::LengthMismatch { expected: self.slots(), found: v.len() });
        }
        let evals: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        ntt_inverse(&evals, &self.modulus)
    }

    /// Evaluations of `f` at the packing points.
    pub fn unpack(&self, f: &RingPoly) -> Result<Vec<i64>> {
        if **f.modulus() != *self.modulus {
            return Err(Error::ModulusMismatch);
        }
        Ok(ntt_forward(f)?.into_iter().map(|x| x as i64).collect())
    }

    /// Centered reduction of a slot value mod N.
    pub fn reduce(&self, x: i128) -> i64 {
        centered_mod(x, self.modulus.value()) as i64
    }
}
