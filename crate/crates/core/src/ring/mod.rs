//! Exact arithmetic in `Z_m` and in `R_{p,m} = Z_m[X]/(X^p + 1)`.

mod arith;
mod ntt;
mod poly;

pub use arith::{centered_mod, gcd, is_prime, ModArith, MAX_MODULUS};
pub use poly::{ntt_forward, ntt_inverse, poly_add, poly_mul, poly_mul_schoolbook, poly_sub, RingPoly};

pub(crate) use ntt::NttTables;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A coefficient modulus `m` together with the ring degree `p`.
///
/// When `m = 1 (mod 2p)` and a root `zeta` with `zeta^p = -1 (mod m)` is known, ring
/// multiplication runs through the NTT; otherwise it falls back to the schoolbook
/// negacyclic convolution with identical results.
#[derive(Clone)]
pub struct Modulus {
    arith: ModArith,
    degree: usize,
    root: Option<u128>,
    ntt: Option<NttTables>,
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulus")
            .field("m", &self.arith.modulus())
            .field("degree", &self.degree)
            .field("root", &self.root)
            .finish()
    }
}

impl PartialEq for Modulus {
    fn eq(&self, other: &Self) -> bool {
        self.arith.modulus() == other.arith.modulus() && self.degree == other.degree
    }
}

impl Eq for Modulus {}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 || !degree.is_power_of_two() {
        return Err(Error::InvalidParams(format!("ring degree {degree} is not a power of two")));
    }
    Ok(())
}

fn check_value(m: u128) -> Result<()> {
    if !(2..MAX_MODULUS).contains(&m) {
        return Err(Error::InvalidParams(format!("modulus {m} outside [2, 2^125)")));
    }
    Ok(())
}

impl Modulus {
    /// Builds the ring, enabling the NTT whenever a root of `X^p + 1` exists.
    ///
    /// Primes need `m = 1 (mod 2p)`. Composite moduli are factored (Pollard rho
    /// with a bounded budget) and get a CRT root when every prime factor is
    /// NTT-friendly and appears once; otherwise the schoolbook path is used.
    pub fn new(m: u128, degree: usize) -> Result<Arc<Self>> {
        check_degree(degree)?;
        check_value(m)?;
        if is_prime(m) {
            let root = find_primitive_root(m, degree).ok();
            return Ok(Arc::new(Self::assemble(m, degree, root)));
        }
        if let Some(factors) = factorize(m) {
            let mut sorted = factors.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() == factors.len() {
                if let Ok(ring) = Self::from_prime_factors(&sorted, degree) {
                    return Ok(ring);
                }
            }
        }
        Ok(Arc::new(Self::assemble(m, degree, None)))
    }

    /// Builds the ring without an NTT, forcing schoolbook multiplication.
    pub fn without_ntt(m: u128, degree: usize) -> Result<Arc<Self>> {
        check_degree(degree)?;
        check_value(m)?;
        Ok(Arc::new(Self::assemble(m, degree, None)))
    }

    /// Builds the ring with an explicit root, which must satisfy `root^p = -1 (mod m)`.
    pub fn with_root(m: u128, degree: usize, root: u128) -> Result<Arc<Self>> {
        check_degree(degree)?;
        check_value(m)?;
        if m.is_multiple_of(2) {
            return Err(Error::NoRoot { modulus: m, degree });
        }
        let arith = ModArith::new(m);
        if arith.pow(root, degree as u128) != m - 1 {
            return Err(Error::NoRoot { modulus: m, degree });
        }
        Ok(Arc::new(Self::assemble(m, degree, Some(root % m))))
    }

    /// Builds the ring over a squarefree product of NTT-friendly primes; the root
    /// is assembled from the per-prime smallest roots by the CRT.
    pub fn from_prime_factors(factors: &[u128], degree: usize) -> Result<Arc<Self>> {
        check_degree(degree)?;
        if factors.is_empty() {
            return Err(Error::InvalidParams("empty factor list".into()));
        }
        let mut m: u128 = 1;
        for &f in factors {
            if !is_prime(f) {
                return Err(Error::InvalidParams(format!("factor {f} is not prime")));
            }
            m = m
                .checked_mul(f)
                .filter(|v| *v < MAX_MODULUS)
                .ok_or_else(|| Error::InvalidParams("factor product exceeds 2^125".into()))?;
        }
        check_value(m)?;
        let arith = ModArith::new(m);
        let mut root = 0u128;
        for &f in factors {
            let r = find_primitive_root(f, degree)?;
            // CRT basis element: (m/f) * ((m/f)^-1 mod f)
            let cofactor = m / f;
            let inv = ModArith::new(f).inv(cofactor % f).ok_or_else(|| {
                Error::InvalidParams(format!("factor {f} repeats"))
            })?;
            let basis = arith.mul(cofactor % m, inv);
            root = arith.add(root, arith.mul(basis, r));
        }
        Self::with_root(m, degree, root)
    }

    fn assemble(m: u128, degree: usize, root: Option<u128>) -> Self {
        let arith = ModArith::new(m);
        let ntt = root.map(|r| NttTables::new(&arith, degree, r));
        Self { arith, degree, root, ntt }
    }

    pub fn value(&self) -> u128 {
        self.arith.modulus()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn root(&self) -> Option<u128> {
        self.root
    }

    pub fn has_ntt(&self) -> bool {
        self.ntt.is_some()
    }

    pub fn arith(&self) -> &ModArith {
        &self.arith
    }

    pub(crate) fn ntt_tables(&self) -> Option<&NttTables> {
        self.ntt.as_ref()
    }

    /// Forward NTT in place (bit-reversed output). Panics without a root.
    pub(crate) fn ntt_in_place(&self, a: &mut [u128]) {
        self.ntt.as_ref().expect("NTT unavailable").forward(&self.arith, a);
    }

    /// Inverse NTT in place (bit-reversed input). Panics without a root.
    pub(crate) fn intt_in_place(&self, a: &mut [u128]) {
        self.ntt.as_ref().expect("NTT unavailable").inverse(&self.arith, a);
    }
}

const RHO_BUDGET: u64 = 1 << 22;

/// Prime factorization with multiplicity, or `None` if the rho budget runs out.
pub fn factorize(m: u128) -> Option<Vec<u128>> {
    let mut out = Vec::new();
    let mut stack = vec![m];
    while let Some(x) = stack.pop() {
        if x == 1 {
            continue;
        }
        if is_prime(x) {
            out.push(x);
            continue;
        }
        let d = [2u128, 3, 5, 7, 11, 13].into_iter().find(|d| x % d == 0).or_else(|| pollard_brent(x))?;
        stack.push(d);
        stack.push(x / d);
    }
    out.sort_unstable();
    Some(out)
}

/// A nontrivial factor of the odd composite `n` (Brent's cycle variant).
fn pollard_brent(n: u128) -> Option<u128> {
    let ar = ModArith::new(n);
    let mut spent = 0u64;
    for c in 1u128..64 {
        let f = |x: u128| ar.add(ar.mul(x, x), c);
        let (mut y, mut r, mut q) = (2u128, 1u64, 1u128);
        let (mut x, mut ys, mut g) = (y, y, 1u128);
        const BLOCK: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BLOCK.min(r - k) {
                    y = f(y);
                    q = ar.mul(q, x.abs_diff(y));
                }
                g = gcd(q, n);
                k += BLOCK;
            }
            spent += r;
            r *= 2;
            if spent > RHO_BUDGET {
                return None;
            }
        }
        if g == n {
            // the block overshot; replay one step at a time
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return Some(g);
        }
    }
    None
}

/// Smallest `zeta > 1` with multiplicative order exactly `2p` modulo the prime `m`.
///
/// A quadratic non-residue `x` gives one such root `x^((m-1)/2p)`; every other
/// one is an odd power of it, so the minimum is taken over those `p` powers.
pub fn find_primitive_root(m: u128, degree: usize) -> Result<u128> {
    check_degree(degree)?;
    let two_p = 2 * degree as u128;
    if !(3..MAX_MODULUS).contains(&m) || !(m - 1).is_multiple_of(two_p) || !is_prime(m) {
        return Err(Error::NoRoot { modulus: m, degree });
    }
    let arith = ModArith::new(m);
    let minus_one = m - 1;
    let non_residue = (2..m)
        .find(|&x| arith.pow(x, (m - 1) / 2) == minus_one)
        .ok_or(Error::NoRoot { modulus: m, degree })?;
    let base = arith.pow(non_residue, (m - 1) / two_p);
    let base_sq = arith.mul(base, base);
    let mut best = base;
    let mut cur = base;
    for _ in 1..degree {
        cur = arith.mul(cur, base_sq);
        best = best.min(cur);
    }
    debug_assert_eq!(arith.pow(best, degree as u128), minus_one);
    Ok(best)
}
