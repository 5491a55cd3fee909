//! Residue arithmetic for moduli up to 2^125.
//!
//! Products are formed as 256-bit values and reduced with Barrett's method, so
//! a ciphertext modulus around 2^74 never needs an RNS split.

const LO: u128 = u64::MAX as u128;

/// Largest modulus accepted by [`ModArith`].
pub const MAX_MODULUS: u128 = 1 << 125;

/// Full 128x128-bit product as `(hi, lo)`.
#[inline(always)]
pub(crate) fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = (a >> 64, a & LO);
    let (b1, b0) = (b >> 64, b & LO);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & LO) + (p10 & LO);
    let lo = (p00 & LO) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// `(hi:lo) >> shift` for `0 < shift < 128`, truncated to 128 bits.
#[inline(always)]
fn shr_wide(hi: u128, lo: u128, shift: u32) -> u128 {
    (hi << (128 - shift)) | (lo >> shift)
}

/// Quotient of the 256-bit value `(hi:lo)` by `d`; requires `hi < d`.
fn div_wide(hi: u128, lo: u128, d: u128) -> u128 {
    debug_assert!(hi < d);
    let mut rem = hi;
    let mut quo = 0u128;
    for bit in (0..128).rev() {
        let carry = rem >> 127;
        rem = (rem << 1) | ((lo >> bit) & 1);
        quo <<= 1;
        if carry == 1 || rem >= d {
            rem = rem.wrapping_sub(d);
            quo |= 1;
        }
    }
    quo
}

/// Arithmetic in `Z_m` on canonical residues `[0, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModArith {
    m: u128,
    bits: u32,
    mu: u128,
}

impl ModArith {
    /// Panics unless `2 <= m < 2^125`.
    pub fn new(m: u128) -> Self {
        assert!((2..MAX_MODULUS).contains(&m), "modulus {m} out of range");
        let bits = 128 - m.leading_zeros();
        // mu = floor(2^(2 bits) / m)
        let two_k = 2 * bits;
        let (hi, lo) = if two_k >= 128 { (1u128 << (two_k - 128), 0) } else { (0, 1u128 << two_k) };
        let mu = div_wide(hi, lo, m);
        Self { m, bits, mu }
    }

    #[inline(always)]
    pub fn modulus(&self) -> u128 {
        self.m
    }

    #[inline(always)]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        let s = a + b;
        if s >= self.m {
            s - self.m
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            a + self.m - b
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: u128) -> u128 {
        if a == 0 {
            0
        } else {
            self.m - a
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        let (hi, lo) = mul_wide(a, b);
        self.reduce_wide(hi, lo)
    }

    /// Reduces a 256-bit value below `m^2`.
    #[inline(always)]
    pub(crate) fn reduce_wide(&self, hi: u128, lo: u128) -> u128 {
        let q1 = shr_wide(hi, lo, self.bits - 1);
        let (qh, ql) = mul_wide(q1, self.mu);
        let q3 = shr_wide(qh, ql, self.bits + 1);
        let mut r = lo.wrapping_sub(q3.wrapping_mul(self.m));
        while r >= self.m {
            r -= self.m;
        }
        r
    }

    pub fn pow(&self, base: u128, mut exp: u128) -> u128 {
        let mut acc = 1 % self.m;
        let mut b = base % self.m;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, if `gcd(a, m) = 1`.
    pub fn inv(&self, a: u128) -> Option<u128> {
        let (mut r0, mut r1) = (self.m as i128, (a % self.m) as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        if r0 != 1 {
            return None;
        }
        Some(t0.rem_euclid(self.m as i128) as u128)
    }

    /// Canonical residue of a signed integer.
    #[inline(always)]
    pub fn from_signed(&self, x: i128) -> u128 {
        x.rem_euclid(self.m as i128) as u128
    }

    /// Centered representative in `[-m/2, m/2)` of a canonical residue.
    #[inline(always)]
    pub fn center(&self, r: u128) -> i128 {
        if 2 * r >= self.m {
            r as i128 - self.m as i128
        } else {
            r as i128
        }
    }
}

/// `z mod m` into the centered set `[-m/2, m/2)`, i.e. `z - floor((z + m/2)/m) m`.
pub fn centered_mod(z: i128, m: u128) -> i128 {
    assert!(m >= 1 && m <= i128::MAX as u128, "modulus must be positive");
    let mi = m as i128;
    let r = z.rem_euclid(mi);
    if 2 * (r as u128) >= m {
        r - mi
    } else {
        r
    }
}

/// Miller-Rabin with the first thirteen prime bases; deterministic below 3.3e24.
pub fn is_prime(n: u128) -> bool {
    const BASES: [u128; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n == b {
            return true;
        }
        if n.is_multiple_of(b) {
            return false;
        }
    }
    if n >= MAX_MODULUS {
        return false;
    }
    let arith = ModArith::new(n);
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = arith.pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = arith.mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
