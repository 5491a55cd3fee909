//! Secret-key BGV over `R_{p,q}` with plaintext space `R_{p,N}`.
//!
//! `Enc(m) = [a sk + N e + m, -a]`, `Dec(c) = <c, [1, sk, sk^2]> mod q mod N`.
//! Multiplication produces length-3 ciphertexts and is never relinearized;
//! [`BgvContext::linear_combination`] evaluates `sum_i a_i * m_i` with one
//! multiplication per fresh input pair.

use std::fmt;
use std::ops::Sub;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::PackingContext;
use crate::ring::{centered_mod, gcd, poly_add, poly_mul, Modulus, RingPoly};
use crate::rng::{stream_rng, Stream};

/// Scheme parameters `(N, q, p, sigma)` plus the longest supported linear combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BgvParams {
    /// Plaintext modulus `N`.
    pub n: u128,
    /// Ciphertext modulus `q`.
    pub q: u128,
    /// Ring degree.
    pub p: usize,
    pub sigma: f64,
    pub r_bar: usize,
}

impl BgvParams {
    /// Structural checks; noise headroom is the job of [`validate_params`].
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.p == 0 || !self.p.is_power_of_two() {
            return bad(format!("p = {} is not a power of two", self.p));
        }
        if self.n < 2 {
            return bad("N must be at least 2".into());
        }
        if self.q <= self.n {
            return bad(format!("q = {} must exceed N = {}", self.q, self.n));
        }
        if self.q >= crate::ring::MAX_MODULUS {
            return bad("q must be below 2^125".into());
        }
        if gcd(self.n, self.q) != 1 {
            return bad("N and q must be coprime".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {} must be a finite non-negative number", self.sigma));
        }
        if self.r_bar == 0 {
            return bad("r_bar must be positive".into());
        }
        Ok(())
    }
}

/// Message scale as exponents: a ciphertext at `Scale { l, s }` carries `x / (L^l s^s)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scale {
    pub l: u8,
    pub s: u8,
}

impl Scale {
    pub const UNIT: Scale = Scale { l: 0, s: 0 };
    /// Quantized signals, `1/L`.
    pub const SIGNAL: Scale = Scale { l: 1, s: 0 };
    /// Quantized gains, `1/s`.
    pub const GAIN: Scale = Scale { l: 0, s: 1 };
    /// Controller output, `1/(Ls)`.
    pub const OUTPUT: Scale = Scale { l: 1, s: 1 };

    pub fn times(self, other: Scale) -> Scale {
        Scale { l: self.l + other.l, s: self.s + other.s }
    }

    /// The factor `L^l s^s` that turns the integer message back into a real value.
    pub fn factor(self, l: f64, s: f64) -> f64 {
        l.powi(self.l as i32) * s.powi(self.s as i32)
    }
}

/// Operation tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub enc: u64,
    pub dec: u64,
    pub add: u64,
    pub mult: u64,
    /// Ring products performed inside homomorphic multiplications (four per `Mult`).
    pub poly_mult: u64,
}

impl Sub for OpCounts {
    type Output = OpCounts;
    fn sub(self, o: OpCounts) -> OpCounts {
        OpCounts {
            enc: self.enc - o.enc,
            dec: self.dec - o.dec,
            add: self.add - o.add,
            mult: self.mult - o.mult,
            poly_mult: self.poly_mult - o.poly_mult,
        }
    }
}

#[derive(Debug, Default)]
struct OpCounter {
    enc: AtomicU64,
    dec: AtomicU64,
    add: AtomicU64,
    mult: AtomicU64,
    poly_mult: AtomicU64,
}

impl OpCounter {
    fn bump(c: &AtomicU64, k: u64) {
        c.fetch_add(k, Ordering::Relaxed);
    }

    fn snapshot(&self) -> OpCounts {
        OpCounts {
            enc: self.enc.load(Ordering::Relaxed),
            dec: self.dec.load(Ordering::Relaxed),
            add: self.add.load(Ordering::Relaxed),
            mult: self.mult.load(Ordering::Relaxed),
            poly_mult: self.poly_mult.load(Ordering::Relaxed),
        }
    }
}

pub struct SecretKey {
    powers: [RingPoly; 3],
    // NTT images of sk and sk^2 when the ciphertext ring supports it
    ntt: Option<[Vec<u128>; 2]>,
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl SecretKey {
    pub fn sk(&self) -> &RingPoly {
        &self.powers[1]
    }

    /// `[1, sk, sk^2]`.
    pub fn powers(&self) -> &[RingPoly; 3] {
        &self.powers
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    polys: Vec<RingPoly>,
    scale: Scale,
    depth: u8,
}

impl Ciphertext {
    pub fn polys(&self) -> &[RingPoly] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// Number of homomorphic multiplications behind this ciphertext.
    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn is_fresh(&self) -> bool {
        self.depth == 0 && self.polys.len() == 2
    }

    /// Integers on the wire: one per coefficient.
    pub fn integer_count(&self) -> usize {
        self.polys.len() * self.polys.first().map_or(0, |c| c.coeffs().len())
    }

    /// Little-endian wire encoding.
    ///
    /// ```text
    /// "BGVC" | n_polys u8 | scale.l u8 | scale.s u8 | depth u8 | p u32 | width u8
    /// then n_polys * p signed coefficients, `width` bytes each, two's complement
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let modulus = self.polys[0].modulus();
        let p = modulus.degree();
        let width = coeff_width(modulus.value());
        let mut out = Vec::with_capacity(13 + self.polys.len() * p * width);
        out.extend_from_slice(WIRE_MAGIC);
        out.extend_from_slice(&[self.polys.len() as u8, self.scale.l, self.scale.s, self.depth]);
        out.extend_from_slice(&(p as u32).to_le_bytes());
        out.push(width as u8);
        for poly in &self.polys {
            for &c in poly.coeffs() {
                out.extend_from_slice(&c.to_le_bytes()[..width]);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], modulus: &Arc<Modulus>) -> Result<Self> {
        let wire = |m: &str| Error::Wire(m.to_string());
        if bytes.len() < 13 || &bytes[..4] != WIRE_MAGIC {
            return Err(wire("bad header"));
        }
        let n_polys = bytes[4] as usize;
        let scale = Scale { l: bytes[5], s: bytes[6] };
        let depth = bytes[7];
        let p = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let width = bytes[12] as usize;
        if !(2..=3).contains(&n_polys) {
            return Err(wire("ciphertext must hold 2 or 3 polynomials"));
        }
        if p != modulus.degree() || width != coeff_width(modulus.value()) {
            return Err(wire("ring parameters do not match"));
        }
        let body = &bytes[13..];
        if body.len() != n_polys * p * width {
            return Err(wire("truncated or oversized body"));
        }
        let polys = body
            .chunks_exact(p * width)
            .map(|chunk| {
                let coeffs = chunk
                    .chunks_exact(width)
                    .map(|b| {
                        let fill = if b[width - 1] & 0x80 != 0 { 0xff } else { 0 };
                        let mut buf = [fill; 16];
                        buf[..width].copy_from_slice(b);
                        i128::from_le_bytes(buf)
                    })
                    .collect();
                RingPoly::new(coeffs, modulus)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { polys, scale, depth })
    }
}

const WIRE_MAGIC: &[u8; 4] = b"BGVC";

/// Bytes per signed coefficient in `[-q/2, q/2)`.
fn coeff_width(q: u128) -> usize {
    let bits = 128 - q.leading_zeros() as usize + 1;
    bits.div_ceil(8)
}

/// A fresh ciphertext with both polynomials pre-transformed for repeated products.
#[derive(Clone, Debug)]
pub struct PreparedCiphertext {
    scale: Scale,
    inner: Prepared,
}

#[derive(Clone, Debug)]
enum Prepared {
    Ntt([Vec<u128>; 2]),
    Coeff(Ciphertext),
}

impl PreparedCiphertext {
    pub fn scale(&self) -> Scale {
        self.scale
    }
}

/// Keys, rings and operation counters for one parameter set.
#[derive(Debug)]
pub struct BgvContext {
    params: BgvParams,
    q_ring: Arc<Modulus>,
    n_ring: Arc<Modulus>,
    packing: Option<PackingContext>,
    counter: OpCounter,
}

impl BgvContext {
    pub fn new(params: BgvParams) -> Result<Self> {
        params.check()?;
        let q_ring = Modulus::new(params.q, params.p)?;
        let n_ring = Modulus::new(params.n, params.p)?;
        let packing = PackingContext::from_modulus(&n_ring).ok();
        if !q_ring.has_ntt() {
            log::warn!("q = {} has no NTT root for p = {}; using schoolbook products", params.q, params.p);
        }
        Ok(Self { params, q_ring, n_ring, packing, counter: OpCounter::default() })
    }

    pub fn params(&self) -> &BgvParams {
        &self.params
    }

    pub fn ciphertext_ring(&self) -> &Arc<Modulus> {
        &self.q_ring
    }

    pub fn plaintext_ring(&self) -> &Arc<Modulus> {
        &self.n_ring
    }

    /// Present when `N` is an NTT-friendly prime.
    pub fn packing(&self) -> Option<&PackingContext> {
        self.packing.as_ref()
    }

    fn require_packing(&self) -> Result<&PackingContext> {
        self.packing.as_ref().ok_or(Error::NoRoot { modulus: self.params.n, degree: self.params.p })
    }

    pub fn counts(&self) -> OpCounts {
        self.counter.snapshot()
    }

    pub fn keygen(&self, seed: u64) -> SecretKey {
        self.keygen_with(&mut stream_rng(seed, Stream::KeyGen))
    }

    /// `sk` drawn coefficient-wise from the rounded Gaussian `chi`.
    pub fn keygen_with<R: Rng + ?Sized>(&self, rng: &mut R) -> SecretKey {
        let sk = RingPoly::new(self.sample_error(rng), &self.q_ring).expect("degree matches");
        let sk2 = poly_mul(&sk, &sk).expect("same ring");
        let ntt = self.q_ring.has_ntt().then(|| {
            let mut a = residues(&sk);
            let mut b = residues(&sk2);
            self.q_ring.ntt_in_place(&mut a);
            self.q_ring.ntt_in_place(&mut b);
            [a, b]
        });
        SecretKey { powers: [RingPoly::constant(1, &self.q_ring), sk, sk2], ntt }
    }

    fn sample_error<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i128> {
        if self.params.sigma == 0.0 {
            return vec![0; self.params.p];
        }
        let normal = Normal::new(0.0, self.params.sigma).expect("sigma validated");
        (0..self.params.p).map(|_| normal.sample(rng).round() as i128).collect()
    }

    /// `poly * sk^power` for `power` in {1, 2}, as residues.
    fn mul_key(&self, sk: &SecretKey, poly: &RingPoly, power: usize) -> Vec<u128> {
        match &sk.ntt {
            Some(ntt) => {
                let ar = self.q_ring.arith();
                let mut a = residues(poly);
                self.q_ring.ntt_in_place(&mut a);
                for (x, &k) in a.iter_mut().zip(&ntt[power - 1]) {
                    *x = ar.mul(*x, k);
                }
                self.q_ring.intt_in_place(&mut a);
                a
            }
            None => residues(&poly_mul(poly, &sk.powers[power]).expect("same ring")),
        }
    }

    /// Encrypts a plaintext polynomial over `N`.
    pub fn encrypt<R: Rng + ?Sized>(&self, sk: &SecretKey, m: &RingPoly, scale: Scale, rng: &mut R) -> Result<Ciphertext> {
        if **m.modulus() != *self.n_ring {
            return Err(Error::ModulusMismatch);
        }
        let ar = self.q_ring.arith();
        let q = self.params.q;
        let a: Vec<u128> = (0..self.params.p).map(|_| rng.random_range(0..q)).collect();
        let a_poly = RingPoly::from_residues(&a, &self.q_ring);
        let a_sk = self.mul_key(sk, &a_poly, 1);
        let e = self.sample_error(rng);
        let n = ar.from_signed(self.params.n as i128);
        let c0: Vec<u128> = a_sk
            .iter()
            .zip(&e)
            .zip(m.coeffs())
            .map(|((&ask, &ei), &mi)| ar.add(ar.add(ask, ar.mul(n, ar.from_signed(ei))), ar.from_signed(mi)))
            .collect();
        OpCounter::bump(&self.counter.enc, 1);
        Ok(Ciphertext {
            polys: vec![RingPoly::from_residues(&c0, &self.q_ring), a_poly.neg()],
            scale,
            depth: 0,
        })
    }

    /// Encrypts the integer `k` as a constant polynomial.
    pub fn encrypt_scalar<R: Rng + ?Sized>(&self, sk: &SecretKey, k: i64, scale: Scale, rng: &mut R) -> Result<Ciphertext> {
        self.encrypt(sk, &RingPoly::constant(k as i128, &self.n_ring), scale, rng)
    }

    /// Packs a length-`p` slot vector and encrypts it.
    pub fn encrypt_packed<R: Rng + ?Sized>(&self, sk: &SecretKey, slots: &[i64], scale: Scale, rng: &mut R) -> Result<Ciphertext> {
        let m = self.require_packing()?.pack(slots)?;
        self.encrypt(sk, &m, scale, rng)
    }

    /// `<c, [1, sk, sk^2]>` centered mod q: the message plus `N` times the noise.
    pub fn decrypt_raw(&self, sk: &SecretKey, c: &Ciphertext) -> Result<RingPoly> {
        if c.polys.is_empty() || c.polys.len() > 3 {
            return Err(Error::LengthMismatch { expected: 3, found: c.polys.len() });
        }
        if **c.polys[0].modulus() != *self.q_ring {
            return Err(Error::ModulusMismatch);
        }
        let ar = self.q_ring.arith();
        let mut acc = residues(&c.polys[0]);
        match &sk.ntt {
            Some(ntt) if c.polys.len() > 1 => {
                let mut sum = vec![0u128; self.params.p];
                for (poly, key) in c.polys[1..].iter().zip(ntt) {
                    let mut x = residues(poly);
                    self.q_ring.ntt_in_place(&mut x);
                    for ((s, &xi), &k) in sum.iter_mut().zip(&x).zip(key) {
                        *s = ar.add(*s, ar.mul(xi, k));
                    }
                }
                self.q_ring.intt_in_place(&mut sum);
                for (a, s) in acc.iter_mut().zip(sum) {
                    *a = ar.add(*a, s);
                }
            }
            _ => {
                for (i, poly) in c.polys.iter().enumerate().skip(1) {
                    let prod = residues(&poly_mul(poly, &sk.powers[i])?);
                    for (a, s) in acc.iter_mut().zip(prod) {
                        *a = ar.add(*a, s);
                    }
                }
            }
        }
        Ok(RingPoly::from_residues(&acc, &self.q_ring))
    }

    pub fn decrypt(&self, sk: &SecretKey, c: &Ciphertext) -> Result<RingPoly> {
        let raw = self.decrypt_raw(sk, c)?;
        OpCounter::bump(&self.counter.dec, 1);
        RingPoly::new(raw.coeffs().to_vec(), &self.n_ring)
    }

    pub fn decrypt_packed(&self, sk: &SecretKey, c: &Ciphertext) -> Result<Vec<i64>> {
        let packing = self.require_packing()?;
        packing.unpack(&self.decrypt(sk, c)?)
    }

    /// Constant term of the decryption, for scalar messages.
    pub fn decrypt_scalar(&self, sk: &SecretKey, c: &Ciphertext) -> Result<i64> {
        Ok(self.decrypt(sk, c)?.coeffs()[0] as i64)
    }

    pub fn hom_add(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        if c1.polys.len() != c2.polys.len() {
            return Err(Error::LengthMismatch { expected: c1.polys.len(), found: c2.polys.len() });
        }
        if c1.scale != c2.scale {
            return Err(Error::ScaleMismatch);
        }
        let polys = c1.polys.iter().zip(&c2.polys).map(|(a, b)| poly_add(a, b)).collect::<Result<_>>()?;
        OpCounter::bump(&self.counter.add, 1);
        Ok(Ciphertext { polys, scale: c1.scale, depth: c1.depth.max(c2.depth) })
    }

    pub fn hom_mul(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        for c in [c1, c2] {
            if c.polys.len() != 2 {
                return Err(Error::LengthMismatch { expected: 2, found: c.polys.len() });
            }
        }
        if self.q_ring.has_ntt() {
            // four forward and three inverse transforms instead of four full products
            let (x, y) = (self.prepare(c1)?, self.prepare(c2)?);
            return self.linear_combination(&[&x], &[&y]);
        }
        let (a, b) = (&c1.polys, &c2.polys);
        let cross = poly_add(&poly_mul(&a[0], &b[1])?, &poly_mul(&a[1], &b[0])?)?;
        let polys = vec![poly_mul(&a[0], &b[0])?, cross, poly_mul(&a[1], &b[1])?];
        OpCounter::bump(&self.counter.mult, 1);
        OpCounter::bump(&self.counter.poly_mult, 4);
        Ok(Ciphertext { polys, scale: c1.scale.times(c2.scale), depth: c1.depth.max(c2.depth) + 1 })
    }

    /// Multiplies the message by the integer `k` (reduced mod N first).
    pub fn plain_scalar_mul(&self, k: i64, c: &Ciphertext) -> Ciphertext {
        let k = centered_mod(k as i128, self.params.n);
        Ciphertext { polys: c.polys.iter().map(|p| p.scale(k)).collect(), scale: c.scale, depth: c.depth }
    }

    /// Transforms a fresh ciphertext once so it can enter many products cheaply.
    pub fn prepare(&self, c: &Ciphertext) -> Result<PreparedCiphertext> {
        if c.depth != 0 {
            return Err(Error::NotFresh { depth: c.depth });
        }
        if c.polys.len() != 2 {
            return Err(Error::LengthMismatch { expected: 2, found: c.polys.len() });
        }
        if **c.polys[0].modulus() != *self.q_ring {
            return Err(Error::ModulusMismatch);
        }
        let inner = if self.q_ring.has_ntt() {
            let mut t = [residues(&c.polys[0]), residues(&c.polys[1])];
            for x in t.iter_mut() {
                self.q_ring.ntt_in_place(x);
            }
            Prepared::Ntt(t)
        } else {
            Prepared::Coeff(c.clone())
        };
        Ok(PreparedCiphertext { scale: c.scale, inner })
    }

    /// `(+)_i a_i (x) m_i`: one multiplication per pair and `r - 1` additions.
    ///
    /// Accumulates in the NTT domain, so only three inverse transforms are paid
    /// regardless of `r`. Every pair must carry the same product scale.
    pub fn linear_combination(&self, a: &[&PreparedCiphertext], m: &[&PreparedCiphertext]) -> Result<Ciphertext> {
        let r = a.len();
        if r != m.len() {
            return Err(Error::LengthMismatch { expected: r, found: m.len() });
        }
        if r == 0 {
            return Err(Error::InvalidParams("empty linear combination".into()));
        }
        if r > self.params.r_bar {
            return Err(Error::TooManyTerms { terms: r, max: self.params.r_bar });
        }
        let scale = a[0].scale.times(m[0].scale);
        if a.iter().zip(m).any(|(x, y)| x.scale.times(y.scale) != scale) {
            return Err(Error::ScaleMismatch);
        }
        let p = self.params.p;
        let out = if self.q_ring.has_ntt() {
            let ar = self.q_ring.arith();
            let mut acc = [vec![0u128; p], vec![0u128; p], vec![0u128; p]];
            for (x, y) in a.iter().zip(m) {
                let (Prepared::Ntt(x), Prepared::Ntt(y)) = (&x.inner, &y.inner) else {
                    return Err(Error::ModulusMismatch);
                };
                let [acc0, acc1, acc2] = &mut acc;
                for j in 0..p {
                    acc0[j] = ar.add(acc0[j], ar.mul(x[0][j], y[0][j]));
                    acc1[j] = ar.add(acc1[j], ar.add(ar.mul(x[0][j], y[1][j]), ar.mul(x[1][j], y[0][j])));
                    acc2[j] = ar.add(acc2[j], ar.mul(x[1][j], y[1][j]));
                }
            }
            let polys = acc
                .into_iter()
                .map(|mut v| {
                    self.q_ring.intt_in_place(&mut v);
                    RingPoly::from_residues(&v, &self.q_ring)
                })
                .collect();
            Ciphertext { polys, scale, depth: 1 }
        } else {
            let mut total: Option<Ciphertext> = None;
            let before = self.counts();
            for (x, y) in a.iter().zip(m) {
                let (Prepared::Coeff(x), Prepared::Coeff(y)) = (&x.inner, &y.inner) else {
                    return Err(Error::ModulusMismatch);
                };
                let prod = self.hom_mul(x, y)?;
                total = Some(match total {
                    None => prod,
                    Some(t) => self.hom_add(&t, &prod)?,
                });
            }
            // undo the inner tallies; the combination is counted once below
            let inner = self.counts() - before;
            self.counter.mult.fetch_sub(inner.mult, Ordering::Relaxed);
            self.counter.add.fetch_sub(inner.add, Ordering::Relaxed);
            self.counter.poly_mult.fetch_sub(inner.poly_mult, Ordering::Relaxed);
            total.expect("r >= 1")
        };
        OpCounter::bump(&self.counter.mult, r as u64);
        OpCounter::bump(&self.counter.add, r as u64 - 1);
        OpCounter::bump(&self.counter.poly_mult, 4 * r as u64);
        Ok(out)
    }

    fn prepare_all(&self, cs: &[Ciphertext]) -> Result<Vec<PreparedCiphertext>> {
        cs.iter().map(|c| self.prepare(c)).collect()
    }

    /// Encrypted `sum_i a_i m_i` over scalar messages in constant polynomials.
    pub fn prod1(&self, enc_a: &[Ciphertext], enc_m: &[Ciphertext]) -> Result<Ciphertext> {
        self.prod_fresh(enc_a, enc_m)
    }

    /// Encrypted `sum_i a_i o m_i` over packed slot vectors (Hadamard products).
    pub fn prod2(&self, enc_a: &[Ciphertext], enc_m: &[Ciphertext]) -> Result<Ciphertext> {
        self.prod_fresh(enc_a, enc_m)
    }

    fn prod_fresh(&self, enc_a: &[Ciphertext], enc_m: &[Ciphertext]) -> Result<Ciphertext> {
        if enc_a.len() > self.params.r_bar {
            return Err(Error::TooManyTerms { terms: enc_a.len(), max: self.params.r_bar });
        }
        let a = self.prepare_all(enc_a)?;
        let m = self.prepare_all(enc_m)?;
        let a: Vec<&PreparedCiphertext> = a.iter().collect();
        let m: Vec<&PreparedCiphertext> = m.iter().collect();
        self.linear_combination(&a, &m)
    }
}

fn residues(p: &RingPoly) -> Vec<u128> {
    p.residues()
}

/// Outcome of [`validate_params`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseReport {
    /// `log2` of the worst-case decryption magnitude after `r_bar` products.
    pub worst_case_bits: f64,
    /// `log2` of the six-sigma estimate of the same quantity.
    pub high_probability_bits: f64,
    /// `log2(q/2)`.
    pub limit_bits: f64,
    pub worst_case_pass: bool,
    pub trials: usize,
    pub trial_failures: usize,
    /// `log2` of the largest decryption magnitude seen in the trials.
    pub observed_bits: f64,
    pub pass: bool,
    pub reason: Option<String>,
}

/// Noise headroom check for one multiplication followed by `r_bar - 1` additions.
///
/// A fresh decryption is bounded by `B = N/2 + 6 sigma N`. The worst case after
/// the combination is `r_bar p B^2`; the six-sigma estimate treats the `r_bar p`
/// summands of each coefficient as independent with second moment at most
/// `(N^2 (sigma^2 + 1/4))^2`. The verdict passes when the estimate stays below
/// `q/2` and every empirical trial decrypts exactly.
pub fn validate_params(params: &BgvParams, trials: usize, seed: u64) -> NoiseReport {
    let n = params.n as f64;
    let fresh = n / 2.0 + 6.0 * params.sigma * n;
    let terms = (params.r_bar.max(1) * params.p.max(1)) as f64;
    let worst = terms * fresh * fresh;
    let six_sigma = 6.0 * terms.sqrt() * n * n * (params.sigma * params.sigma + 0.25);
    let estimate = worst.min(six_sigma);
    let limit = params.q as f64 / 2.0;
    let mut report = NoiseReport {
        worst_case_bits: worst.log2(),
        high_probability_bits: estimate.log2(),
        limit_bits: limit.log2(),
        worst_case_pass: worst < limit,
        trials: 0,
        trial_failures: 0,
        observed_bits: f64::NEG_INFINITY,
        pass: false,
        reason: None,
    };
    let ctx = match params.check().and_then(|_| BgvContext::new(params.clone())) {
        Ok(ctx) => ctx,
        Err(e) => {
            report.reason = Some(e.to_string());
            return report;
        }
    };
    if estimate >= limit {
        report.reason = Some(format!(
            "noise estimate 2^{:.1} reaches q/2 = 2^{:.1}",
            report.high_probability_bits, report.limit_bits
        ));
        return report;
    }
    match run_trials(&ctx, trials, seed) {
        Ok((failures, observed)) => {
            report.trials = trials;
            report.trial_failures = failures;
            report.observed_bits = observed;
            if failures > 0 {
                report.reason = Some(format!("{failures} of {trials} trials decrypted incorrectly"));
            } else {
                report.pass = true;
            }
        }
        Err(e) => report.reason = Some(e.to_string()),
    }
    report
}

/// Random `r_bar`-term combinations drawn from a pool of fresh encryptions.
fn run_trials(ctx: &BgvContext, trials: usize, seed: u64) -> Result<(usize, f64)> {
    if trials == 0 {
        return Ok((0, f64::NEG_INFINITY));
    }
    let mut rng = stream_rng(seed, Stream::Trials);
    let sk = ctx.keygen_with(&mut rng);
    let params = ctx.params();
    let (p, r) = (params.p, params.r_bar);
    let half = (params.n / 2) as i128;
    let pool_size = (2 * r).max(16);
    let mut msgs = Vec::with_capacity(pool_size);
    let mut pool = Vec::with_capacity(pool_size);
    for _ in 0..pool_size {
        let coeffs: Vec<i128> = (0..p).map(|_| rng.random_range(-half..=half)).collect();
        let m = RingPoly::new(coeffs, ctx.plaintext_ring())?;
        pool.push(ctx.prepare(&ctx.encrypt(&sk, &m, Scale::UNIT, &mut rng)?)?);
        msgs.push(m);
    }
    let slot_msgs = match ctx.packing() {
        Some(pk) => Some(msgs.iter().map(|m| pk.unpack(m)).collect::<Result<Vec<_>>>()?),
        None => None,
    };
    let mut failures = 0;
    let mut observed = 0u128;
    for _ in 0..trials {
        let pairs: Vec<(usize, usize)> =
            (0..r).map(|_| (rng.random_range(0..pool_size), rng.random_range(0..pool_size))).collect();
        let a: Vec<&PreparedCiphertext> = pairs.iter().map(|&(i, _)| &pool[i]).collect();
        let m: Vec<&PreparedCiphertext> = pairs.iter().map(|&(_, j)| &pool[j]).collect();
        let c = ctx.linear_combination(&a, &m)?;
        let raw = ctx.decrypt_raw(&sk, &c)?;
        observed = observed.max(raw.norm_inf());
        let dec = RingPoly::new(raw.coeffs().to_vec(), ctx.plaintext_ring())?;
        let ok = match (&slot_msgs, ctx.packing()) {
            (Some(slots), Some(pk)) => {
                let got = pk.unpack(&dec)?;
                (0..p).all(|k| {
                    let want = pairs.iter().fold(0i128, |acc, &(i, j)| {
                        centered_mod(acc + slots[i][k] as i128 * slots[j][k] as i128, params.n)
                    });
                    got[k] as i128 == want
                })
            }
            _ => {
                let mut want = RingPoly::zero(ctx.plaintext_ring());
                for &(i, j) in &pairs {
                    want = poly_add(&want, &poly_mul(&msgs[i], &msgs[j])?)?;
                }
                dec == want
            }
        };
        if !ok {
            failures += 1;
        }
    }
    Ok((failures, (observed.max(1) as f64).log2()))
}
