use std::fmt;
use std::sync::Arc;

use super::{centered_mod, Modulus};
use crate::error::{Error, Result};

/// An element of `Z_m[X]/(X^p + 1)` with centered coefficients in `[-m/2, m/2)`.
#[derive(Clone, PartialEq, Eq)]
pub struct RingPoly {
    coeffs: Vec<i128>,
    modulus: Arc<Modulus>,
}

impl fmt::Debug for RingPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingPoly(mod {}, {:?})", self.modulus.value(), self.coeffs)
    }
}

impl RingPoly {
    /// Reduces `coeffs` into the centered range; the length must equal the ring degree.
    pub fn new(coeffs: Vec<i128>, modulus: &Arc<Modulus>) -> Result<Self> {
        if coeffs.len() != modulus.degree() {
            return Err(Error::LengthMismatch { expected: modulus.degree(), found: coeffs.len() });
        }
        let m = modulus.value();
        let coeffs = coeffs.into_iter().map(|c| centered_mod(c, m)).collect();
        Ok(Self { coeffs, modulus: Arc::clone(modulus) })
    }

    pub fn zero(modulus: &Arc<Modulus>) -> Self {
        Self { coeffs: vec![0; modulus.degree()], modulus: Arc::clone(modulus) }
    }

    pub fn constant(c: i128, modulus: &Arc<Modulus>) -> Self {
        let mut coeffs = vec![0; modulus.degree()];
        coeffs[0] = centered_mod(c, modulus.value());
        Self { coeffs, modulus: Arc::clone(modulus) }
    }

    /// `c X^k`, with `X^p = -1` applied to out-of-range exponents.
    pub fn monomial(c: i128, k: usize, modulus: &Arc<Modulus>) -> Self {
        let p = modulus.degree();
        let sign = if (k / p) % 2 == 1 { -1 } else { 1 };
        let mut coeffs = vec![0; p];
        coeffs[k % p] = centered_mod(sign * c, modulus.value());
        Self { coeffs, modulus: Arc::clone(modulus) }
    }

    pub(crate) fn from_residues(residues: &[u128], modulus: &Arc<Modulus>) -> Self {
        let ar = modulus.arith();
        Self { coeffs: residues.iter().map(|&r| ar.center(r)).collect(), modulus: Arc::clone(modulus) }
    }

    pub(crate) fn residues(&self) -> Vec<u128> {
        let ar = self.modulus.arith();
        self.coeffs.iter().map(|&c| ar.from_signed(c)).collect()
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn modulus(&self) -> &Arc<Modulus> {
        &self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Infinity norm of the centered coefficients.
    pub fn norm_inf(&self) -> u128 {
        self.coeffs.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Self {
        let m = self.modulus.value();
        Self {
            coeffs: self.coeffs.iter().map(|&c| centered_mod(-c, m)).collect(),
            modulus: Arc::clone(&self.modulus),
        }
    }

    /// Multiplies every coefficient by the integer `k`.
    pub fn scale(&self, k: i128) -> Self {
        let ar = self.modulus.arith();
        let kr = ar.from_signed(k);
        Self {
            coeffs: self.coeffs.iter().map(|&c| ar.center(ar.mul(ar.from_signed(c), kr))).collect(),
            modulus: Arc::clone(&self.modulus),
        }
    }

    /// Reinterprets the coefficients in another ring of the same degree, re-centering them.
    pub fn lift_to(&self, modulus: &Arc<Modulus>) -> Result<Self> {
        RingPoly::new(self.coeffs.clone(), modulus)
    }

    /// Evaluates the polynomial at `x` modulo the coefficient modulus (Horner).
    pub fn eval(&self, x: u128) -> i128 {
        let ar = self.modulus.arith();
        let x = x % ar.modulus();
        let acc = self.coeffs.iter().rev().fold(0u128, |acc, &c| ar.add(ar.mul(acc, x), ar.from_signed(c)));
        ar.center(acc)
    }
}

fn same_ring(a: &RingPoly, b: &RingPoly) -> Result<()> {
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch);
    }
    Ok(())
}

pub fn poly_add(a: &RingPoly, b: &RingPoly) -> Result<RingPoly> {
    same_ring(a, b)?;
    let m = a.modulus.value() as i128;
    let half = a.modulus.value();
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(&x, &y)| {
            let s = x + y;
            // both summands lie in [-m/2, m/2), so one correction suffices
            if 2 * s >= half as i128 {
                s - m
            } else if 2 * s < -(half as i128) {
                s + m
            } else {
                s
            }
        })
        .collect();
    Ok(RingPoly { coeffs, modulus: Arc::clone(&a.modulus) })
}

pub fn poly_sub(a: &RingPoly, b: &RingPoly) -> Result<RingPoly> {
    poly_add(a, &b.neg())
}

/// Negacyclic product modulo `(X^p + 1, m)`; NTT when available, schoolbook otherwise.
pub fn poly_mul(a: &RingPoly, b: &RingPoly) -> Result<RingPoly> {
    same_ring(a, b)?;
    let modulus = &a.modulus;
    if !modulus.has_ntt() {
        return poly_mul_schoolbook(a, b);
    }
    let ar = modulus.arith();
    let mut fa = a.residues();
    let mut fb = b.residues();
    modulus.ntt_in_place(&mut fa);
    modulus.ntt_in_place(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = ar.mul(*x, *y);
    }
    modulus.intt_in_place(&mut fa);
    Ok(RingPoly::from_residues(&fa, modulus))
}

/// Direct O(p^2) negacyclic convolution.
pub fn poly_mul_schoolbook(a: &RingPoly, b: &RingPoly) -> Result<RingPoly> {
    same_ring(a, b)?;
    let modulus = &a.modulus;
    let ar = modulus.arith();
    let p = modulus.degree();
    let ra = a.residues();
    let rb = b.residues();
    let mut out = vec![0u128; p];
    for (i, &x) in ra.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in rb.iter().enumerate() {
            let prod = ar.mul(x, y);
            let k = i + j;
            if k < p {
                out[k] = ar.add(out[k], prod);
            } else {
                out[k - p] = ar.sub(out[k - p], prod);
            }
        }
    }
    Ok(RingPoly::from_residues(&out, modulus))
}

/// Evaluations `a(zeta_i)` at `zeta_i = zeta^(2i - 1)`, `i = 1..=p`, in natural order.
pub fn ntt_forward(a: &RingPoly) -> Result<Vec<i128>> {
    let modulus = &a.modulus;
    let tables = modulus
        .ntt_tables()
        .ok_or(Error::NoRoot { modulus: modulus.value(), degree: modulus.degree() })?;
    let mut r = a.residues();
    modulus.ntt_in_place(&mut r);
    let ar = modulus.arith();
    Ok(tables.bitrev().iter().map(|&j| ar.center(r[j])).collect())
}

/// Inverse of [`ntt_forward`]: interpolates the polynomial with the given evaluations.
pub fn ntt_inverse(evals: &[i128], modulus: &Arc<Modulus>) -> Result<RingPoly> {
    let tables = modulus
        .ntt_tables()
        .ok_or(Error::NoRoot { modulus: modulus.value(), degree: modulus.degree() })?;
    if evals.len() != modulus.degree() {
        return Err(Error::LengthMismatch { expected: modulus.degree(), found: evals.len() });
    }
    let ar = modulus.arith();
    let mut r = vec![0u128; evals.len()];
    for (i, &j) in tables.bitrev().iter().enumerate() {
        r[j] = ar.from_signed(evals[i]);
    }
    modulus.intt_in_place(&mut r);
    Ok(RingPoly::from_residues(&r, modulus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> Arc<Modulus> {
        Modulus::new(17, 4).unwrap()
    }

    fn p(c: &[i128], m: &Arc<Modulus>) -> RingPoly {
        RingPoly::new(c.to_vec(), m).unwrap()
    }

    #[test]
    fn new_centers_and_checks_length() {
        let m = toy();
        assert_eq!(p(&[9, -12, 17, 8], &m).coeffs(), &[-8, 5, 0, 8 - 17 + 17]);
        assert_eq!(RingPoly::new(vec![1, 2, 3], &m), Err(Error::LengthMismatch { expected: 4, found: 3 }));
    }

    #[test]
    fn golden_sum_and_product() {
        let m = toy();
        let pu = p(&[4, -7, 4, -7], &m);
        let pv = p(&[0, 7, 8, 3], &m);
        assert_eq!(poly_add(&pu, &pv).unwrap().coeffs(), &[4, 0, -5, -4]);
        let prod = poly_mul(&pu, &pv).unwrap();
        assert_eq!(prod.coeffs(), &[4, 4, 4, 1]);
        assert_eq!(prod, poly_mul_schoolbook(&pu, &pv).unwrap());
    }

    #[test]
    fn identities() {
        let m = toy();
        let a = p(&[3, -2, 7, 1], &m);
        assert_eq!(poly_add(&a, &RingPoly::zero(&m)).unwrap(), a);
        assert!(poly_add(&a, &a.neg()).unwrap().is_zero());
        assert_eq!(poly_mul(&a, &RingPoly::constant(1, &m)).unwrap(), a);
        let x_top = RingPoly::monomial(1, 3, &m);
        let x = RingPoly::monomial(1, 1, &m);
        assert_eq!(poly_mul(&x_top, &x).unwrap(), RingPoly::constant(-1, &m));
    }

    #[test]
    fn mismatched_rings_rejected() {
        let a = RingPoly::zero(&toy());
        let b = RingPoly::zero(&Modulus::new(97, 4).unwrap());
        assert_eq!(poly_add(&a, &b), Err(Error::ModulusMismatch));
        assert_eq!(poly_mul(&a, &b), Err(Error::ModulusMismatch));
    }

    #[test]
    fn forward_ntt_is_evaluation_at_odd_root_powers() {
        let m = toy();
        let zeta = m.root().unwrap();
        let a = p(&[4, -7, 4, -7], &m);
        assert_eq!(ntt_forward(&a).unwrap(), vec![1, 3, 5, 7]);
        assert_eq!(ntt_forward(&RingPoly::zero(&m)).unwrap(), vec![0; 4]);
        let ar = m.arith();
        for (i, v) in ntt_forward(&a).unwrap().into_iter().enumerate() {
            assert_eq!(v, a.eval(ar.pow(zeta, 2 * i as u128 + 1)));
        }
        assert!(ntt_forward(&RingPoly::zero(&Modulus::new((1 << 61) - 1, 4).unwrap())).is_err());
    }

    #[test]
    fn exhaustive_ring_axioms_small() {
        // associativity of products and distributivity over the 17^2 pairs of
        // two-term polynomials times a fixed third factor set
        let m = toy();
        let elems: Vec<RingPoly> =
            (0..17 * 17).map(|i| p(&[(i % 17) as i128, 0, (i / 17) as i128, 1], &m)).collect();
        let cs = [p(&[1, 2, 3, 4], &m), p(&[-8, 0, 5, -1], &m), p(&[0, 0, 0, 7], &m)];
        for a in &elems {
            for b in elems.iter().step_by(7) {
                for c in &cs {
                    let ab_c = poly_mul(&poly_mul(a, b).unwrap(), c).unwrap();
                    let a_bc = poly_mul(a, &poly_mul(b, c).unwrap()).unwrap();
                    assert_eq!(ab_c, a_bc);
                    let lhs = poly_mul(a, &poly_add(b, c).unwrap()).unwrap();
                    let rhs = poly_add(&poly_mul(a, b).unwrap(), &poly_mul(a, c).unwrap()).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn ntt_matches_schoolbook_exhaustively_on_small_supports() {
        let m = toy();
        for i in 0..17i128.pow(2) {
            for j in (0..17i128.pow(2)).step_by(5) {
                let a = p(&[i % 17, i / 17, 3, -1], &m);
                let b = p(&[j / 17, 2, j % 17, 5], &m);
                assert_eq!(poly_mul(&a, &b).unwrap(), poly_mul_schoolbook(&a, &b).unwrap());
            }
        }
    }

    fn arb_poly(modulus: Arc<Modulus>) -> impl Strategy<Value = RingPoly> {
        let half = (modulus.value() / 2) as i128;
        prop::collection::vec(-half..half, modulus.degree())
            .prop_map(move |c| RingPoly::new(c, &modulus).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ntt_product_equals_schoolbook_large(
            (a, b) in {
                let m = Modulus::new(65929217, 256).unwrap();
                (arb_poly(m.clone()), arb_poly(m))
            }
        ) {
            prop_assert_eq!(poly_mul(&a, &b).unwrap(), poly_mul_schoolbook(&a, &b).unwrap());
        }

        #[test]
        fn ntt_product_equals_schoolbook_composite_q(
            (a, b) in {
                let m = Modulus::from_prime_factors(&[137438822401, 137439010817], 256).unwrap();
                (arb_poly(m.clone()), arb_poly(m))
            }
        ) {
            prop_assert_eq!(poly_mul(&a, &b).unwrap(), poly_mul_schoolbook(&a, &b).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn ntt_round_trip(a in arb_poly(Modulus::new(12289, 64).unwrap())) {
            let evals = ntt_forward(&a).unwrap();
            // schoolbook evaluation as the oracle for the forward map
            let m = a.modulus().clone();
            let zeta = m.root().unwrap();
            for (i, v) in evals.iter().enumerate() {
                prop_assert_eq!(*v, a.eval(m.arith().pow(zeta, 2 * i as u128 + 1)));
            }
            prop_assert_eq!(ntt_inverse(&evals, &m).unwrap(), a);
        }

        #[test]
        fn centered_mod_idempotent(z in any::<i64>(), m in 1u64..1_000_000) {
            let once = centered_mod(z as i128, m as u128);
            prop_assert_eq!(centered_mod(once, m as u128), once);
            prop_assert!(2 * once >= -(m as i128) && 2 * once < m as i128);
        }
    }
}
