//! Negacyclic number-theoretic transform over `Z_m[X]/(X^p + 1)`.
//!
//! The in-place transforms work on canonical residues. The forward pass
//! leaves evaluations in bit-reversed order: slot `j` holds `a(psi^(2 brv(j) + 1))`.

use super::arith::ModArith;

#[derive(Clone, Debug)]
pub(crate) struct NttTables {
    psi_rev: Vec<u128>,
    psi_inv_rev: Vec<u128>,
    degree_inv: u128,
    bitrev: Vec<usize>,
}

fn bit_reverse(x: usize, log: u32) -> usize {
    if log == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - log)
    }
}

impl NttTables {
    /// `psi` must satisfy `psi^p = -1 (mod m)`.
    pub(crate) fn new(arith: &ModArith, degree: usize, psi: u128) -> Self {
        let log = degree.trailing_zeros();
        let psi_inv = arith.inv(psi).expect("root must be invertible");
        let bitrev: Vec<usize> = (0..degree).map(|i| bit_reverse(i, log)).collect();
        let mut psi_rev = vec![0u128; degree];
        let mut psi_inv_rev = vec![0u128; degree];
        let (mut pw, mut pw_inv) = (1u128 % arith.modulus(), 1u128 % arith.modulus());
        for i in 0..degree {
            psi_rev[bitrev[i]] = pw;
            psi_inv_rev[bitrev[i]] = pw_inv;
            pw = arith.mul(pw, psi);
            pw_inv = arith.mul(pw_inv, psi_inv);
        }
        let degree_inv = arith.inv(degree as u128).expect("degree must be invertible");
        Self { psi_rev, psi_inv_rev, degree_inv, bitrev }
    }

    pub(crate) fn bitrev(&self) -> &[usize] {
        &self.bitrev
    }

    /// Cooley-Tukey, natural order in, bit-reversed evaluations out.
    pub(crate) fn forward(&self, arith: &ModArith, a: &mut [u128]) {
        let n = a.len();
        let mut t = n;
        let mut m = 1;
        while m < n {
            t /= 2;
            for i in 0..m {
                let j1 = 2 * i * t;
                let w = self.psi_rev[m + i];
                for j in j1..j1 + t {
                    let u = a[j];
                    let v = arith.mul(a[j + t], w);
                    a[j] = arith.add(u, v);
                    a[j + t] = arith.sub(u, v);
                }
            }
            m *= 2;
        }
    }

    /// Gentleman-Sande, bit-reversed evaluations in, natural coefficients out.
    pub(crate) fn inverse(&self, arith: &ModArith, a: &mut [u128]) {
        let n = a.len();
        let mut t = 1;
        let mut m = n;
        while m > 1 {
            let half = m / 2;
            let mut j1 = 0;
            for i in 0..half {
                let w = self.psi_inv_rev[half + i];
                for j in j1..j1 + t {
                    let u = a[j];
                    let v = a[j + t];
                    a[j] = arith.add(u, v);
                    a[j + t] = arith.mul(arith.sub(u, v), w);
                }
                j1 += 2 * t;
            }
            t *= 2;
            m = half;
        }
        for x in a.iter_mut() {
            *x = arith.mul(*x, self.degree_inv);
        }
    }
}
