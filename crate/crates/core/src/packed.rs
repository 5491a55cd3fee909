//! Packed encrypted controller: one ciphertext per block of the container.
//!
//! `Hc` is split into `2n` blocks (`n` of width `l`, then `n` of width `h`). Each
//! block is vectorized row by row into partitions of width `w = max(h, l)`, and
//! each signal block is duplicated into all `h` partitions. One `Prod2` over the
//! `2n` pairs yields slot `i*w + j = sum_b H_b[i][j] z_b[j]`; the actuator
//! recovers `u_i` as the sum of partition `i`.

use std::sync::Arc;

use nalgebra::{DMatrix, Scalar};
use rand::Rng;

use crate::bgv::{BgvContext, Ciphertext, PreparedCiphertext, Scale, SecretKey};
use crate::control::{push_history, TransformedController};
use crate::error::{Error, Result};
use crate::general::StorageCounts;
use crate::quant::QuantParams;

/// Slot layout shared by the controller, sensor and actuator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct PackedLayout {
    pub n: usize,
    pub h: usize,
    pub l: usize,
    pub p: usize,
    /// Partition width `max(h, l)`.
    pub w: usize,
}

impl PackedLayout {
    pub fn new(n: usize, h: usize, l: usize, p: usize) -> Result<Self> {
        let w = h.max(l);
        if h * w > p {
            return Err(Error::InvalidParams(format!("p = {p} slots cannot hold h * max(h, l) = {}", h * w)));
        }
        Ok(Self { n, h, l, p, w })
    }

    /// Sums each partition: `out[i] = sum_j slots[i*w + j]`.
    pub fn partition_sums<T: Copy + Into<i128>>(&self, slots: &[T]) -> Vec<i64> {
        (0..self.h)
            .map(|i| slots[i * self.w..(i + 1) * self.w].iter().map(|&v| v.into()).sum::<i128>() as i64)
            .collect()
    }

    /// Row-major vectorization of an `h x width` block, zero padded to `p` slots.
    pub fn vectorize_pad(&self, block: &DMatrix<i64>) -> Vec<i64> {
        let mut out = vec![0i64; self.p];
        for i in 0..block.nrows() {
            for j in 0..block.ncols() {
                out[i * self.w + j] = block[(i, j)];
            }
        }
        out
    }

    /// `x` copied into the head of each of the `h` partitions, zero padded.
    pub fn duplicate_pad(&self, x: &[i64]) -> Vec<i64> {
        let mut out = vec![0i64; self.p];
        for i in 0..self.h {
            out[i * self.w..i * self.w + x.len()].copy_from_slice(x);
        }
        out
    }
}

/// Splits `Hc` into its `n` output blocks (`h x l`) followed by `n` input blocks (`h x h`).
pub fn split_blocks<T: Scalar>(m: &DMatrix<T>, n: usize, h: usize, l: usize) -> Vec<DMatrix<T>> {
    let mut out = Vec::with_capacity(2 * n);
    for b in 0..n {
        out.push(m.columns(b * l, l).into_owned());
    }
    for b in 0..n {
        out.push(m.columns(n * l + b * h, h).into_owned());
    }
    out
}

pub struct PackedEncController {
    ctx: Arc<BgvContext>,
    layout: PackedLayout,
    blocks: Vec<PreparedCiphertext>,
    z: Vec<PreparedCiphertext>,
}

impl PackedEncController {
    pub fn setup<R: Rng + ?Sized>(
        ctx: Arc<BgvContext>,
        sk: &SecretKey,
        tc: &TransformedController,
        qp: &QuantParams,
        rng: &mut R,
    ) -> Result<Self> {
        let layout = PackedLayout::new(tc.n, tc.h, tc.l, ctx.params().p)?;
        if 2 * tc.n > ctx.params().r_bar {
            return Err(Error::TooManyTerms { terms: 2 * tc.n, max: ctx.params().r_bar });
        }
        let hq = qp.gains(&tc.hcal)?;
        let blocks = split_blocks(&hq, tc.n, tc.h, tc.l)
            .iter()
            .map(|b| ctx.prepare(&ctx.encrypt_packed(sk, &layout.vectorize_pad(b), Scale::GAIN, rng)?))
            .collect::<Result<Vec<_>>>()?;
        let zq = qp.signals(tc.z0.as_slice())?;
        let (ys, us) = zq.split_at(tc.n * tc.l);
        let z = ys
            .chunks(tc.l)
            .chain(us.chunks(tc.h))
            .map(|c| ctx.prepare(&ctx.encrypt_packed(sk, &layout.duplicate_pad(c), Scale::SIGNAL, rng)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ctx, layout, blocks, z })
    }

    pub fn layout(&self) -> PackedLayout {
        self.layout
    }

    pub fn context(&self) -> &Arc<BgvContext> {
        &self.ctx
    }

    /// One length-3 ciphertext whose slots hold the partition terms of `ubar(k)`.
    pub fn output(&self) -> Result<Ciphertext> {
        let a: Vec<&PreparedCiphertext> = self.blocks.iter().collect();
        let z: Vec<&PreparedCiphertext> = self.z.iter().collect();
        self.ctx.linear_combination(&a, &z)
    }

    /// Shifts the packed `y(k)` and `u(k)` into their halves of the container.
    pub fn push_io(&mut self, y: &Ciphertext, u: &Ciphertext) -> Result<()> {
        if y.scale() != Scale::SIGNAL || u.scale() != Scale::SIGNAL {
            return Err(Error::ScaleMismatch);
        }
        let y = self.ctx.prepare(y)?;
        let u = self.ctx.prepare(u)?;
        push_history(&mut self.z, &[y], &[u], self.layout.n, 1, 1);
        Ok(())
    }

    /// Storage in polynomials for the packed design.
    pub fn storage(&self) -> StorageCounts {
        StorageCounts { u: 2, u_bar: 3, y: 2, z: 2 * self.z.len(), h: 2 * self.blocks.len() }
    }
}

/// Sensor side: one packed ciphertext with `round(y/L)` duplicated into every partition.
pub fn sensor_encrypt<R: Rng + ?Sized>(
    ctx: &BgvContext,
    sk: &SecretKey,
    qp: &QuantParams,
    layout: &PackedLayout,
    y: &[f64],
    rng: &mut R,
) -> Result<(Vec<i64>, Ciphertext)> {
    let yq = qp.signals(y)?;
    let ct = ctx.encrypt_packed(sk, &layout.duplicate_pad(&yq), Scale::SIGNAL, rng)?;
    Ok((yq, ct))
}

#[derive(Clone, Debug)]
pub struct PackedActuatorOutput {
    /// Decrypted slots in `Z_N`.
    pub slots: Vec<i64>,
    /// Partition sums, computed on integers before rescaling.
    pub ints: Vec<i64>,
    pub u: Vec<f64>,
    pub uq: Vec<i64>,
    pub u_enc: Ciphertext,
}

/// Actuator side: unpack, sum partitions, rescale, then re-encrypt `u` for feedback.
pub fn actuator_step<R: Rng + ?Sized>(
    ctx: &BgvContext,
    sk: &SecretKey,
    qp: &QuantParams,
    layout: &PackedLayout,
    u_bar: &Ciphertext,
    rng: &mut R,
) -> Result<PackedActuatorOutput> {
    if u_bar.scale() != Scale::OUTPUT {
        return Err(Error::ScaleMismatch);
    }
    let slots = ctx.decrypt_packed(sk, u_bar)?;
    let ints = layout.partition_sums(&slots);
    let u: Vec<f64> = ints.iter().map(|&m| qp.rescale(m)).collect();
    let uq = qp.signals(&u)?;
    let u_enc = ctx.encrypt_packed(sk, &layout.duplicate_pad(&uq), Scale::SIGNAL, rng)?;
    Ok(PackedActuatorOutput { slots, ints, u, uq, u_enc })
}

/// Integers sent per step: `y` and `u` up (2 polys each) and `ubar` down (3 polys).
pub fn comm_ints(p: usize) -> usize {
    7 * p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgv::BgvParams;
    use crate::control::{transform, ControllerRealization};
    use crate::linalg::{Mat, Vector};
    use crate::oracle::QuantizedController;
    use crate::quant::RangeMode;
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ctx(p: usize, r_bar: usize) -> Arc<BgvContext> {
        let q = 97u128 * 193 * 257 * 353 * 449 * 577 * 641 * 673 * 769;
        Arc::new(BgvContext::new(BgvParams { n: 40961, q, p, sigma: 3.2, r_bar }).unwrap())
    }

    #[test]
    fn layout_helpers() {
        let lay = PackedLayout::new(1, 2, 3, 8).unwrap();
        assert_eq!(lay.w, 3);
        let b = DMatrix::from_row_slice(2, 3, &[1, 2, 3, 4, 5, 6]);
        assert_eq!(lay.vectorize_pad(&b), vec![1, 2, 3, 4, 5, 6, 0, 0]);
        let b = DMatrix::from_row_slice(2, 2, &[1, 2, 3, 4]);
        assert_eq!(lay.vectorize_pad(&b), vec![1, 2, 0, 3, 4, 0, 0, 0]);
        assert_eq!(lay.duplicate_pad(&[7, 8]), vec![7, 8, 0, 7, 8, 0, 0, 0]);
        assert_eq!(lay.partition_sums(&[1i64, 2, 3, 4, 5, 6, 9, 9]), vec![6, 15]);
        assert!(PackedLayout::new(1, 3, 3, 8).is_err());
    }

    #[test]
    fn split_blocks_order() {
        let m = DMatrix::from_row_slice(1, 6, &[1, 2, 3, 4, 5, 6]);
        let b = split_blocks(&m, 2, 1, 2);
        assert_eq!(b.len(), 4);
        assert_eq!(b[0].as_slice(), &[1, 2]);
        assert_eq!(b[1].as_slice(), &[3, 4]);
        assert_eq!(b[2].as_slice(), &[5]);
        assert_eq!(b[3].as_slice(), &[6]);
    }

    proptest! {
        #[test]
        fn slot_products_sum_to_matrix_vector(
            h in 1usize..4, l in 1usize..4, n in 1usize..3,
            seed in any::<u64>(),
        ) {
            // plaintext model of Prod2 followed by partition sums
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let nb = n * (h + l);
            let w = h.max(l);
            let lay = PackedLayout::new(n, h, l, (h * w).next_power_of_two()).unwrap();
            let hm = DMatrix::from_fn(h, nb, |_, _| rng.random_range(-50i64..50));
            let z: Vec<i64> = (0..nb).map(|_| rng.random_range(-50i64..50)).collect();
            let blocks = split_blocks(&hm, n, h, l);
            let (ys, us) = z.split_at(n * l);
            let zs: Vec<&[i64]> = ys.chunks(l).chain(us.chunks(h)).collect();
            let mut slots = vec![0i64; lay.p];
            for (b, zb) in blocks.iter().zip(&zs) {
                let hv = lay.vectorize_pad(b);
                let zv = lay.duplicate_pad(zb);
                for k in 0..lay.p { slots[k] += hv[k] * zv[k]; }
            }
            let want: Vec<i64> = (0..h).map(|i| (0..nb).map(|j| hm[(i, j)] * z[j]).sum()).collect();
            prop_assert_eq!(lay.partition_sums(&slots), want);
        }
    }

    fn pipeline(h: usize, l: usize) -> (TransformedController, QuantParams) {
        // 2-state controller with h inputs and l outputs
        let f = Mat::from_row_slice(2, 2, &[0.6, 0.2, -0.1, 0.5]);
        let g = Mat::from_fn(2, l, |i, j| 0.3 + 0.1 * (i + j) as f64);
        let hh = Mat::from_fn(h, 2, |i, j| if (i + j) % 2 == 0 { 1.0 } else { -0.5 });
        let c = ControllerRealization::new(f, g, hh, Vector::from_vec(vec![0.4, -0.2])).unwrap();
        (transform(&c).unwrap(), QuantParams::from_inverse(50.0, 20.0, 40961, RangeMode::Strict).unwrap())
    }

    fn run_against_oracle(h: usize, l: usize, p: usize) {
        let (tc, qp) = pipeline(h, l);
        let ctx = ctx(p, 4);
        let sk = ctx.keygen(5);
        let mut rng = stream_rng(5, Stream::Setup);
        let mut ctl = PackedEncController::setup(ctx.clone(), &sk, &tc, &qp, &mut rng).unwrap();
        let lay = ctl.layout();
        let mut oracle = QuantizedController::new(&tc, qp).unwrap();
        for k in 0..15 {
            let y: Vec<f64> = (0..l).map(|j| 0.2 * ((k + j) as f64).cos()).collect();
            let before = ctx.counts();
            let out = ctl.output().unwrap();
            let act = actuator_step(&ctx, &sk, &qp, &lay, &out, &mut rng).unwrap();
            let want_slots: Vec<i64> = oracle.packed_slots(&lay).iter().map(|&v| qp.wrap(v).unwrap()).collect();
            assert_eq!(&act.slots[..h * lay.w], &want_slots[..]);
            assert_eq!(act.ints, oracle.output_packed(&lay).unwrap());
            let (yq, y_enc) = sensor_encrypt(&ctx, &sk, &qp, &lay, &y, &mut rng).unwrap();
            ctl.push_io(&y_enc, &act.u_enc).unwrap();
            oracle.push_io(&yq, &act.uq);
            let d = ctx.counts() - before;
            assert_eq!((d.enc, d.dec, d.add, d.mult), (2, 1, 3, 4));
        }
        assert_eq!(ctl.storage(), StorageCounts { u: 2, u_bar: 3, y: 2, z: 8, h: 8 });
    }

    #[test]
    fn packed_matches_oracle_square() {
        run_against_oracle(2, 2, 4);
    }

    #[test]
    fn packed_matches_oracle_more_outputs() {
        run_against_oracle(1, 3, 4);
    }

    #[test]
    fn packed_matches_oracle_more_inputs() {
        run_against_oracle(3, 2, 16);
    }

    #[test]
    fn slot_capacity_checked() {
        let (tc, qp) = pipeline(3, 3);
        let ctx = ctx(8, 4);
        let sk = ctx.keygen(5);
        let mut rng = stream_rng(5, Stream::Setup);
        assert!(matches!(
            PackedEncController::setup(ctx, &sk, &tc, &qp, &mut rng),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn communication_is_seven_polys() {
        assert_eq!(comm_ints(4096), 28672);
    }
}
