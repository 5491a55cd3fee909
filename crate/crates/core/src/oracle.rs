//! The quantized controller evaluated in the clear with exact integers.
//!
//! `z(k+1) = Fc z(k) + Gc round(y/L) + Rc round(u/L)` on integers,
//! `u(k) = round(Hc/s) z(k) * L s`. Both encrypted controllers must reproduce it
//! exactly while their range conditions hold.

use nalgebra::DMatrix;

use crate::control::{push_history, TransformedController};
use crate::error::Result;
use crate::packed::PackedLayout;
use crate::quant::QuantParams;

#[derive(Clone, Debug)]
pub struct QuantizedController {
    hq: DMatrix<i64>,
    z: Vec<i64>,
    n: usize,
    h: usize,
    l: usize,
    qp: QuantParams,
}

impl QuantizedController {
    pub fn new(tc: &TransformedController, qp: QuantParams) -> Result<Self> {
        Ok(Self {
            hq: qp.gains(&tc.hcal)?,
            z: qp.signals(tc.z0.as_slice())?,
            n: tc.n,
            h: tc.h,
            l: tc.l,
            qp,
        })
    }

    pub fn quantized_gain(&self) -> &DMatrix<i64> {
        &self.hq
    }

    /// Current container `[y(k-1..k-n); u(k-1..k-n)]`, quantized.
    pub fn state(&self) -> &[i64] {
        &self.z
    }

    pub fn quant(&self) -> &QuantParams {
        &self.qp
    }

    /// `round(Hc/s) z(k)` without any modular reduction.
    pub fn output_ints(&self) -> Vec<i128> {
        (0..self.h)
            .map(|i| (0..self.z.len()).map(|j| self.hq[(i, j)] as i128 * self.z[j] as i128).sum())
            .collect()
    }

    /// Slot values of the packed product before partition sums, in layout order.
    pub fn packed_slots(&self, layout: &PackedLayout) -> Vec<i128> {
        let (n, h, l, w) = (self.n, self.h, self.l, layout.w);
        let mut slots = vec![0i128; h * w];
        for i in 0..h {
            for j in 0..w {
                let mut acc = 0i128;
                for b in 0..n {
                    if j < l {
                        acc += self.hq[(i, b * l + j)] as i128 * self.z[b * l + j] as i128;
                    }
                    if j < h {
                        let col = n * l + b * h + j;
                        acc += self.hq[(i, col)] as i128 * self.z[col] as i128;
                    }
                }
                slots[i * w + j] = acc;
            }
        }
        slots
    }

    /// Integer outputs as the element-wise design decrypts them (one value in `Z_N` each).
    pub fn output_general(&self) -> Result<Vec<i64>> {
        self.output_ints().into_iter().map(|v| self.qp.wrap(v)).collect()
    }

    /// Integer outputs as the packed design reconstructs them: partition sums of slots in `Z_N`.
    pub fn output_packed(&self, layout: &PackedLayout) -> Result<Vec<i64>> {
        let slots = self.packed_slots(layout);
        let wrapped = slots.into_iter().map(|v| self.qp.wrap(v)).collect::<Result<Vec<_>>>()?;
        Ok(layout.partition_sums(&wrapped))
    }

    /// Rescaled control input for integer outputs.
    pub fn rescale(&self, ints: &[i64]) -> Vec<f64> {
        ints.iter().map(|&m| self.qp.rescale(m)).collect()
    }

    /// Stores `round(y(k)/L)` and `round(u(k)/L)`.
    pub fn push_io(&mut self, yq: &[i64], uq: &[i64]) {
        push_history(&mut self.z, yq, uq, self.n, self.l, self.h);
    }
}
