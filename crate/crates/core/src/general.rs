//! Element-wise encrypted controller: every gain and signal is its own ciphertext.
//!
//! The state is a container of the last `n` encrypted outputs and inputs. Each
//! step returns `ubar_i = Prod1(row i of Enc(round(Hc/s)), z(k))` and then shifts
//! the container, so no ciphertext is ever multiplied twice.

use std::sync::Arc;

use rand::Rng;

use crate::bgv::{BgvContext, Ciphertext, PreparedCiphertext, Scale, SecretKey};
use crate::control::{push_history, TransformedController};
use crate::error::{Error, Result};
use crate::quant::QuantParams;

/// Polynomials held by each encrypted quantity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct StorageCounts {
    pub u: usize,
    pub u_bar: usize,
    pub y: usize,
    pub z: usize,
    pub h: usize,
}

pub struct GeneralEncController {
    ctx: Arc<BgvContext>,
    gains: Vec<Vec<PreparedCiphertext>>,
    z: Vec<PreparedCiphertext>,
    n: usize,
    h: usize,
    l: usize,
}

impl GeneralEncController {
    /// Encrypts `round(Hc/s)` entry-wise and the initial container `round(z0/L)`.
    pub fn setup<R: Rng + ?Sized>(
        ctx: Arc<BgvContext>,
        sk: &SecretKey,
        tc: &TransformedController,
        qp: &QuantParams,
        rng: &mut R,
    ) -> Result<Self> {
        if tc.n_bar > ctx.params().r_bar {
            return Err(Error::TooManyTerms { terms: tc.n_bar, max: ctx.params().r_bar });
        }
        let hq = qp.gains(&tc.hcal)?;
        let mut gains = Vec::with_capacity(tc.h);
        for i in 0..tc.h {
            let row = (0..tc.n_bar)
                .map(|j| ctx.prepare(&ctx.encrypt_scalar(sk, hq[(i, j)], Scale::GAIN, rng)?))
                .collect::<Result<Vec<_>>>()?;
            gains.push(row);
        }
        let z = qp
            .signals(tc.z0.as_slice())?
            .into_iter()
            .map(|v| ctx.prepare(&ctx.encrypt_scalar(sk, v, Scale::SIGNAL, rng)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ctx, gains, z, n: tc.n, h: tc.h, l: tc.l })
    }

    pub fn context(&self) -> &Arc<BgvContext> {
        &self.ctx
    }

    /// `ubar(k)`: `h` length-3 ciphertexts at scale `1/(Ls)`.
    pub fn output(&self) -> Result<Vec<Ciphertext>> {
        let z: Vec<&PreparedCiphertext> = self.z.iter().collect();
        self.gains
            .iter()
            .map(|row| {
                let a: Vec<&PreparedCiphertext> = row.iter().collect();
                self.ctx.linear_combination(&a, &z)
            })
            .collect()
    }

    /// Shifts the fresh `y(k)` and re-encrypted `u(k)` into the container.
    pub fn push_io(&mut self, y: &[Ciphertext], u: &[Ciphertext]) -> Result<()> {
        if y.len() != self.l || u.len() != self.h {
            return Err(Error::DimMismatch(format!(
                "expected {} outputs and {} inputs, got {} and {}",
                self.l,
                self.h,
                y.len(),
                u.len()
            )));
        }
        for c in y.iter().chain(u) {
            if c.scale() != Scale::SIGNAL {
                return Err(Error::ScaleMismatch);
            }
        }
        let y = y.iter().map(|c| self.ctx.prepare(c)).collect::<Result<Vec<_>>>()?;
        let u = u.iter().map(|c| self.ctx.prepare(c)).collect::<Result<Vec<_>>>()?;
        push_history(&mut self.z, &y, &u, self.n, self.l, self.h);
        Ok(())
    }

    /// Storage in polynomials: fresh ciphertexts hold two polynomials, products three.
    pub fn storage(&self) -> StorageCounts {
        let n_bar = self.n * (self.h + self.l);
        StorageCounts { u: 2 * self.h, u_bar: 3 * self.h, y: 2 * self.l, z: 2 * self.z.len(), h: 2 * self.h * n_bar }
    }
}

/// Sensor side: `Enc_l(round(y/L))`, one constant polynomial per component.
pub fn sensor_encrypt<R: Rng + ?Sized>(
    ctx: &BgvContext,
    sk: &SecretKey,
    qp: &QuantParams,
    y: &[f64],
    rng: &mut R,
) -> Result<(Vec<i64>, Vec<Ciphertext>)> {
    let yq = qp.signals(y)?;
    let cts = yq.iter().map(|&v| ctx.encrypt_scalar(sk, v, Scale::SIGNAL, rng)).collect::<Result<_>>()?;
    Ok((yq, cts))
}

/// What the actuator produces in one step.
#[derive(Clone, Debug)]
pub struct ActuatorOutput {
    /// Decrypted integers before rescaling.
    pub ints: Vec<i64>,
    /// Plant input `u(k)`.
    pub u: Vec<f64>,
    /// `round(u(k)/L)`.
    pub uq: Vec<i64>,
    pub u_enc: Vec<Ciphertext>,
}

/// Actuator side: `u = Dec(ubar) L s`, then re-quantize and re-encrypt for feedback.
pub fn actuator_step<R: Rng + ?Sized>(
    ctx: &BgvContext,
    sk: &SecretKey,
    qp: &QuantParams,
    u_bar: &[Ciphertext],
    rng: &mut R,
) -> Result<ActuatorOutput> {
    let mut ints = Vec::with_capacity(u_bar.len());
    for c in u_bar {
        if c.scale() != Scale::OUTPUT {
            return Err(Error::ScaleMismatch);
        }
        ints.push(ctx.decrypt_scalar(sk, c)?);
    }
    let u: Vec<f64> = ints.iter().map(|&m| qp.rescale(m)).collect();
    let uq = qp.signals(&u)?;
    let u_enc = uq.iter().map(|&v| ctx.encrypt_scalar(sk, v, Scale::SIGNAL, rng)).collect::<Result<_>>()?;
    Ok(ActuatorOutput { ints, u, uq, u_enc })
}
