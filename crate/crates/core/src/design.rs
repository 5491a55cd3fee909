//! Choosing `L`, `s` and `N` from the closed loop.
//!
//! The closed loop of the plant and the perturbed controller is
//! `x(k+1) = Acl x(k) + Bcl e(k)`, `[y; u] = Ccl x(k) + Dcl e(k)`. A decay
//! certificate `||Acl^k|| <= alpha gamma^k` turns quantization errors into the
//! performance bound `eps(L, s)` and the plaintext-size conditions on `N`.
//! All norms are infinity norms.

use serde::Serialize;

use crate::control::{ControllerRealization, TransformedController};
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, spectral_radius, vec_norm_inf, Mat, Vector};
use crate::packed::split_blocks;
use crate::ring::is_prime;
use crate::sim::PlantModel;

/// Multiple of the certification index over which the certificate is re-checked.
pub const CERT_VERIFY_FACTOR: usize = 10;
const CERT_MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct ClosedLoopModel {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub x0: Vector,
}

impl ClosedLoopModel {
    pub fn new(plant: &PlantModel, ctrl: &ControllerRealization) -> Result<Self> {
        let (np, n, h, l) = (plant.a.nrows(), ctrl.n(), ctrl.h_dim(), ctrl.l_dim());
        if plant.b.ncols() != h || plant.c.nrows() != l {
            return Err(Error::DimMismatch(format!(
                "plant has {} inputs and {} outputs, controller expects {h} and {l}",
                plant.b.ncols(),
                plant.c.nrows()
            )));
        }
        let mut a = Mat::zeros(np + n, np + n);
        a.view_mut((0, 0), (np, np)).copy_from(&plant.a);
        a.view_mut((0, np), (np, n)).copy_from(&(&plant.b * &ctrl.h));
        a.view_mut((np, 0), (n, np)).copy_from(&(&ctrl.g * &plant.c));
        a.view_mut((np, np), (n, n)).copy_from(&ctrl.f);
        let mut b = Mat::zeros(np + n, h + n);
        b.view_mut((0, 0), (np, h)).copy_from(&plant.b);
        b.view_mut((np, h), (n, n)).fill_with_identity();
        let mut c = Mat::zeros(l + h, np + n);
        c.view_mut((0, 0), (l, np)).copy_from(&plant.c);
        c.view_mut((l, np), (h, n)).copy_from(&ctrl.h);
        let mut d = Mat::zeros(l + h, h + n);
        d.view_mut((l, 0), (h, h)).fill_with_identity();
        let x0 = Vector::from_iterator(np + n, plant.x0.iter().chain(ctrl.x0.iter()).copied());
        Ok(Self { a, b, c, d, x0 })
    }
}

/// `||Acl^k|| <= alpha gamma^k` for every `k` up to `verified_to`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub rho: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// First `k >= 1` with `||Acl^k|| <= gamma^k`.
    pub k_cert: usize,
    pub verified_to: usize,
}

/// `gamma = (rho + 1)/2`; `alpha` is the largest `||A^k|| / gamma^k` seen up to
/// `CERT_VERIFY_FACTOR * K`.
pub fn decay_certificate(a: &Mat) -> Result<DecayCertificate> {
    let rho = spectral_radius(a);
    if !(rho < 1.0) {
        return Err(Error::Unstable(rho));
    }
    let gamma = (rho + 1.0) / 2.0;
    let mut pow = Mat::identity(a.nrows(), a.ncols());
    let mut ratios = vec![1.0f64];
    let mut k_cert = None;
    let mut k = 0;
    while k < CERT_MAX_STEPS {
        k += 1;
        pow = &pow * a;
        let ratio = norm_inf(&pow) / gamma.powi(k as i32);
        if !ratio.is_finite() {
            return Err(Error::Unstable(rho));
        }
        ratios.push(ratio);
        match k_cert {
            None if ratio <= 1.0 => k_cert = Some(k),
            Some(kc) if k >= CERT_VERIFY_FACTOR * kc => break,
            _ => {}
        }
    }
    let k_cert = k_cert.ok_or(Error::Unstable(rho))?;
    let alpha = ratios.iter().copied().fold(1.0, f64::max);
    Ok(DecayCertificate { rho, alpha, gamma, k_cert, verified_to: k })
}

/// Constants of the performance bound for one controller and initial condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub certificate: DecayCertificate,
    pub beta: f64,
    /// `alpha ||Ccl|| ||x0||`.
    pub s_bound: f64,
    pub eps: [f64; 4],
    pub n_bar: usize,
    pub m_norm: f64,
    pub c_norm: f64,
    pub b_norm: f64,
    pub d_norm: f64,
    pub x0_norm: f64,
    pub z0_norm: f64,
}

impl ErrorBudget {
    pub fn new(model: &ClosedLoopModel, tc: &TransformedController) -> Result<Self> {
        let certificate = decay_certificate(&model.a)?;
        let (alpha, gamma) = (certificate.alpha, certificate.gamma);
        let c_norm = norm_inf(&model.c);
        let b_norm = norm_inf(&model.b);
        let beta = 1.0 + alpha * c_norm * b_norm / (1.0 - gamma);
        let x0_norm = vec_norm_inf(model.x0.as_slice());
        let z0_norm = vec_norm_inf(tc.z0.as_slice());
        let m_norm = norm_inf(&tc.m);
        Ok(Self {
            certificate,
            beta,
            s_bound: bound_s(model, alpha),
            eps: epsilon_vector(alpha, beta, c_norm, m_norm, tc.n_bar, x0_norm, z0_norm),
            n_bar: tc.n_bar,
            m_norm,
            c_norm,
            b_norm,
            d_norm: norm_inf(&model.d),
            x0_norm,
            z0_norm,
        })
    }

    pub fn epsilon(&self, l: f64, s: f64) -> Result<f64> {
        epsilon_of(l, s, &self.eps)
    }
}

/// `eps = 1/2 [n beta; ||M||(alpha ||C|| + beta); n beta / 2; n beta (alpha ||C|| ||x0|| + ||z0||)]`.
pub fn epsilon_vector(
    alpha: f64,
    beta: f64,
    c_norm: f64,
    m_norm: f64,
    n_bar: usize,
    x0_norm: f64,
    z0_norm: f64,
) -> [f64; 4] {
    let nb = n_bar as f64;
    [
        0.5 * nb * beta,
        0.5 * m_norm * (alpha * c_norm + beta),
        0.25 * nb * beta,
        0.5 * nb * beta * (alpha * c_norm * x0_norm + z0_norm),
    ]
}

/// `(eps1 L + eps2 L s + eps3 s) / (1 - eps0 s)`.
pub fn epsilon_of(l: f64, s: f64, eps: &[f64; 4]) -> Result<f64> {
    let den = 1.0 - eps[0] * s;
    if !(den > 0.0) {
        return Err(Error::SInvalid { inv_s: 1.0 / s, eps0: eps[0] });
    }
    Ok((eps[1] * l + eps[2] * l * s + eps[3] * s) / den)
}

/// `S = alpha ||Ccl|| ||x0||`, a bound on the unperturbed `[y; u]`.
pub fn bound_s(model: &ClosedLoopModel, alpha: f64) -> f64 {
    alpha * norm_inf(&model.c) * vec_norm_inf(model.x0.as_slice())
}

/// Left-hand side of the element-wise plaintext-size condition (must stay below `N/2`).
pub fn general_range_lhs(l: f64, s: f64, eps: &[f64; 4], s_bound: f64, z0_norm: f64) -> Result<f64> {
    let e = epsilon_of(l, s, eps)?;
    Ok(((e + s_bound) / s).max(z0_norm) / l + 0.5)
}

/// `||vec(sum_i Hc_i^T)||` over the `2n` blocks, each padded to `h x max(h, l)`.
pub fn packed_block_sum_norm(tc: &TransformedController) -> f64 {
    let w = tc.h.max(tc.l);
    let mut sum = Mat::zeros(tc.h, w);
    for b in split_blocks(&tc.hcal, tc.n, tc.h, tc.l) {
        let cols = b.ncols();
        let mut view = sum.view_mut((0, 0), (tc.h, cols));
        view += &b;
    }
    sum.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Left-hand side of the packed plaintext-size condition (must stay below `N/2`).
pub fn packed_range_lhs(
    l: f64,
    s: f64,
    eps: &[f64; 4],
    s_bound: f64,
    z0_norm: f64,
    block_sum_norm: f64,
    n: usize,
) -> Result<f64> {
    let e = epsilon_of(l, s, eps)?;
    Ok(((e + s_bound).max(z0_norm) / l + 0.5) * (block_sum_norm / s + n as f64))
}

/// Smallest prime `N = 1 (mod 2p)` with `lhs < N/2`.
pub fn next_ntt_prime_above(lhs: f64, p: usize) -> Result<u128> {
    let step = 2 * p as u128;
    if !(lhs.is_finite() && lhs * 2.0 < 2f64.powi(100)) {
        return Err(Error::InvalidParams(format!("plaintext bound {lhs} is out of reach")));
    }
    let floor = (2.0 * lhs).floor().max(0.0) as u128;
    let mut cand = (floor / step) * step + 1;
    while cand <= floor {
        cand += step;
    }
    while !is_prime(cand) {
        cand += step;
    }
    Ok(cand)
}

pub fn min_modulus_general(l: f64, s: f64, budget: &ErrorBudget, p: usize) -> Result<u128> {
    next_ntt_prime_above(general_range_lhs(l, s, &budget.eps, budget.s_bound, budget.z0_norm)?, p)
}

pub fn min_modulus_packed(l: f64, s: f64, budget: &ErrorBudget, tc: &TransformedController, p: usize) -> Result<u128> {
    let lhs = packed_range_lhs(l, s, &budget.eps, budget.s_bound, budget.z0_norm, packed_block_sum_norm(tc), tc.n)?;
    next_ntt_prime_above(lhs, p)
}

/// Proof-internal envelopes, reported for diagnostics only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Envelopes {
    pub delta_small: f64,
    pub delta: f64,
    pub u_delta: f64,
    pub u_hat_delta: f64,
}

/// `Delta`, `delta`, `U(Delta)` and `U^(Delta)`; `None` unless `1/s > n beta / 2`.
pub fn envelopes(l: f64, s: f64, budget: &ErrorBudget) -> Option<Envelopes> {
    let nb = budget.n_bar as f64;
    let alpha = budget.certificate.alpha;
    let ac = alpha * budget.c_norm;
    let den = 1.0 - s * nb * budget.beta / 2.0;
    if !(den > 0.0) {
        return None;
    }
    let delta_small = s * nb / 2.0 * (ac * budget.x0_norm + l / 2.0 * ac * budget.m_norm + l / 2.0) / den;
    let delta = (l / 2.0 * budget.m_norm).max(s * nb / 2.0 * (budget.z0_norm + l / 2.0)).max(delta_small);
    Some(Envelopes {
        delta_small,
        delta,
        u_delta: ac * (budget.x0_norm + l / 2.0 * budget.m_norm) + budget.beta * delta,
        u_hat_delta: l / 2.0 * ac * budget.m_norm + budget.beta * delta,
    })
}

/// Verdict for one `(L, s)` against a given `N` and slot count `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignReport {
    pub inv_l: f64,
    pub inv_s: f64,
    pub n_given: u128,
    pub p: usize,
    pub budget: ErrorBudget,
    pub epsilon: Option<f64>,
    pub envelopes: Option<Envelopes>,
    pub block_sum_norm: f64,
    pub general_lhs: Option<f64>,
    pub packed_lhs: Option<f64>,
    pub n_general: Option<u128>,
    pub n_packed: Option<u128>,
    pub general_ok: bool,
    pub packed_ok: bool,
    pub feasible: bool,
    pub reason: Option<String>,
}

pub fn design(
    plant: &PlantModel,
    ctrl: &ControllerRealization,
    tc: &TransformedController,
    l: f64,
    s: f64,
    n_given: u128,
    p: usize,
) -> Result<DesignReport> {
    let model = ClosedLoopModel::new(plant, ctrl)?;
    let budget = ErrorBudget::new(&model, tc)?;
    let block_sum_norm = packed_block_sum_norm(tc);
    let half = n_given as f64 / 2.0;
    let mut reason = None;
    let epsilon = match budget.epsilon(l, s) {
        Ok(e) => Some(e),
        Err(e) => {
            reason = Some(e.to_string());
            None
        }
    };
    let general_lhs = general_range_lhs(l, s, &budget.eps, budget.s_bound, budget.z0_norm).ok();
    let packed_lhs =
        packed_range_lhs(l, s, &budget.eps, budget.s_bound, budget.z0_norm, block_sum_norm, tc.n).ok();
    let general_ok = general_lhs.is_some_and(|v| v < half);
    let packed_ok = packed_lhs.is_some_and(|v| v < half);
    let n_general = general_lhs.and_then(|v| next_ntt_prime_above(v, p).ok());
    let n_packed = packed_lhs.and_then(|v| next_ntt_prime_above(v, p).ok());
    if epsilon.is_some() && !(general_ok && packed_ok) {
        reason = Some(format!("N = {n_given} is below the required plaintext size"));
    }
    Ok(DesignReport {
        inv_l: 1.0 / l,
        inv_s: 1.0 / s,
        n_given,
        p,
        envelopes: envelopes(l, s, &budget),
        budget,
        epsilon,
        block_sum_norm,
        general_lhs,
        packed_lhs,
        n_general,
        n_packed,
        general_ok,
        packed_ok,
        feasible: general_ok && packed_ok,
        reason,
    })
}
