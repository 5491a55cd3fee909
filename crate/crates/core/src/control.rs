//! Input/output re-realization of a linear controller.
//!
//! A controller `x+ = F x + G y, u = H x` is rewritten as `z+ = Fc z + Gc y + Rc u`,
//! `u = Hc z`, where `z(k) = [y(k-1); ...; y(k-n); u(k-1); ...; u(k-n)]` stores the
//! last `n` inputs and outputs and `Fc, Gc, Rc` are 0/1 shift matrices. A deadbeat
//! output injection `R` (so that `F - R H` is nilpotent) gives `x(k) = M z(k)` and
//! `Hc = H M`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hcat, krylov, mat_pow, norm_inf, rank, vec_norm_inf, Mat, Vector};
use crate::rng::{stream_rng, Stream};

/// `x(k+1) = F x(k) + G y(k)`, `u(k) = H x(k)`, `x(0) = x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerRealization {
    pub f: Mat,
    pub g: Mat,
    pub h: Mat,
    pub x0: Vector,
}

impl ControllerRealization {
    pub fn new(f: Mat, g: Mat, h: Mat, x0: Vector) -> Result<Self> {
        let n = f.nrows();
        let dim = |what: &str| Err(Error::DimMismatch(what.into()));
        if n == 0 || f.ncols() != n {
            return dim("F must be square and non-empty");
        }
        if g.nrows() != n || g.ncols() == 0 {
            return dim("G must have n rows");
        }
        if h.ncols() != n || h.nrows() == 0 {
            return dim("H must have n columns");
        }
        if x0.len() != n {
            return dim("x0 must have length n");
        }
        Ok(Self { f, g, h, x0 })
    }

    /// Observer-based controller `F = A - Lc C + B Kc`, `G = Lc`, `H = Kc`.
    pub fn observer_based(a: &Mat, b: &Mat, c: &Mat, lc: &Mat, kc: &Mat, x0: Vector) -> Result<Self> {
        if a.nrows() != a.ncols() || b.nrows() != a.nrows() || c.ncols() != a.nrows() {
            return Err(Error::DimMismatch("plant matrices".into()));
        }
        if lc.nrows() != a.nrows() || lc.ncols() != c.nrows() || kc.nrows() != b.ncols() || kc.ncols() != a.nrows() {
            return Err(Error::DimMismatch("observer gains".into()));
        }
        Self::new(a - lc * c + b * kc, lc.clone(), kc.clone(), x0)
    }

    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    /// Number of controller outputs (plant inputs).
    pub fn h_dim(&self) -> usize {
        self.h.nrows()
    }

    /// Number of controller inputs (plant outputs).
    pub fn l_dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn is_controllable(&self) -> bool {
        rank(&krylov(&self.f, &self.g, self.n())) == self.n()
    }

    pub fn is_observable(&self) -> bool {
        let n = self.n();
        let obs = krylov(&self.f.transpose(), &self.h.transpose(), n);
        rank(&obs) == n
    }
}

/// The 0/1 shift matrices acting on the input/output container.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuralMatrices {
    pub fcal: DMatrix<i64>,
    pub gcal: DMatrix<i64>,
    pub rcal: DMatrix<i64>,
}

#[derive(Clone, Debug)]
pub struct TransformedController {
    pub n: usize,
    pub h: usize,
    pub l: usize,
    /// `n (h + l)`.
    pub n_bar: usize,
    pub m: Mat,
    pub z0: Vector,
    /// `H M`, one row per controller output.
    pub hcal: Mat,
    pub r: Mat,
    pub structural: StructuralMatrices,
    /// `||(F - R H)^n||` after placement.
    pub nilpotency_residual: f64,
}

/// Summary numbers, handy for reports.
#[derive(Clone, Debug, Serialize)]
pub struct TransformSummary {
    pub n: usize,
    pub h: usize,
    pub l: usize,
    pub n_bar: usize,
    pub hcal_norm: f64,
    pub m_norm: f64,
    pub z0_norm: f64,
    pub nilpotency_residual: f64,
    pub hcal: Vec<Vec<f64>>,
    pub z0: Vec<f64>,
}

impl TransformedController {
    pub fn summary(&self) -> TransformSummary {
        TransformSummary {
            n: self.n,
            h: self.h,
            l: self.l,
            n_bar: self.n_bar,
            hcal_norm: norm_inf(&self.hcal),
            m_norm: norm_inf(&self.m),
            z0_norm: vec_norm_inf(self.z0.as_slice()),
            nilpotency_residual: self.nilpotency_residual,
            hcal: self.hcal.row_iter().map(|r| r.iter().copied().collect()).collect(),
            z0: self.z0.iter().copied().collect(),
        }
    }

    /// One step of the real-valued re-realization: returns `u(k) = Hc z(k)`.
    pub fn output(&self, z: &Vector) -> Vector {
        &self.hcal * z
    }

    /// `z(k+1)` from `z(k)`, `y(k)`, `u(k)`.
    pub fn advance(&self, z: &Vector, y: &[f64], u: &[f64]) -> Vector {
        let mut v: Vec<f64> = z.iter().copied().collect();
        push_history(&mut v, y, u, self.n, self.l, self.h);
        Vector::from_vec(v)
    }
}

/// Container update `z <- Fc z + Gc y + Rc u` as an in-place shift:
/// `y` and `u` enter at the top of their blocks and the oldest entries drop out.
pub fn push_history<T: Clone>(z: &mut [T], y: &[T], u: &[T], n: usize, l: usize, h: usize) {
    assert_eq!(z.len(), n * (l + h), "container length");
    assert!(y.len() == l && u.len() == h, "signal lengths");
    let (ys, us) = z.split_at_mut(n * l);
    ys.rotate_right(l);
    ys[..l].clone_from_slice(y);
    us.rotate_right(h);
    us[..h].clone_from_slice(u);
}

fn nilpotency_residual(f: &Mat, r: &Mat, h: &Mat) -> (f64, f64) {
    let n = f.nrows();
    let rh = r * h;
    let fbar = f - &rh;
    let residual = norm_inf(&mat_pow(&fbar, n));
    let scale = (norm_inf(f) + norm_inf(&rh)).powi(n as i32);
    (residual, scale)
}

const NILPOTENCY_TOL: f64 = 1e-8;
const CANDIDATE_DIRECTIONS: usize = 256;
const DIRECTION_SEED: u64 = 0x5eed_dead_beef;

/// Single-output Ackermann placement on `(F, w^T H)`: returns `r` with `F - r w^T H` nilpotent.
fn ackermann(f: &Mat, c: &Mat) -> Option<Vector> {
    let n = f.nrows();
    let obs = krylov(&f.transpose(), &c.transpose(), n).transpose();
    let sv = obs.clone().singular_values();
    if sv.min() <= 1e-10 * sv.max() {
        return None;
    }
    let mut en = Vector::zeros(n);
    en[n - 1] = 1.0;
    let col = obs.lu().solve(&en)?;
    Some(mat_pow(f, n) * col)
}

/// Every deadbeat gain found from a fixed, seeded family of output directions.
///
/// For each direction `w`, the pair `(F, w^T H)` is made deadbeat by Ackermann's
/// formula and `R = r w^T`. When `F` is not cyclic no single direction works; a
/// seeded pre-injection `R0` is applied first and folded into `R`.
pub fn deadbeat_candidates(f: &Mat, h: &Mat) -> Result<Vec<Mat>> {
    let n = f.nrows();
    let probe = ControllerRealization {
        f: f.clone(),
        g: Mat::zeros(n, 1),
        h: h.clone(),
        x0: Vector::zeros(n),
    };
    if !probe.is_observable() {
        return Err(Error::NotObservable);
    }
    let hd = h.nrows();
    let mut rng = stream_rng(DIRECTION_SEED, Stream::Setup);
    let mut directions: Vec<Vector> = (0..hd).map(|i| Vector::from_fn(hd, |j, _| (i == j) as u8 as f64)).collect();
    if hd > 1 {
        for _ in 0..CANDIDATE_DIRECTIONS {
            let w = Vector::from_fn(hd, |_, _| rng.sample::<f64, _>(StandardNormal));
            directions.push(&w / w.norm());
        }
    }
    let scale = norm_inf(f).max(1.0) / norm_inf(h).max(f64::MIN_POSITIVE);
    for attempt in 0..8 {
        let r0 = if attempt == 0 {
            Mat::zeros(n, hd)
        } else {
            Mat::from_fn(n, hd, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
        };
        let f0 = f - &r0 * h;
        let mut out = Vec::new();
        for w in &directions {
            let c = Mat::from_row_slice(1, n, (w.transpose() * h).as_slice());
            let Some(r) = ackermann(&f0, &c) else { continue };
            let gain = &r0 + r * w.transpose();
            let (res, sc) = nilpotency_residual(f, &gain, h);
            if res <= NILPOTENCY_TOL * sc {
                out.push(gain);
            }
        }
        if !out.is_empty() {
            return Ok(out);
        }
    }
    Err(Error::NotObservable)
}

/// A deadbeat output injection: the candidate with the smallest `||R||`.
pub fn deadbeat_gain(f: &Mat, h: &Mat) -> Result<Mat> {
    let mut cands = deadbeat_candidates(f, h)?;
    cands.sort_by(|a, b| norm_inf(a).total_cmp(&norm_inf(b)));
    Ok(cands.swap_remove(0))
}

/// `M = [G, Fb G, ..., Fb^(n-1) G | R, Fb R, ..., Fb^(n-1) R]` with `Fb = F - R H`.
pub fn build_m(f: &Mat, g: &Mat, h: &Mat, r: &Mat) -> Mat {
    let n = f.nrows();
    let fbar = f - r * h;
    hcat(&[krylov(&fbar, g, n), krylov(&fbar, r, n)])
}

/// Minimum-norm history `z0` that steers `x(-n) = 0` to `x(0) = x0`.
///
/// The virtual outputs `y(-n..-1)` solve the `n`-step reachability system in the
/// least-norm sense; the virtual inputs `u(-i) = H x(-i)` follow by simulation.
pub fn build_z0(f: &Mat, g: &Mat, h: &Mat, r: &Mat, x0: &Vector) -> Result<Vector> {
    let n = f.nrows();
    let l = g.ncols();
    let hd = h.nrows();
    let reach = krylov(f, g, n);
    if rank(&reach) != n {
        return Err(Error::NotControllable);
    }
    let pinv = reach.pseudo_inverse(1e-12).map_err(|e| Error::InvalidParams(e.to_string()))?;
    // stacked [y(-1); y(-2); ...; y(-n)]
    let ys = pinv * x0;
    let fbar = f - r * h;
    let mut x = Vector::zeros(n);
    let mut us = vec![Vector::zeros(hd); n];
    for i in (1..=n).rev() {
        let u = h * &x;
        let y = ys.rows((i - 1) * l, l).into_owned();
        x = &fbar * &x + g * y + r * &u;
        us[i - 1] = u;
    }
    let mut z0 = Vec::with_capacity(n * (l + hd));
    z0.extend(ys.iter());
    for u in &us {
        z0.extend(u.iter());
    }
    Ok(Vector::from_vec(z0))
}

/// Exact 0/1 block-shift matrices for the container update.
pub fn build_structural(n: usize, h: usize, l: usize) -> StructuralMatrices {
    let nb = n * (l + h);
    let mut fcal = DMatrix::<i64>::zeros(nb, nb);
    for i in 0..(n - 1) * l {
        fcal[(l + i, i)] = 1;
    }
    for i in 0..(n - 1) * h {
        fcal[(n * l + h + i, n * l + i)] = 1;
    }
    let mut gcal = DMatrix::<i64>::zeros(nb, l);
    for i in 0..l {
        gcal[(i, i)] = 1;
    }
    let mut rcal = DMatrix::<i64>::zeros(nb, h);
    for i in 0..h {
        rcal[(n * l + i, i)] = 1;
    }
    StructuralMatrices { fcal, gcal, rcal }
}

fn to_real(m: &DMatrix<i64>) -> Mat {
    m.map(|x| x as f64)
}

/// Full re-realization with all structural identities checked.
///
/// Among the deadbeat candidates, the one minimizing `||H M||` is kept: the
/// quantized gain `Hc / s` then needs the fewest plaintext bits.
pub fn transform(ctrl: &ControllerRealization) -> Result<TransformedController> {
    if !ctrl.is_controllable() {
        return Err(Error::NotControllable);
    }
    let (n, h, l) = (ctrl.n(), ctrl.h_dim(), ctrl.l_dim());
    let candidates = deadbeat_candidates(&ctrl.f, &ctrl.h)?;
    let (r, m) = candidates
        .into_iter()
        .map(|r| {
            let m = build_m(&ctrl.f, &ctrl.g, &ctrl.h, &r);
            (r, m)
        })
        .min_by(|(_, a), (_, b)| norm_inf(&(&ctrl.h * a)).total_cmp(&norm_inf(&(&ctrl.h * b))))
        .expect("candidates are non-empty");
    let hcal = &ctrl.h * &m;
    let z0 = build_z0(&ctrl.f, &ctrl.g, &ctrl.h, &r, &ctrl.x0)?;
    let structural = build_structural(n, h, l);
    let (residual, scale) = nilpotency_residual(&ctrl.f, &r, &ctrl.h);

    let fm = &ctrl.f * &m;
    let lhs = &m * (to_real(&structural.fcal) + to_real(&structural.rcal) * &hcal);
    let tol = 1e-7 * (1.0 + norm_inf(&fm));
    let check = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("re-realization identity failed: {what}")))
        }
    };
    check(norm_inf(&(lhs - &fm)) <= tol, "M (Fc + Rc Hc) = F M")?;
    check(norm_inf(&(&m * to_real(&structural.gcal) - &ctrl.g)) <= 1e-9 * (1.0 + norm_inf(&ctrl.g)), "M Gc = G")?;
    let x0_err = vec_norm_inf((&m * &z0 - &ctrl.x0).as_slice());
    check(x0_err <= 1e-8 * (1.0 + vec_norm_inf(ctrl.x0.as_slice())), "M z0 = x0")?;
    debug_assert!(residual <= NILPOTENCY_TOL * scale);

    Ok(TransformedController {
        n,
        h,
        l,
        n_bar: n * (h + l),
        m,
        z0,
        hcal,
        r,
        structural,
        nilpotency_residual: residual,
    })
}
