//! Closed-loop simulation of a plant against the nominal, quantized and encrypted controllers.
//!
//! The plant runs in double precision. Every encrypted ciphertext that crosses
//! the network is serialized and parsed back, so the communication counts are
//! measured on real wire bytes.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bgv::{BgvContext, BgvParams, Ciphertext, OpCounts, SecretKey};
use crate::control::{transform, ControllerRealization, TransformedController};
use crate::design::ClosedLoopModel;
use crate::error::{Error, Result};
use crate::general::{self, GeneralEncController, StorageCounts};
use crate::linalg::{spectral_radius, vec_norm_inf, Mat, Vector};
use crate::oracle::QuantizedController;
use crate::packed::{self, PackedEncController, PackedLayout};
use crate::quant::QuantParams;
use crate::rng::{stream_rng, Stream};

/// Plant states beyond this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct PlantModel {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub x0: Vector,
}

impl PlantModel {
    pub fn new(a: Mat, b: Mat, c: Mat, x0: Vector) -> Result<Self> {
        let np = a.nrows();
        if a.ncols() != np || b.nrows() != np || c.ncols() != np || x0.len() != np {
            return Err(Error::DimMismatch(format!(
                "plant A {}x{}, B {}x{}, C {}x{}, x0 {}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                x0.len()
            )));
        }
        Ok(Self { a, b, c, x0 })
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    /// The original real-valued controller.
    Nominal,
    /// The quantized controller on plaintext integers.
    Oracle,
    /// Element-wise encrypted controller.
    General,
    /// Packed encrypted controller.
    Packed,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] =
        [ControllerKind::Nominal, ControllerKind::Oracle, ControllerKind::General, ControllerKind::Packed];
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerKind::Nominal => "nominal",
            ControllerKind::Oracle => "oracle",
            ControllerKind::General => "general",
            ControllerKind::Packed => "packed",
        })
    }
}

impl FromStr for ControllerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown controller kind {s:?}")))
    }
}

/// Everything a closed-loop run needs apart from the kind, horizon and seed.
#[derive(Clone, Debug)]
pub struct LoopSetup {
    pub plant: PlantModel,
    pub ctrl: ControllerRealization,
    pub tc: TransformedController,
    pub quant: QuantParams,
    pub bgv: BgvParams,
}

impl LoopSetup {
    pub fn new(plant: PlantModel, ctrl: ControllerRealization, quant: QuantParams, bgv: BgvParams) -> Result<Self> {
        if plant.inputs() != ctrl.h_dim() || plant.outputs() != ctrl.l_dim() {
            return Err(Error::DimMismatch(format!(
                "plant has {} inputs and {} outputs, controller {} and {}",
                plant.inputs(),
                plant.outputs(),
                ctrl.h_dim(),
                ctrl.l_dim()
            )));
        }
        if quant.n != bgv.n {
            return Err(Error::InvalidParams("quantizer and cryptosystem disagree on N".into()));
        }
        let tc = transform(&ctrl)?;
        Ok(Self { plant, ctrl, tc, quant, bgv })
    }

    pub fn packed_layout(&self) -> Result<PackedLayout> {
        PackedLayout::new(self.tc.n, self.tc.h, self.tc.l, self.bgv.p)
    }
}

/// Reference signals `u'(k)`, `y'(k)` and the plant state of the unencrypted loop.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NominalTrace {
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub xp: Vec<Vec<f64>>,
}

fn diverged(plant: &PlantModel, ctrl: &ControllerRealization) -> Error {
    let rho = ClosedLoopModel::new(plant, ctrl).map(|m| spectral_radius(&m.a)).unwrap_or(f64::INFINITY);
    Error::Unstable(rho)
}

/// Plant driven by the original controller.
pub fn run_nominal(plant: &PlantModel, ctrl: &ControllerRealization, t: usize) -> Result<NominalTrace> {
    let mut tr = NominalTrace::default();
    let mut xp = plant.x0.clone();
    let mut x = ctrl.x0.clone();
    for k in 0..t {
        let y = &plant.c * &xp;
        let u = &ctrl.h * &x;
        tr.u.push(u.iter().copied().collect());
        tr.y.push(y.iter().copied().collect());
        tr.xp.push(xp.iter().copied().collect());
        xp = &plant.a * &xp + &plant.b * &u;
        x = &ctrl.f * &x + &ctrl.g * &y;
        if !(vec_norm_inf(xp.as_slice()) < DIVERGENCE_LIMIT && vec_norm_inf(x.as_slice()) < DIVERGENCE_LIMIT) {
            return Err(diverged(plant, ctrl).at_step(k));
        }
    }
    Ok(tr)
}

/// One row of a trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub k: usize,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub u_ref: Vec<f64>,
    pub y_ref: Vec<f64>,
    pub xp: Vec<f64>,
    /// Integers the actuator rescales into `u(k)`; empty for the nominal kind.
    pub ints: Vec<i64>,
    pub err_inf: f64,
    pub counts: OpCounts,
    pub comm_ints: usize,
    pub wall_ns: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimTrace {
    pub kind: ControllerKind,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    /// Largest `|round(Hc/s) z(k)|` met by the plaintext quantized controller.
    pub max_output_int: Option<i128>,
    /// Largest packed slot value met by the plaintext quantized controller.
    pub max_slot_int: Option<i128>,
    pub storage: Option<StorageCounts>,
}

impl SimTrace {
    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.u.clone()).collect()
    }

    pub fn ints(&self) -> Vec<Vec<i64>> {
        self.steps.iter().map(|s| s.ints.clone()).collect()
    }

    pub fn mean_wall_ns(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.wall_ns as f64).sum::<f64>() / self.steps.len() as f64
    }

    pub fn total_counts(&self) -> OpCounts {
        self.steps.iter().fold(OpCounts::default(), |a, s| OpCounts {
            enc: a.enc + s.counts.enc,
            dec: a.dec + s.counts.dec,
            add: a.add + s.counts.add,
            mult: a.mult + s.counts.mult,
            poly_mult: a.poly_mult + s.counts.poly_mult,
        })
    }
}

struct StepOut {
    u: Vec<f64>,
    ints: Vec<i64>,
    comm_ints: usize,
}

trait LoopController {
    fn step(&mut self, y: &[f64]) -> Result<StepOut>;
}

struct Nominal<'a> {
    ctrl: &'a ControllerRealization,
    x: Vector,
}

impl LoopController for Nominal<'_> {
    fn step(&mut self, y: &[f64]) -> Result<StepOut> {
        let u = &self.ctrl.h * &self.x;
        self.x = &self.ctrl.f * &self.x + &self.ctrl.g * Vector::from_column_slice(y);
        Ok(StepOut { u: u.iter().copied().collect(), ints: Vec::new(), comm_ints: 0 })
    }
}

struct Oracle {
    guard: RangeGuard,
}

impl LoopController for Oracle {
    fn step(&mut self, y: &[f64]) -> Result<StepOut> {
        // slot statistics only; the plaintext controller itself wraps element-wise
        let exact = self.guard.q.output_ints();
        self.guard.max_out = exact.iter().fold(self.guard.max_out, |m, v| m.max(v.abs()));
        if let Some(lay) = &self.guard.layout {
            let slots = self.guard.q.packed_slots(lay);
            self.guard.max_slot = slots.iter().fold(self.guard.max_slot, |m, v| m.max(v.abs()));
        }
        let ints = self.guard.q.output_general()?;
        let u = self.guard.q.rescale(&ints);
        let qp = *self.guard.q.quant();
        let uq = qp.signals(&u)?;
        let yq = qp.signals(y)?;
        self.guard.push(&yq, &uq);
        Ok(StepOut { u, ints, comm_ints: 0 })
    }
}

/// Serializes and parses a ciphertext as it would cross the network.
fn transmit(ctx: &BgvContext, c: &Ciphertext) -> Result<(Ciphertext, usize)> {
    let bytes = c.to_bytes();
    let back = Ciphertext::from_bytes(&bytes, ctx.ciphertext_ring())?;
    let n = back.integer_count();
    Ok((back, n))
}

/// Plaintext copy of the quantized controller fed the same signals as the encrypted one.
///
/// Decryption alone cannot tell a wrapped value from a genuine one, so the
/// harness checks the range condition here before each encrypted step.
struct RangeGuard {
    q: QuantizedController,
    layout: Option<PackedLayout>,
    max_out: i128,
    max_slot: i128,
}

impl RangeGuard {
    fn new(setup: &LoopSetup, layout: Option<PackedLayout>) -> Result<Self> {
        Ok(Self { q: QuantizedController::new(&setup.tc, setup.quant)?, layout, max_out: 0, max_slot: 0 })
    }

    fn check(&mut self) -> Result<()> {
        let qp = *self.q.quant();
        let exact = self.q.output_ints();
        self.max_out = exact.iter().fold(self.max_out, |m, v| m.max(v.abs()));
        match &self.layout {
            Some(lay) => {
                let slots = self.q.packed_slots(lay);
                self.max_slot = slots.iter().fold(self.max_slot, |m, v| m.max(v.abs()));
                for v in slots {
                    qp.wrap(v)?;
                }
            }
            None => {
                for v in exact {
                    qp.wrap(v)?;
                }
            }
        }
        Ok(())
    }

    fn push(&mut self, yq: &[i64], uq: &[i64]) {
        self.q.push_io(yq, uq);
    }
}

struct Keys {
    sk: SecretKey,
    sensor: ChaCha20Rng,
    actuator: ChaCha20Rng,
}

struct General {
    ctl: GeneralEncController,
    keys: Keys,
    qp: QuantParams,
    guard: RangeGuard,
}

impl LoopController for General {
    fn step(&mut self, y: &[f64]) -> Result<StepOut> {
        self.guard.check()?;
        let ctx = self.ctl.context().clone();
        let mut comm = 0;
        let mut u_bar = Vec::new();
        for c in self.ctl.output()? {
            let (c, n) = transmit(&ctx, &c)?;
            comm += n;
            u_bar.push(c);
        }
        let act = general::actuator_step(&ctx, &self.keys.sk, &self.qp, &u_bar, &mut self.keys.actuator)?;
        let (yq, y_enc) = general::sensor_encrypt(&ctx, &self.keys.sk, &self.qp, y, &mut self.keys.sensor)?;
        self.guard.push(&yq, &act.uq);
        let mut ys = Vec::new();
        for c in &y_enc {
            let (c, n) = transmit(&ctx, c)?;
            comm += n;
            ys.push(c);
        }
        let mut us = Vec::new();
        for c in &act.u_enc {
            let (c, n) = transmit(&ctx, c)?;
            comm += n;
            us.push(c);
        }
        self.ctl.push_io(&ys, &us)?;
        Ok(StepOut { u: act.u, ints: act.ints, comm_ints: comm })
    }
}

struct Packed {
    ctl: PackedEncController,
    keys: Keys,
    qp: QuantParams,
    guard: RangeGuard,
}

impl LoopController for Packed {
    fn step(&mut self, y: &[f64]) -> Result<StepOut> {
        self.guard.check()?;
        let ctx = self.ctl.context().clone();
        let lay = self.ctl.layout();
        let (u_bar, n1) = transmit(&ctx, &self.ctl.output()?)?;
        let act = packed::actuator_step(&ctx, &self.keys.sk, &self.qp, &lay, &u_bar, &mut self.keys.actuator)?;
        let (yq, y_enc) = packed::sensor_encrypt(&ctx, &self.keys.sk, &self.qp, &lay, y, &mut self.keys.sensor)?;
        self.guard.push(&yq, &act.uq);
        let (y_enc, n2) = transmit(&ctx, &y_enc)?;
        let (u_enc, n3) = transmit(&ctx, &act.u_enc)?;
        self.ctl.push_io(&y_enc, &u_enc)?;
        Ok(StepOut { u: act.u, ints: act.ints, comm_ints: n1 + n2 + n3 })
    }
}

fn run_loop(
    setup: &LoopSetup,
    ctl: &mut dyn LoopController,
    ctx: Option<&BgvContext>,
    reference: &NominalTrace,
    t: usize,
) -> Result<Vec<StepRecord>> {
    let plant = &setup.plant;
    let mut xp = plant.x0.clone();
    let mut steps = Vec::with_capacity(t);
    for k in 0..t {
        let y: Vec<f64> = (&plant.c * &xp).iter().copied().collect();
        let before = ctx.map(|c| c.counts()).unwrap_or_default();
        let t0 = Instant::now();
        let out = ctl.step(&y).map_err(|e| e.at_step(k))?;
        let wall_ns = t0.elapsed().as_nanos() as u64;
        let counts = ctx.map(|c| c.counts() - before).unwrap_or_default();
        let err_inf = step_error(&out.u, &y, &reference.u[k], &reference.y[k]);
        let xp_now: Vec<f64> = xp.iter().copied().collect();
        xp = &plant.a * &xp + &plant.b * Vector::from_column_slice(&out.u);
        if !(vec_norm_inf(xp.as_slice()) < DIVERGENCE_LIMIT) {
            return Err(diverged(plant, &setup.ctrl).at_step(k));
        }
        steps.push(StepRecord {
            k,
            u: out.u,
            y,
            u_ref: reference.u[k].clone(),
            y_ref: reference.y[k].clone(),
            xp: xp_now,
            ints: out.ints,
            err_inf,
            counts,
            comm_ints: out.comm_ints,
            wall_ns,
        });
    }
    Ok(steps)
}

/// `||[u - u'; y - y']||`.
pub fn step_error(u: &[f64], y: &[f64], u_ref: &[f64], y_ref: &[f64]) -> f64 {
    u.iter().zip(u_ref).chain(y.iter().zip(y_ref)).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// The quantized controller on plaintext integers: the exact reference for both encrypted kinds.
pub fn run_quantized_oracle(setup: &LoopSetup, t: usize) -> Result<SimTrace> {
    let reference = run_nominal(&setup.plant, &setup.ctrl, t)?;
    let mut ctl = Oracle { guard: RangeGuard::new(setup, setup.packed_layout().ok())? };
    let steps = run_loop(setup, &mut ctl, None, &reference, t)?;
    let g = ctl.guard;
    Ok(SimTrace {
        kind: ControllerKind::Oracle,
        seed: 0,
        steps,
        max_output_int: Some(g.max_out),
        max_slot_int: g.layout.map(|_| g.max_slot),
        storage: None,
    })
}

/// Runs any kind; encrypted kinds create their own context.
pub fn run_encrypted(setup: &LoopSetup, kind: ControllerKind, t: usize, seed: u64) -> Result<SimTrace> {
    match kind {
        ControllerKind::General | ControllerKind::Packed => {
            let ctx = Arc::new(BgvContext::new(setup.bgv.clone())?);
            run_encrypted_with(setup, kind, &ctx, t, seed)
        }
        _ => run_encrypted_with_plain(setup, kind, t, seed),
    }
}

fn run_encrypted_with_plain(setup: &LoopSetup, kind: ControllerKind, t: usize, seed: u64) -> Result<SimTrace> {
    match kind {
        ControllerKind::Oracle => run_quantized_oracle(setup, t).map(|tr| SimTrace { seed, ..tr }),
        _ => {
            let reference = run_nominal(&setup.plant, &setup.ctrl, t)?;
            let mut ctl = Nominal { ctrl: &setup.ctrl, x: setup.ctrl.x0.clone() };
            let steps = run_loop(setup, &mut ctl, None, &reference, t)?;
            Ok(SimTrace { kind, seed, steps, max_output_int: None, max_slot_int: None, storage: None })
        }
    }
}

/// Runs any kind against an existing context (its counters are shared).
///
/// Keys come from the `KeyGen` stream of `seed`; controller setup, sensor and
/// actuator encryptions draw from their own streams so runs repeat exactly.
pub fn run_encrypted_with(
    setup: &LoopSetup,
    kind: ControllerKind,
    ctx: &Arc<BgvContext>,
    t: usize,
    seed: u64,
) -> Result<SimTrace> {
    if *ctx.params() != setup.bgv {
        return Err(Error::InvalidParams("context parameters differ from the run setup".into()));
    }
    let keys = || Keys {
        sk: ctx.keygen(seed),
        sensor: stream_rng(seed, Stream::Sensor),
        actuator: stream_rng(seed, Stream::Actuator),
    };
    let mut setup_rng = stream_rng(seed, Stream::Setup);
    let reference = run_nominal(&setup.plant, &setup.ctrl, t)?;
    let (steps, storage, guard) = match kind {
        ControllerKind::General => {
            let keys = keys();
            let ctl = GeneralEncController::setup(ctx.clone(), &keys.sk, &setup.tc, &setup.quant, &mut setup_rng)?;
            let storage = ctl.storage();
            let guard = RangeGuard::new(setup, None)?;
            let mut lc = General { ctl, keys, qp: setup.quant, guard };
            (run_loop(setup, &mut lc, Some(ctx), &reference, t)?, storage, lc.guard)
        }
        ControllerKind::Packed => {
            let keys = keys();
            let ctl = PackedEncController::setup(ctx.clone(), &keys.sk, &setup.tc, &setup.quant, &mut setup_rng)?;
            let storage = ctl.storage();
            let guard = RangeGuard::new(setup, Some(ctl.layout()))?;
            let mut lc = Packed { ctl, keys, qp: setup.quant, guard };
            (run_loop(setup, &mut lc, Some(ctx), &reference, t)?, storage, lc.guard)
        }
        _ => return run_encrypted_with_plain(setup, kind, t, seed),
    };
    Ok(SimTrace {
        kind,
        seed,
        steps,
        max_output_int: Some(guard.max_out),
        max_slot_int: guard.layout.map(|_| guard.max_slot),
        storage: Some(storage),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorMetrics {
    /// `||[u - u'; y - y']||` per step.
    pub per_step: Vec<f64>,
    pub max_err: f64,
    /// `max_k ||u(k) - u'(k)||`.
    pub max_u_err: f64,
}

pub fn error_metrics(trace: &SimTrace, reference: &NominalTrace) -> ErrorMetrics {
    let mut per_step = Vec::with_capacity(trace.steps.len());
    let mut max_u_err = 0.0f64;
    for (s, (u_ref, y_ref)) in trace.steps.iter().zip(reference.u.iter().zip(&reference.y)) {
        per_step.push(step_error(&s.u, &s.y, u_ref, y_ref));
        max_u_err = s.u.iter().zip(u_ref).fold(max_u_err, |m, (a, b)| m.max((a - b).abs()));
    }
    let max_err = per_step.iter().copied().fold(0.0, f64::max);
    ErrorMetrics { per_step, max_err, max_u_err }
}

/// `(Enc, Dec, add, Mult)` per step and polynomials held per quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepCostRow {
    pub enc: u64,
    pub dec: u64,
    pub add: u64,
    pub mult: u64,
    pub storage: StorageCounts,
}

impl StepCostRow {
    pub fn general(n: usize, h: usize, l: usize) -> Self {
        let (n64, h64, l64) = (n as u64, h as u64, l as u64);
        Self {
            enc: h64 + l64,
            dec: h64,
            add: h64 * (n64 * h64 + n64 * l64 - 1),
            mult: h64 * n64 * (h64 + l64),
            storage: StorageCounts { u: 2 * h, u_bar: 3 * h, y: 2 * l, z: 2 * n * (h + l), h: 2 * h * n * (h + l) },
        }
    }

    pub fn packed(n: usize) -> Self {
        let n64 = n as u64;
        Self {
            enc: 2,
            dec: 1,
            add: 2 * n64 - 1,
            mult: 2 * n64,
            storage: StorageCounts { u: 2, u_bar: 3, y: 2, z: 4 * n, h: 4 * n },
        }
    }

    pub fn counts(&self) -> OpCounts {
        OpCounts { enc: self.enc, dec: self.dec, add: self.add, mult: self.mult, poly_mult: 4 * self.mult }
    }
}

/// Integers exchanged per step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CommunicationRow {
    /// `y` and `u` up, `ubar` down: `2p + 2p + 3p`.
    pub packed: usize,
    /// The packed design with relinearization, which returns a 2-polynomial `ubar`.
    pub packed_relinearized: usize,
    /// Packed RLWE baseline with relinearization and rotations.
    pub rlwe_rotation_baseline: usize,
    /// Element-wise LWE baseline: `(2h + l)(p + 1)`.
    pub lwe_external_product_baseline: usize,
    /// Element-wise design on RLWE: `(2l + 2h + 3h) p`.
    pub general: usize,
}

/// Per-step multiplication workload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ComputationRow {
    /// Ring products in the packed loop: `2n` `Mult`s at four each.
    pub packed_poly_mults: u64,
    /// Ring products with relinearization added: `8n + 2d`.
    pub packed_relinearized_poly_mults: u64,
    /// Rotation-based baseline: `(n + h + l) d` key-switching terms.
    pub rlwe_rotation_terms: u64,
    /// External-product baseline: `n(n + h + l) d (p + 1)^2` scalar products.
    pub lwe_external_product_scalar_mults: u128,
    /// Ring products per relinearization or rotation: `2d`.
    pub key_switch_poly_mults: u64,
    /// Scalar products per external product: `d (p + 1)^2`.
    pub external_product_scalar_mults: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub n: usize,
    pub h: usize,
    pub l: usize,
    pub p: usize,
    pub q: String,
    pub nu: u128,
    /// `floor(log_nu q)`.
    pub d: u32,
    pub general: StepCostRow,
    pub packed: StepCostRow,
    pub communication: CommunicationRow,
    pub computation: ComputationRow,
    pub measured_general: Option<OpCounts>,
    pub measured_packed: Option<OpCounts>,
    pub measured_general_storage: Option<StorageCounts>,
    pub measured_packed_storage: Option<StorageCounts>,
    pub measured_packed_comm: Option<usize>,
    pub measured_general_comm: Option<usize>,
    pub asymptotics: Vec<String>,
}

/// `floor(log_nu q)` in exact integer arithmetic.
pub fn decomposition_length(q: u128, nu: u128) -> u32 {
    assert!(nu >= 2, "decomposition base must be at least 2");
    let mut d = 0;
    let mut v = q;
    while v >= nu {
        v /= nu;
        d += 1;
    }
    d
}

pub fn cost_report(n: usize, h: usize, l: usize, p: usize, q: u128, nu: u128) -> CostReport {
    let d = decomposition_length(q, nu);
    let (n64, d64) = (n as u64, d as u64);
    let p1 = p as u128 + 1;
    CostReport {
        n,
        h,
        l,
        p,
        q: q.to_string(),
        nu,
        d,
        general: StepCostRow::general(n, h, l),
        packed: StepCostRow::packed(n),
        communication: CommunicationRow {
            packed: 7 * p,
            packed_relinearized: 6 * p,
            rlwe_rotation_baseline: 6 * p,
            lwe_external_product_baseline: (2 * h + l) * (p + 1),
            general: (2 * l + 5 * h) * p,
        },
        computation: ComputationRow {
            packed_poly_mults: 8 * n64,
            packed_relinearized_poly_mults: 8 * n64 + 2 * d64,
            rlwe_rotation_terms: (n + h + l) as u64 * d64,
            lwe_external_product_scalar_mults: (n * (n + h + l)) as u128 * d as u128 * p1 * p1,
            key_switch_poly_mults: 2 * d64,
            external_product_scalar_mults: d as u128 * p1 * p1,
        },
        measured_general: None,
        measured_packed: None,
        measured_general_storage: None,
        measured_packed_storage: None,
        measured_packed_comm: None,
        measured_general_comm: None,
        asymptotics: vec![
            "packed: O(n p log p) scalar multiplications per step".into(),
            "packed with relinearization: O((n + d) p log p)".into(),
            "rotation baseline: O((n + h + l) d p log p)".into(),
            "external-product baseline: O(n (n + h + l) d p^2)".into(),
        ],
    }
}

impl CostReport {
    /// Fills the measured fields from per-step records of encrypted runs.
    pub fn with_measurements(mut self, general: Option<&SimTrace>, packed: Option<&SimTrace>) -> Self {
        if let Some(tr) = general.filter(|t| !t.steps.is_empty()) {
            self.measured_general = Some(tr.steps[0].counts);
            self.measured_general_storage = tr.storage;
            self.measured_general_comm = Some(tr.steps[0].comm_ints);
        }
        if let Some(tr) = packed.filter(|t| !t.steps.is_empty()) {
            self.measured_packed = Some(tr.steps[0].counts);
            self.measured_packed_storage = tr.storage;
            self.measured_packed_comm = Some(tr.steps[0].comm_ints);
        }
        self
    }
}

/// CSV trace: `k,u_*,y_*,uref_*,yref_*,err_inf,enc,dec,add,mult,comm_ints,wall_ns`.
///
/// With `timing = false` the wall-clock column is written as zero so the file
/// depends only on the configuration and seed.
pub fn write_csv<W: Write>(trace: &SimTrace, out: W, timing: bool) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("writing trace: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let (h, l) = trace.steps.first().map_or((0, 0), |s| (s.u.len(), s.y.len()));
    let mut header = vec!["k".to_string()];
    header.extend((1..=h).map(|i| format!("u_{i}")));
    header.extend((1..=l).map(|i| format!("y_{i}")));
    header.extend((1..=h).map(|i| format!("uref_{i}")));
    header.extend((1..=l).map(|i| format!("yref_{i}")));
    header.extend(["err_inf", "enc", "dec", "add", "mult", "comm_ints", "wall_ns"].map(String::from));
    w.write_record(&header).map_err(io)?;
    for s in &trace.steps {
        let mut row = vec![s.k.to_string()];
        row.extend(s.u.iter().chain(&s.y).chain(&s.u_ref).chain(&s.y_ref).map(|v| v.to_string()));
        row.push(s.err_inf.to_string());
        row.extend([s.counts.enc, s.counts.dec, s.counts.add, s.counts.mult].map(|v| v.to_string()));
        row.push(s.comm_ints.to_string());
        row.push(if timing { s.wall_ns } else { 0 }.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing trace: {e}")))?;
    Ok(())
}
