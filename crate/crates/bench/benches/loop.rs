use criterion::{criterion_group, criterion_main, Criterion};

use encctl_bench::f16_context;
use encctl_core::packed::{self, PackedEncController};
use encctl_core::ring::{ntt_forward, RingPoly};
use encctl_core::rng::{stream_rng, Stream};
use encctl_core::{RunConfig, Scale};

fn ring(c: &mut Criterion) {
    let ctx = f16_context();
    let q = ctx.ciphertext_ring().clone();
    let poly = RingPoly::new((0..4096).map(|i| (i * 7919 - 12345) as i128).collect(), &q).unwrap();
    c.bench_function("ntt_forward_p4096_q74", |b| b.iter(|| ntt_forward(&poly).unwrap()));

    let sk = ctx.keygen(1);
    let mut rng = stream_rng(1, Stream::Setup);
    let slots: Vec<i64> = (0..4096).map(|i| i % 100 - 50).collect();
    let x = ctx.encrypt_packed(&sk, &slots, Scale::GAIN, &mut rng).unwrap();
    let y = ctx.encrypt_packed(&sk, &slots, Scale::SIGNAL, &mut rng).unwrap();
    c.bench_function("hom_mul_p4096_q74", |b| b.iter(|| ctx.hom_mul(&x, &y).unwrap()));
    c.bench_function("encrypt_packed_p4096", |b| {
        b.iter(|| ctx.encrypt_packed(&sk, &slots, Scale::SIGNAL, &mut rng).unwrap())
    });
}

fn packed_step(c: &mut Criterion) {
    let cfg = RunConfig::preset("f16").unwrap();
    let setup = cfg.setup().unwrap();
    let ctx = f16_context();
    let sk = ctx.keygen(1);
    let mut rng = stream_rng(1, Stream::Setup);
    let ctl = PackedEncController::setup(ctx.clone(), &sk, &setup.tc, &setup.quant, &mut rng).unwrap();
    let lay = ctl.layout();
    let y = vec![0.01; 5];
    let mut group = c.benchmark_group("f16");
    group.sample_size(20);
    group.bench_function("packed_loop_step", |b| {
        // controller output, actuator and sensor; the container shift is a pointer rotation
        b.iter(|| {
            let out = ctl.output().unwrap();
            let act = packed::actuator_step(&ctx, &sk, &setup.quant, &lay, &out, &mut rng).unwrap();
            let (_, y_enc) = packed::sensor_encrypt(&ctx, &sk, &setup.quant, &lay, &y, &mut rng).unwrap();
            (act, y_enc)
        })
    });
    group.finish();
}

criterion_group!(benches, ring, packed_step);
criterion_main!(benches);
