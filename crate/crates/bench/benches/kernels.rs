use std::hint::black_box;

use afdm_bench::fixture;
use afdm_core::channel::{effective_channel, sample_channel};
use afdm_core::daft::{demodulate_dense, modulate_dense, DaftTransform};
use afdm_core::detect::{SoftDetector, SpaDetector, SpaParams};
use afdm_core::fec::{bcjr_decode, conv_encode, BitBlock};
use afdm_core::rng::stream_rng;
use afdm_core::{ConvCode, LlrBlock, ModulationAlphabet, SymbolBeliefs};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

fn daft(c: &mut Criterion) {
    let mut g = c.benchmark_group("daft");
    for n in [64usize, 128, 256] {
        let f = fixture(n, 2, &ModulationAlphabet::qam4(), 0.1, 1);
        let t = DaftTransform::new(&f.cfg);
        g.bench_with_input(BenchmarkId::new("fast_modulate", n), &n, |b, _| {
            b.iter(|| t.modulate(black_box(&f.x)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("dense_modulate", n), &n, |b, _| {
            b.iter(|| modulate_dense(black_box(&f.x), &f.cfg).unwrap())
        });
        let s = t.modulate(&f.x).unwrap();
        g.bench_with_input(BenchmarkId::new("dense_demodulate", n), &n, |b, _| {
            b.iter(|| demodulate_dense(black_box(&s), &f.cfg).unwrap())
        });
    }
    g.finish();
}

fn channel(c: &mut Criterion) {
    let f = fixture(128, 3, &ModulationAlphabet::qam4(), 0.1, 2);
    let chan = sample_channel(3, 3, 3, &mut stream_rng(2, 1)).unwrap();
    c.bench_function("effective_channel/128/P3", |b| {
        b.iter(|| effective_channel(black_box(&chan), &f.cfg).unwrap())
    });
}

fn spa(c: &mut Criterion) {
    let mut g = c.benchmark_group("spa");
    g.sample_size(20);
    for (name, alph) in [("bpsk", ModulationAlphabet::bpsk()), ("4qam", ModulationAlphabet::qam4())] {
        for p in [2usize, 3, 4] {
            let f = fixture(128, p, &alph, 0.1, 3);
            let det = SpaDetector::afdm(&f.eff, &alph, SpaParams::default()).unwrap();
            let priors = SymbolBeliefs::uniform(128, alph.size());
            g.bench_with_input(BenchmarkId::new(name, format!("N128/P{p}")), &p, |b, _| {
                b.iter(|| det.detect(black_box(f.y.as_slice()), &priors, 0.1).unwrap())
            });
        }
    }
    g.finish();
}

fn bcjr(c: &mut Criterion) {
    let mut g = c.benchmark_group("bcjr");
    let mut rng = stream_rng(4, 0);
    for name in ["A", "B", "C"] {
        let code = ConvCode::by_name(name).unwrap();
        let k = code.info_len_for(256).unwrap();
        let u: Vec<u8> = (0..k).map(|_| rng.random_range(0..2)).collect();
        let coded = conv_encode(&BitBlock::info(u).unwrap(), &code).unwrap();
        let llr = LlrBlock::clamped(
            coded
                .bits()
                .iter()
                .map(|&b| if b == 0 { 2.0 } else { -2.0 } + rng.random_range(-1.5..1.5))
                .collect(),
        )
        .unwrap();
        g.bench_function(BenchmarkId::new("decode_256", name), |b| {
            b.iter(|| bcjr_decode(black_box(&llr), &LlrBlock::empty(), &code).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, daft, channel, spa, bcjr);
criterion_main!(benches);
