use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use qlsp::aliasing::IterRange;
use qlsp::frontend::parse;
use qlsp::ir::{LoopProgram, LoopRange};
use qlsp::loop_transform::unroll_body;
use qlsp::pipeline::{compile, CompileOptions};
use qlsp::qdg::{build, QdgOptions};
#[cfg(feature = "parallel")]
use qlsp::scheduler::linear_scan_parallel;
use qlsp::scheduler::linear_scan_sequential;
use qlsp::verifier::{check_output, range_env, VerifyOptions};

fn corpus(name: &str) -> LoopProgram {
    parse(&std::fs::read_to_string(format!("{}/../../corpus/{name}.qlp", env!("CARGO_MANIFEST_DIR"))).unwrap()).unwrap()
}

fn ii_scan(c: &mut Criterion) {
    let p = corpus("array3");
    let body = unroll_body(&p.loop_.body, 2, 0);
    let t = IterRange::Unbounded;
    let g = build(&body, t, QdgOptions::default());
    let hi = g.len() as i64;
    let mut group = c.benchmark_group("ii_scan");
    group.sample_size(20);
    group.bench_function("sequential", |b| b.iter(|| linear_scan_sequential(black_box(&g), t, hi)));
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| b.iter(|| linear_scan_parallel(black_box(&g), t, hi)));
    group.finish();
}

fn compile_and_verify(c: &mut Criterion) {
    let p = corpus("array1").with_range(LoopRange::Known { m: 0, n: 7 });
    let opts = CompileOptions::default();
    c.bench_function("compile_array1", |b| b.iter(|| compile(black_box(&p), &opts).unwrap()));
    let out = compile(&p, &opts).unwrap();
    let env = range_env(&p, 0, 7);
    c.bench_function("verify_array1", |b| b.iter(|| check_output(&p, (0, 7), &out.output, &env, &VerifyOptions::default()).unwrap()));
}

criterion_group!(benches, ii_scan, compile_and_verify);
criterion_main!(benches);
