use checkworthy_bench::small_scorer;
use checkworthy_core::embeddings::solve_procrustes;
use checkworthy_core::eval::{evaluate, rank, DEFAULT_KS};
use checkworthy_core::model::{Mlp, MlpShape};
use checkworthy_core::text::{split_sentences, tokenize_str};
use checkworthy_core::topics::{lda_fit_terms, LdaConfig};
use checkworthy_core::{Language, Source};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn text_pipeline(c: &mut Criterion) {
    let en = "The deficit grew by 40 percent in 2012, Mr. Smith said. We will cut taxes. Is that true? ".repeat(50);
    let ar = "قال الرئيس إن البطالة انخفضت بنسبة 5 بالمئة. وسنخفض الضرائب. هل هذا صحيح؟ ".repeat(50);
    let mut g = c.benchmark_group("text");
    g.throughput(Throughput::Bytes(en.len() as u64));
    g.bench_function("split_en", |b| b.iter(|| split_sentences(black_box(&en), Language::English)));
    g.bench_function("tokenize_en", |b| b.iter(|| tokenize_str(black_box(&en), Language::English)));
    g.throughput(Throughput::Bytes(ar.len() as u64));
    g.bench_function("split_ar", |b| b.iter(|| split_sentences(black_box(&ar), Language::Arabic)));
    g.bench_function("tokenize_ar", |b| b.iter(|| tokenize_str(black_box(&ar), Language::Arabic)));
    g.finish();
}

fn ranking(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let scores: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
    let debates: Vec<Vec<bool>> = (0..7).map(|_| (0..1000).map(|_| rng.random_bool(0.15)).collect()).collect();
    c.bench_function("rank_1000", |b| b.iter(|| rank(black_box(&scores))));
    c.bench_function("evaluate_7x1000", |b| b.iter(|| evaluate(black_box(&debates), &DEFAULT_KS)));
}

fn mlp(c: &mut Criterion) {
    let shape = MlpShape::standard(1100);
    let net = Mlp::init(shape, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..shape.input).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = vec![1.0; shape.outputs];
    let mask = vec![true; shape.outputs];
    c.bench_function("mlp_forward_1100", |b| b.iter(|| net.forward(black_box(&x))));
    c.bench_function("mlp_sgd_step_1100", |b| {
        b.iter_batched(
            || net.clone(),
            |mut n| n.sgd_step(&x, &y, &mask, 0.01),
            BatchSize::LargeInput,
        )
    });
}

fn procrustes(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dim = 50;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..200)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            (v.clone(), v)
        })
        .collect();
    let pairs: Vec<(&[f64], &[f64])> = rows.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect();
    c.bench_function("procrustes_50x200", |b| b.iter(|| solve_procrustes(dim, black_box(&pairs))));
}

fn lda(c: &mut Criterion) {
    let docs: Vec<Vec<String>> = (0..200)
        .map(|d| (0..12).map(|w| format!("w{}", (d * 7 + w * 13) % 300)).collect())
        .collect();
    let config = LdaConfig {
        iterations: 20,
        ..LdaConfig::with_topics(10)
    };
    let mut g = c.benchmark_group("lda");
    g.sample_size(10);
    g.bench_function("fit_200docs_20sweeps", |b| b.iter(|| lda_fit_terms(black_box(&docs), &config)));
    g.finish();
}

fn scoring(c: &mut Criterion) {
    let (scorer, corpus) = small_scorer();
    let debate = &corpus[0];
    let mut g = c.benchmark_group("scorer");
    g.sample_size(10);
    g.throughput(Throughput::Elements(debate.sentences.len() as u64));
    g.bench_function("score_debate", |b| b.iter(|| scorer.score_debate(black_box(debate))));
    g.bench_function("evaluate_any", |b| b.iter(|| scorer.evaluate(black_box(&corpus[..1]), Source::Any, &DEFAULT_KS)));
    g.finish();
}

criterion_group!(benches, text_pipeline, ranking, mlp, procrustes, lda, scoring);
criterion_main!(benches);
