use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use npvq::evaluation::roc_curve;
use npvq::highrate::{estimate_fbar, FbarConfig, Grid};
use npvq::likelihood::QuantizedOptions;
use npvq::quantizers::{lbg_train, uniform_quantizer, LbgConfig};
use npvq::rng::substream;
use npvq::scenarios::{ar_detect, ma_detect, qpsk_oqpsk};
use npvq::{Execution, Hypothesis};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn fbar(c: &mut Criterion) {
    let model = qpsk_oqpsk();
    let grid = Grid::uniform(model.truncation_box(), 15).unwrap();
    let mut g = c.benchmark_group("fbar_monte_carlo");
    g.sample_size(10);
    for (name, execution) in POLICIES {
        let cfg = FbarConfig { n_mc: 100, execution, ..FbarConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| estimate_fbar(&model, &grid, cfg).unwrap())
        });
    }
    g.finish();
}

fn lbg(c: &mut Criterion) {
    let model = ar_detect();
    let mut rng = substream(1, &[0]);
    let samples = model.sample_marginal(Hypothesis::H0, 20_000, &mut rng);
    let domain = model.truncation_box();
    let mut g = c.benchmark_group("lbg_64_cells");
    g.sample_size(10);
    for (name, execution) in POLICIES {
        let cfg = LbgConfig { max_iter: 20, execution, ..LbgConfig::new(64, 1) };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| lbg_train(&samples, 2, &domain, cfg).unwrap())
        });
    }
    g.finish();
}

fn roc(c: &mut Criterion) {
    let model = ma_detect();
    let q = uniform_quantizer(&model.truncation_box(), &[4]).unwrap();
    let mut g = c.benchmark_group("roc_ma_200_trials");
    g.sample_size(10);
    for (name, execution) in POLICIES {
        let opts = QuantizedOptions { execution, ..QuantizedOptions::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| roc_curve(&model, &q, 20, 200, 1, opts, "uniform").unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, fbar, lbg, roc);
criterion_main!(benches);
