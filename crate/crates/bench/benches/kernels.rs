use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use std::hint::black_box;

use dmimo_core::analysis::{law, Dims};
use dmimo_core::detectors::{statistic, CompensationSet, DetectorKind, Measurement};
use dmimo_core::montecarlo::{
    draw_noise, run_trials, trial_rng, Hypothesis, TargetDraw, TrialConfig,
};
use dmimo_core::scene::{reference_scenario, PathModel, SyncErrors};
use dmimo_core::specfun::marcum_q;
use dmimo_core::waveforms::{caf, WaveformSet};
use dmimo_core::Probability;

const TP: f64 = 1e-5;

fn bench_caf(c: &mut Criterion) {
    let mb = WaveformSet::multi_band(2, 400e3, TP, 3.0).unwrap();
    let sb = WaveformSet::single_band(400e3, TP, 3.0).unwrap();
    let mut g = c.benchmark_group("caf");
    for (name, wf) in [("multi_band", &mb), ("single_band", &sb)] {
        let (a, b) = (&wf.pulses()[0], &wf.pulses()[1]);
        g.bench_function(name, |bch| {
            bch.iter(|| caf(a, b, black_box(0.3 * TP), black_box(1.5e4)))
        });
    }
    g.finish();
}

fn bench_marcum(c: &mut Criterion) {
    let mut g = c.benchmark_group("marcum_q");
    for m in [1u32, 4, 24] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |bch, &m| {
            bch.iter(|| marcum_q(m, black_box(5.0), black_box(7.0)).unwrap())
        });
    }
    g.finish();
}

fn bench_swerling(c: &mut Criterion) {
    let dims = Dims::new(12, 2, 1);
    let pfa = Probability::new(1e-4).unwrap();
    let mut g = c.benchmark_group("pd_swerling1");
    for det in DetectorKind::ALL {
        let l = law(det, dims, 1.0, Some(20.0)).unwrap();
        let gamma = l.threshold(pfa).unwrap();
        g.bench_function(det.name(), |bch| {
            bch.iter(|| {
                l.pd_swerling1(gamma, black_box(30.0), black_box(2.0))
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn fixture() -> (PathModel, CompensationSet) {
    let sc = reference_scenario();
    let wf = WaveformSet::multi_band(2, 400e3, TP, 3.0).unwrap();
    let truth = PathModel::build(&sc, &SyncErrors::zeros(2, 1), &wf).unwrap();
    let comp = CompensationSet::exact(&sc, &wf).unwrap();
    (truth, comp)
}

fn bench_statistics(c: &mut Criterion) {
    let (_, comp) = fixture();
    let mut rng = trial_rng(1, 0);
    let paths = (0..2).map(|_| draw_noise(&mut rng, 12, 1.0)).collect();
    let y = Measurement::new(2, 1, paths).unwrap();
    let mut g = c.benchmark_group("statistic");
    for det in DetectorKind::ALL {
        g.bench_function(det.name(), |bch| {
            bch.iter(|| statistic(det, black_box(&y), &comp).unwrap())
        });
    }
    g.finish();
}

fn bench_trials(c: &mut Criterion) {
    let (truth, comp) = fixture();
    let thresholds: Vec<_> = DetectorKind::ALL.iter().map(|&d| (d, 10.0)).collect();
    let cfg = TrialConfig {
        trials: 10_000,
        seed: 3,
        hypothesis: Hypothesis::H1,
        target: TargetDraw::Fixed(Complex64::new(1.0, 0.0)),
    };
    let mut g = c.benchmark_group("run_trials");
    g.sample_size(10);
    g.bench_function("10k_all_detectors", |bch| {
        bch.iter(|| run_trials(&truth, &comp, 1.0, &thresholds, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(
    benches,
    bench_caf,
    bench_marcum,
    bench_swerling,
    bench_statistics,
    bench_trials
);
criterion_main!(benches);
