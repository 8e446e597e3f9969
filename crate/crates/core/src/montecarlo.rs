//! Seeded, parallel Monte Carlo trials.
//!
//! Trial `t` draws from a ChaCha8 generator seeded with the run seed and
//! switched to stream `t`, so results do not depend on scheduling or on the
//! number of worker threads. Within a trial α is drawn first, then the noise
//! of each path in flat path order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{law, StatisticLaw};
use crate::detectors::{statistic, CompensationSet, DetectorKind, Measurement};
use crate::error::{domain, Error, Result};
use crate::scene::{CVector, PathModel};
use crate::specfun::{reg_lower_gamma, Probability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TargetDraw {
    Fixed(Complex64),
    Swerling1 { rho_bar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    pub hypothesis: Hypothesis,
    pub target: TargetDraw,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Argument("at least one trial is required".into()));
        }
        match self.target {
            TargetDraw::Swerling1 { rho_bar } if !(rho_bar.is_finite() && rho_bar > 0.0) => {
                Err(domain(
                    "TrialConfig",
                    format!("rho_bar = {rho_bar} must be positive"),
                ))
            }
            TargetDraw::Fixed(a) if !(a.re.is_finite() && a.im.is_finite()) => {
                Err(domain("TrialConfig", "fixed alpha must be finite"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalResult {
    pub detector: DetectorKind,
    pub detections: u64,
    pub trials: u64,
    pub p_hat: Probability,
    pub ci_halfwidth: f64,
}

/// Three-sigma binomial halfwidth using the Agresti–Coull centre
/// `(x + 2)/(n + 4)`, which stays positive when no or all trials detect.
pub fn ci_halfwidth(detections: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = (detections as f64 + 2.0) / (n + 4.0);
    3.0 * (p * (1.0 - p) / n).sqrt()
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

/// K samples of CN(0, σ²).
pub fn draw_noise<R: Rng + ?Sized>(rng: &mut R, pulses: usize, sigma2: f64) -> CVector {
    let sd = (sigma2 / 2.0).sqrt();
    CVector::from_fn(pulses, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sd * re, sd * im)
    })
}

/// α ~ CN(0, ρ̄), so |α|² is exponential with mean ρ̄.
pub fn draw_swerling1_alpha<R: Rng + ?Sized>(rng: &mut R, rho_bar: f64) -> Complex64 {
    let sd = (rho_bar / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

fn draw_measurement(
    rng: &mut ChaCha8Rng,
    signal: &[CVector],
    truth: &PathModel,
    sigma2: f64,
    cfg: &TrialConfig,
) -> Measurement {
    let alpha = match (cfg.hypothesis, cfg.target) {
        (Hypothesis::H0, _) => None,
        (Hypothesis::H1, TargetDraw::Fixed(a)) => Some(a),
        (Hypothesis::H1, TargetDraw::Swerling1 { rho_bar }) => {
            Some(draw_swerling1_alpha(rng, rho_bar))
        }
    };
    let k = truth.pulses();
    let paths = signal
        .iter()
        .map(|x| {
            let w = draw_noise(rng, k, sigma2);
            match alpha {
                Some(a) => w + x * a,
                None => w,
            }
        })
        .collect();
    Measurement::new(truth.num_tx(), truth.num_rx(), paths)
        .expect("shapes come from the path model")
}

fn check_inputs(
    truth: &PathModel,
    comp: &CompensationSet,
    sigma2: f64,
    dets: &[DetectorKind],
    cfg: &TrialConfig,
) -> Result<()> {
    cfg.validate()?;
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(domain(
            "run_trials",
            format!("noise power {sigma2} must be positive"),
        ));
    }
    comp.check(&Measurement::zeros(
        truth.num_tx(),
        truth.num_rx(),
        truth.pulses(),
    ))?;
    if dets.contains(&DetectorKind::Hd) {
        comp.subspace()?;
    }
    Ok(())
}

/// Counts threshold exceedances of each `(detector, γ)` pair.
pub fn run_trials(
    truth: &PathModel,
    comp: &CompensationSet,
    sigma2: f64,
    thresholds: &[(DetectorKind, f64)],
    cfg: &TrialConfig,
) -> Result<Vec<EmpiricalResult>> {
    let dets: Vec<DetectorKind> = thresholds.iter().map(|t| t.0).collect();
    check_inputs(truth, comp, sigma2, &dets, cfg)?;
    let signal = truth.signatures();
    let counts = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let y = draw_measurement(&mut rng, &signal, truth, sigma2, cfg);
            thresholds
                .iter()
                .map(|&(d, g)| statistic(d, &y, comp).map(|s| u64::from(s > g)))
                .collect::<Result<Vec<u64>>>()
        })
        .try_reduce(
            || vec![0; thresholds.len()],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
        )?;
    thresholds
        .iter()
        .zip(counts)
        .map(|(&(detector, _), detections)| {
            Ok(EmpiricalResult {
                detector,
                detections,
                trials: cfg.trials,
                p_hat: Probability::new(detections as f64 / cfg.trials as f64)?,
                ci_halfwidth: ci_halfwidth(detections, cfg.trials),
            })
        })
        .collect()
}

/// Raw statistic values of one detector, in trial order.
pub fn simulate_statistics(
    det: DetectorKind,
    truth: &PathModel,
    comp: &CompensationSet,
    sigma2: f64,
    cfg: &TrialConfig,
) -> Result<Vec<f64>> {
    check_inputs(truth, comp, sigma2, &[det], cfg)?;
    let signal = truth.signatures();
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let y = draw_measurement(&mut rng, &signal, truth, sigma2, cfg);
            statistic(det, &y, comp)
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodnessOfFit {
    pub detector: DetectorKind,
    pub law: StatisticLaw,
    pub trials: u64,
    pub ks: f64,
}

/// KS distance of the H0 statistic against its scaled central χ² law.
pub fn h0_statistic_distribution_check(
    det: DetectorKind,
    comp: &CompensationSet,
    sigma2: f64,
    trials: u64,
    seed: u64,
) -> Result<GoodnessOfFit> {
    let model = comp.model();
    let cfg = TrialConfig {
        trials,
        seed,
        hypothesis: Hypothesis::H0,
        target: TargetDraw::Fixed(Complex64::new(0.0, 0.0)),
    };
    let dims = crate::analysis::Dims::new(model.pulses(), model.num_tx(), model.num_rx());
    let law = law(det, dims, sigma2, Some(comp.varsigma()))?;
    let stats = simulate_statistics(det, model, comp, sigma2, &cfg)?;
    let order = law.order as f64;
    let ks = ks_distance(&stats, |x| {
        reg_lower_gamma(order, x / law.scale).unwrap_or(f64::NAN)
    });
    Ok(GoodnessOfFit {
        detector: det,
        law,
        trials,
        ks,
    })
}
