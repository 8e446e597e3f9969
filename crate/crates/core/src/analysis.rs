//! Closed-form false-alarm and detection probabilities.
//!
//! Every detector statistic T satisfies `2T/scale ~ χ²_{2L}(λ)` for a
//! detector-specific order L and scale, so one pair of formulas covers all
//! four:
//!
//! | detector | L     | scale  |
//! |----------|-------|--------|
//! | NCD      | KMN   | σ²     |
//! | ACD      | 1     | KMN σ² |
//! | CD       | 1     | ς σ²   |
//! | HD       | N M²  | σ²     |

use num_complex::Complex64;
use serde::Serialize;

use crate::detectors::{CompensationSet, DetectorKind};
use crate::error::{domain, Error, Result};
use crate::scene::{PathModel, Scenario, SyncErrors, TargetModel};
use crate::specfun::{
    inv_reg_upper_gamma, kummer_1f1_first_unit, ln_gamma, marcum_q, reg_upper_gamma, Probability,
};
use crate::waveforms::WaveformSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub pulses: usize,
    pub num_tx: usize,
    pub num_rx: usize,
}

impl Dims {
    pub fn new(pulses: usize, num_tx: usize, num_rx: usize) -> Self {
        Dims {
            pulses,
            num_tx,
            num_rx,
        }
    }

    pub fn of(sc: &Scenario) -> Self {
        Dims::new(sc.pulses, sc.num_tx, sc.num_rx)
    }
}

/// Order L and scale of the scaled-χ² law of one detector statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticLaw {
    pub order: u32,
    pub scale: f64,
}

pub fn law(
    det: DetectorKind,
    dims: Dims,
    sigma2: f64,
    varsigma: Option<f64>,
) -> Result<StatisticLaw> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(domain(
            "law",
            format!("noise power {sigma2} must be positive"),
        ));
    }
    let Dims {
        pulses: k,
        num_tx: m,
        num_rx: n,
    } = dims;
    if k == 0 || m == 0 || n == 0 {
        return Err(domain("law", "K, M and N must be at least 1"));
    }
    let order =
        |v: usize| u32::try_from(v).map_err(|_| domain("law", "chi-square order too large"));
    Ok(match det {
        DetectorKind::Ncd => StatisticLaw {
            order: order(k * m * n)?,
            scale: sigma2,
        },
        DetectorKind::Acd => StatisticLaw {
            order: 1,
            scale: (k * m * n) as f64 * sigma2,
        },
        DetectorKind::Cd => {
            let vs = varsigma
                .ok_or_else(|| Error::Argument("CD needs the template energy varsigma".into()))?;
            if !(vs.is_finite() && vs > 0.0) {
                return Err(domain("law", format!("varsigma = {vs} must be positive")));
            }
            StatisticLaw {
                order: 1,
                scale: vs * sigma2,
            }
        }
        DetectorKind::Hd => {
            if k < m {
                return Err(Error::Dimension(format!(
                    "HD needs K >= M (K = {k}, M = {m})"
                )));
            }
            StatisticLaw {
                order: order(n * m * m)?,
                scale: sigma2,
            }
        }
    })
}

impl StatisticLaw {
    pub fn pfa(&self, gamma: f64) -> Result<Probability> {
        if !(gamma >= 0.0) {
            return Err(domain(
                "pfa",
                format!("threshold {gamma} must be nonnegative"),
            ));
        }
        Probability::saturating(reg_upper_gamma(self.order as f64, gamma / self.scale)?)
    }

    pub fn threshold(&self, pfa: Probability) -> Result<f64> {
        let p = pfa.value();
        if !pfa.is_interior() {
            return Err(domain(
                "threshold",
                format!("target false-alarm probability {p} must lie in (0, 1)"),
            ));
        }
        let g = if self.order == 1 {
            -p.ln()
        } else {
            inv_reg_upper_gamma(self.order as f64, p)?
        };
        Ok(self.scale * g)
    }

    pub fn pd(&self, gamma: f64, lambda: f64) -> Result<Probability> {
        if !(gamma >= 0.0 && lambda >= 0.0) {
            return Err(domain(
                "pd",
                format!("gamma = {gamma} and lambda = {lambda} must be nonnegative"),
            ));
        }
        if lambda == 0.0 {
            return self.pfa(gamma);
        }
        marcum_q(self.order, lambda.sqrt(), (2.0 * gamma / self.scale).sqrt())
    }

    /// Detection probability averaged over an exponential RCS with mean
    /// `rho_bar`, where the noncentrality is `lambda_prime · ρ`:
    ///
    /// `Q(L, g) + λ' g^L e^{−g} ₁F₁(1; L+1; gλ'/c) / (L! c)` with
    /// `g = γ/scale` and `c = λ' + 2/ρ̄`.
    pub fn pd_swerling1(&self, gamma: f64, lambda_prime: f64, rho_bar: f64) -> Result<Probability> {
        if !(gamma >= 0.0 && lambda_prime >= 0.0) || !(rho_bar > 0.0) {
            return Err(domain(
                "pd_swerling1",
                format!("need gamma >= 0, lambda' >= 0, rho_bar > 0 (got {gamma}, {lambda_prime}, {rho_bar})"),
            ));
        }
        let l = self.order as f64;
        let g = gamma / self.scale;
        let base = reg_upper_gamma(l, g)?;
        if lambda_prime == 0.0 || g == 0.0 {
            return Probability::saturating(base);
        }
        let c = lambda_prime + 2.0 / rho_bar;
        if !c.is_finite() {
            return Probability::saturating(base);
        }
        let z = g * lambda_prime / c;
        let log_pref = lambda_prime.ln() + l * g.ln() - g - ln_gamma(l + 1.0) - c.ln();
        let term = log_pref.exp() * kummer_1f1_first_unit(l + 1.0, z)?;
        Probability::saturating(base + term)
    }
}

pub fn pfa(
    det: DetectorKind,
    gamma: f64,
    dims: Dims,
    sigma2: f64,
    varsigma: Option<f64>,
) -> Result<Probability> {
    law(det, dims, sigma2, varsigma)?.pfa(gamma)
}

pub fn threshold(
    det: DetectorKind,
    target: Probability,
    dims: Dims,
    sigma2: f64,
    varsigma: Option<f64>,
) -> Result<f64> {
    law(det, dims, sigma2, varsigma)?.threshold(target)
}

pub fn pd_nonfluctuating(
    det: DetectorKind,
    gamma: f64,
    lambda: f64,
    dims: Dims,
    sigma2: f64,
    varsigma: Option<f64>,
) -> Result<Probability> {
    law(det, dims, sigma2, varsigma)?.pd(gamma, lambda)
}

#[allow(clippy::too_many_arguments)]
pub fn pd_swerling1(
    det: DetectorKind,
    gamma: f64,
    lambda_prime: f64,
    rho_bar: f64,
    dims: Dims,
    sigma2: f64,
    varsigma: Option<f64>,
) -> Result<Probability> {
    law(det, dims, sigma2, varsigma)?.pd_swerling1(gamma, lambda_prime, rho_bar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Noncentrality {
    pub lambda: f64,
    /// Template energy ς; only meaningful for CD.
    pub varsigma: Option<f64>,
}

/// Noncentrality of `det` when the true signal is `α · truth` with
/// `|α|² = rho` and the receiver compensates with `comp`.
pub fn noncentrality(
    det: DetectorKind,
    truth: &PathModel,
    comp: &CompensationSet,
    sigma2: f64,
    rho: f64,
) -> Result<Noncentrality> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(domain(
            "noncentrality",
            format!("rho = {rho} must be finite and nonnegative"),
        ));
    }
    if !(sigma2 > 0.0) {
        return Err(domain(
            "noncentrality",
            format!("noise power {sigma2} must be positive"),
        ));
    }
    if truth.num_tx() != comp.model().num_tx()
        || truth.num_rx() != comp.model().num_rx()
        || truth.pulses() != comp.model().pulses()
    {
        return Err(Error::Dimension(
            "true model and compensation set disagree".into(),
        ));
    }
    let x = truth.signatures();
    let lambda = match det {
        DetectorKind::Ncd => 2.0 * rho / sigma2 * x.iter().map(|v| v.norm_squared()).sum::<f64>(),
        DetectorKind::Acd => {
            let mut sum = Complex64::new(0.0, 0.0);
            for m in 0..truth.num_tx() {
                for n in 0..truth.num_rx() {
                    let xv = &x[truth.path_index(m, n)];
                    for (k, th) in comp.theta(m, n).iter().enumerate() {
                        sum += Complex64::cis(-th) * xv[k];
                    }
                }
            }
            let kmn = (truth.pulses() * truth.num_paths()) as f64;
            2.0 * rho * sum.norm_sqr() / (kmn * sigma2)
        }
        DetectorKind::Cd => {
            let sum: Complex64 = comp
                .templates()
                .iter()
                .zip(&x)
                .map(|(t, v)| t.dotc(v))
                .sum();
            2.0 * rho * sum.norm_sqr() / (sigma2 * comp.varsigma())
        }
        DetectorKind::Hd => {
            let sub = comp.subspace()?;
            let e: f64 = x
                .iter()
                .enumerate()
                .map(|(p, v)| sub.projected_energy(truth.rx_of(p), v))
                .sum();
            2.0 * rho * e / sigma2
        }
    };
    Ok(Noncentrality {
        lambda,
        varsigma: (det == DetectorKind::Cd).then(|| comp.varsigma()),
    })
}

/// One analytic operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerfPoint {
    pub detector: DetectorKind,
    pub gamma: f64,
    pub pfa: Probability,
    pub pd: Probability,
    /// Noncentrality at the mean target power (|α|² or ρ̄).
    pub lambda: f64,
    pub varsigma: Option<f64>,
}

/// Threshold at `pfa_target` and detection probability for the scene's
/// target model (averaged over RCS for Swerling I).
pub fn evaluate(
    det: DetectorKind,
    truth: &PathModel,
    comp: &CompensationSet,
    sc: &Scenario,
    pfa_target: Probability,
) -> Result<PerfPoint> {
    let nc = noncentrality(det, truth, comp, sc.noise_power, 1.0)?;
    let law = law(det, Dims::of(sc), sc.noise_power, nc.varsigma)?;
    let gamma = law.threshold(pfa_target)?;
    let pfa = law.pfa(gamma)?;
    let rcs = sc.target.mean_rcs();
    let pd = match sc.target {
        TargetModel::Swerling1 { rho_bar } => law.pd_swerling1(gamma, nc.lambda, rho_bar)?,
        TargetModel::NonFluctuating { .. } => law.pd(gamma, nc.lambda * rcs)?,
    };
    Ok(PerfPoint {
        detector: det,
        gamma,
        pfa,
        pd,
        lambda: nc.lambda * rcs,
        varsigma: nc.varsigma,
    })
}

/// Convenience wrapper building the true model and compensation set.
pub fn evaluate_scene(
    det: DetectorKind,
    sc: &Scenario,
    err: &SyncErrors,
    wf: &WaveformSet,
    pfa_target: Probability,
) -> Result<PerfPoint> {
    let truth = PathModel::build(sc, err, wf)?;
    let comp = CompensationSet::new(sc, err, wf)?;
    evaluate(det, &truth, &comp, sc, pfa_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::reference_scenario;

    const TP: f64 = 1e-5;
    const REF: Dims = Dims {
        pulses: 12,
        num_tx: 2,
        num_rx: 1,
    };

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn wf() -> WaveformSet {
        WaveformSet::multi_band(2, 400e3, TP, 3.0).unwrap()
    }

    fn all_laws() -> Vec<(DetectorKind, StatisticLaw)> {
        DetectorKind::ALL
            .iter()
            .map(|&d| (d, law(d, REF, 1.0, Some(17.5)).unwrap()))
            .collect()
    }

    #[test]
    fn law_orders_and_scales() {
        let l = |d| law(d, REF, 2.0, Some(3.0)).unwrap();
        assert_eq!(
            l(DetectorKind::Ncd),
            StatisticLaw {
                order: 24,
                scale: 2.0
            }
        );
        assert_eq!(
            l(DetectorKind::Acd),
            StatisticLaw {
                order: 1,
                scale: 48.0
            }
        );
        assert_eq!(
            l(DetectorKind::Cd),
            StatisticLaw {
                order: 1,
                scale: 6.0
            }
        );
        assert_eq!(
            l(DetectorKind::Hd),
            StatisticLaw {
                order: 4,
                scale: 2.0
            }
        );
        assert!(matches!(
            law(DetectorKind::Cd, REF, 1.0, None),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            law(DetectorKind::Hd, Dims::new(1, 2, 1), 1.0, None),
            Err(Error::Dimension(_))
        ));
        assert!(law(DetectorKind::Ncd, REF, 0.0, None).is_err());
    }

    #[test]
    fn pfa_basics() {
        for (d, l) in all_laws() {
            assert_eq!(l.pfa(0.0).unwrap(), Probability::ONE, "{d}");
            let mut prev = 1.0;
            for i in 1..60 {
                let v = l.pfa(i as f64 * l.scale).unwrap().value();
                assert!(v <= prev, "{d}");
                prev = v;
            }
            assert!(l.pfa(-1.0).is_err());
        }
        let vs = 17.5;
        let g = vs * (1e4f64).ln();
        let v = pfa(DetectorKind::Cd, g, REF, 1.0, Some(vs))
            .unwrap()
            .value();
        assert!((v - 1e-4).abs() < 1e-16);
        let v = pfa(DetectorKind::Ncd, 24.0, REF, 1.0, None)
            .unwrap()
            .value();
        assert!((v - 0.472_849_720_547_744).abs() < 1e-13);
    }

    #[test]
    fn thresholds() {
        let g = threshold(DetectorKind::Acd, p(1e-4), REF, 1.0, None).unwrap();
        assert!((g - 24.0 * (1e4f64).ln()).abs() < 1e-10);
        assert!((g - 221.048).abs() < 1e-3);
        let g = threshold(DetectorKind::Ncd, p(1e-4), REF, 1.0, None).unwrap();
        assert!((g - 46.610453138115764).abs() < 1e-9);
        for (d, l) in all_laws() {
            for target in [1e-2, 1e-4, 1e-6] {
                let g = l.threshold(p(target)).unwrap();
                let back = l.pfa(g).unwrap().value();
                assert!(((back - target) / target).abs() < 1e-10, "{d} {target}");
            }
            assert!(l.threshold(Probability::ONE).is_err());
            assert!(l.threshold(Probability::ZERO).is_err());
        }
    }

    #[test]
    fn pd_basics() {
        for (d, l) in all_laws() {
            let g = l.threshold(p(1e-4)).unwrap();
            assert_eq!(
                l.pd(g, 0.0).unwrap().value(),
                l.pfa(g).unwrap().value(),
                "{d}"
            );
            assert_eq!(l.pd(0.0, 5.0).unwrap(), Probability::ONE);
            let mut prev = 0.0;
            for i in 0..40 {
                let v = l.pd(g, i as f64 * 2.5).unwrap().value();
                assert!(v >= prev - 1e-15, "{d}");
                assert!(v >= l.pfa(g).unwrap().value() - 1e-15);
                prev = v;
            }
            let mut prev = 1.0;
            for i in 0..40 {
                let v = l.pd(i as f64 * l.scale, 30.0).unwrap().value();
                assert!(v <= prev + 1e-15, "{d}");
                prev = v;
            }
        }
    }

    #[test]
    fn swerling_trivial_limits() {
        for (d, l) in all_laws() {
            let g = l.threshold(p(1e-4)).unwrap();
            let pf = l.pfa(g).unwrap().value();
            assert_eq!(l.pd_swerling1(g, 0.0, 1.0).unwrap().value(), pf, "{d}");
            let tiny = l.pd_swerling1(g, 10.0, 1e-12).unwrap().value();
            assert!((tiny - pf).abs() < 1e-12, "{d}");
        }
        // Order one has the familiar closed form exp(−g / (1 + λ'ρ̄/2)).
        let l = StatisticLaw {
            order: 1,
            scale: 3.0,
        };
        let g = l.threshold(p(1e-4)).unwrap();
        let v = l.pd_swerling1(g, 7.0, 2.0).unwrap().value();
        assert!((v - (-(g / 3.0) / (1.0 + 7.0)).exp()).abs() < 1e-14);
    }

    /// ∫₀^∞ e^{−u} P_d(λ'ρ̄u) du by composite Simpson after mapping
    /// u = t/(1−t) onto [0, 1).
    fn swerling_quadrature(l: &StatisticLaw, gamma: f64, lambda_prime: f64, rho_bar: f64) -> f64 {
        let n = 4000;
        let h = 1.0 / n as f64;
        let f = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = t / (1.0 - t);
            let jac = 1.0 / ((1.0 - t) * (1.0 - t));
            (-u).exp() * jac * l.pd(gamma, lambda_prime * rho_bar * u).unwrap().value()
        };
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn swerling_closed_form_matches_quadrature() {
        let sc = reference_scenario();
        let truth = PathModel::build(&sc, &SyncErrors::zeros(2, 1), &wf()).unwrap();
        let comp = CompensationSet::exact(&sc, &wf()).unwrap();
        for det in DetectorKind::ALL {
            let nc = noncentrality(det, &truth, &comp, 1.0, 1.0).unwrap();
            let l = law(det, REF, 1.0, nc.varsigma).unwrap();
            let g = l.threshold(p(1e-4)).unwrap();
            for snr_db in [-5.0, 0.0, 5.0, 10.0, 15.0] {
                let rho_bar = 10f64.powf(snr_db / 10.0);
                let closed = l.pd_swerling1(g, nc.lambda, rho_bar).unwrap().value();
                let quad = swerling_quadrature(&l, g, nc.lambda, rho_bar);
                assert!(
                    (closed - quad).abs() < 1e-6,
                    "{det} {snr_db}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn noncentrality_identities() {
        let sc = reference_scenario();
        let err = SyncErrors::zeros(2, 1);
        let truth = PathModel::build(&sc, &err, &wf()).unwrap();
        let comp = CompensationSet::exact(&sc, &wf()).unwrap();
        for det in DetectorKind::ALL {
            assert_eq!(
                noncentrality(det, &truth, &comp, 1.0, 0.0).unwrap().lambda,
                0.0
            );
            let one = noncentrality(det, &truth, &comp, 1.0, 1.0).unwrap().lambda;
            let many = noncentrality(det, &truth, &comp, 1.0, 3.7).unwrap().lambda;
            assert!((many / one - 3.7).abs() < 1e-12 * 3.7, "{det}");
        }
        let ncd = noncentrality(DetectorKind::Ncd, &truth, &comp, 1.0, 1.0)
            .unwrap()
            .lambda;
        let x =
            crate::scene::noise_free_mf_output(&sc, &err, &wf(), Complex64::new(1.0, 0.0)).unwrap();
        let direct = 2.0 * x.iter().map(|v| v.norm_squared()).sum::<f64>();
        assert!((ncd - direct).abs() < 1e-10 * direct);

        // HD never exceeds NCD; CD attains the Cauchy–Schwarz maximum.
        let hd = noncentrality(DetectorKind::Hd, &truth, &comp, 1.0, 1.0)
            .unwrap()
            .lambda;
        let cd = noncentrality(DetectorKind::Cd, &truth, &comp, 1.0, 1.0)
            .unwrap()
            .lambda;
        assert!(hd <= ncd * (1.0 + 1e-12));
        assert!((cd - ncd).abs() < 1e-9 * ncd);
    }

    #[test]
    fn single_tx_noncentralities_coincide() {
        let sc = Scenario {
            num_tx: 1,
            tau_s: vec![vec![0.4 * TP]],
            doppler_hz: vec![vec![120.0]],
            psi_rad: vec![vec![1.3]],
            tx_amplitude: vec![1.5],
            channel_gain: vec![vec![0.8]],
            ..reference_scenario()
        };
        let wf = WaveformSet::multi_band(1, 400e3, TP, 3.0).unwrap();
        let truth = PathModel::build(&sc, &SyncErrors::zeros(1, 1), &wf).unwrap();
        let comp = CompensationSet::exact(&sc, &wf).unwrap();
        let expect = 2.0 * 0.7 * (1.5f64 * 0.8).powi(2) * 12.0;
        for det in [
            DetectorKind::Ncd,
            DetectorKind::Acd,
            DetectorKind::Cd,
            DetectorKind::Hd,
        ] {
            let l = noncentrality(det, &truth, &comp, 1.0, 0.7).unwrap().lambda;
            assert!((l - expect).abs() < 1e-9 * expect, "{det}: {l}");
        }
    }

    #[test]
    fn timing_error_only_loses_energy() {
        let sc = reference_scenario();
        let wf = wf();
        let base: Vec<f64> = DetectorKind::ALL
            .iter()
            .map(|&d| {
                evaluate_scene(d, &sc, &SyncErrors::zeros(2, 1), &wf, p(1e-4))
                    .unwrap()
                    .lambda
            })
            .collect();
        for dt in [0.02, 0.05, 0.1] {
            let mut err = SyncErrors::zeros(2, 1);
            err.timing_s = vec![vec![dt * TP], vec![dt * TP]];
            for (i, &d) in DetectorKind::ALL.iter().enumerate() {
                let l = evaluate_scene(d, &sc, &err, &wf, p(1e-4)).unwrap().lambda;
                assert!(
                    l <= base[i] * (1.0 + 1e-9),
                    "{d} dt={dt}: {l} > {}",
                    base[i]
                );
            }
        }
    }

    #[test]
    fn perf_point_invariants() {
        let mut sc = reference_scenario();
        sc.target = TargetModel::NonFluctuating {
            alpha: Complex64::new(0.6, 0.8),
        };
        for det in DetectorKind::ALL {
            let pt = evaluate_scene(det, &sc, &SyncErrors::zeros(2, 1), &wf(), p(1e-4)).unwrap();
            assert!(pt.lambda >= 0.0);
            assert!(pt.pd.value() >= pt.pfa.value());
            assert!(((pt.pfa.value() - 1e-4) / 1e-4).abs() < 1e-10);
            assert_eq!(pt.varsigma.is_some(), det == DetectorKind::Cd);
        }
    }
}
