//! Test pulse envelopes and their cross-ambiguity function.
//!
//! Every pulse supported here is a unit-energy chirp whose phase is a
//! quadratic polynomial in time on `[0, T_p]`, so the CAF integrand
//! `p_a(μ) p_b*(μ-ν) e^{j2πfμ}` is a pure tone with linearly varying
//! frequency over the overlap of the two supports.

mod quadrature;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Value of χ_{a b}(ν, f). Bounded by 1 in magnitude for unit-energy pulses.
pub type CafValue = Complex64;

/// Chirp family of a single pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseFamily {
    /// `e^{jπβ(t²/T_p + η m t)}`; `index` is the 1-based TX index m.
    MultiBandChirp { band_gap: f64, index: usize },
    /// `e^{j(πβt²/T_p + κπβt)}`.
    SingleBandUpChirp { center_shift: f64 },
    /// `e^{j(-πβt²/T_p + 2πβt + κπβt)}`.
    SingleBandDownChirp { center_shift: f64 },
}

/// One transmit pulse envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    #[serde(flatten)]
    pub family: PulseFamily,
    pub bandwidth_hz: f64,
    pub duration_s: f64,
}

impl PulseSpec {
    pub fn multi_band(bandwidth_hz: f64, duration_s: f64, band_gap: f64, index: usize) -> Self {
        PulseSpec {
            family: PulseFamily::MultiBandChirp { band_gap, index },
            bandwidth_hz,
            duration_s,
        }
    }

    pub fn up_chirp(bandwidth_hz: f64, duration_s: f64, center_shift: f64) -> Self {
        PulseSpec {
            family: PulseFamily::SingleBandUpChirp { center_shift },
            bandwidth_hz,
            duration_s,
        }
    }

    pub fn down_chirp(bandwidth_hz: f64, duration_s: f64, center_shift: f64) -> Self {
        PulseSpec {
            family: PulseFamily::SingleBandDownChirp { center_shift },
            bandwidth_hz,
            duration_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.bandwidth_hz) {
            return Err(invalid(
                "pulse",
                format!("bandwidth {} must be positive", self.bandwidth_hz),
            ));
        }
        if !positive(self.duration_s) {
            return Err(invalid(
                "pulse",
                format!("duration {} must be positive", self.duration_s),
            ));
        }
        match self.family {
            PulseFamily::MultiBandChirp { band_gap, index } => {
                if !(band_gap.is_finite() && band_gap >= 0.0) {
                    return Err(invalid(
                        "pulse",
                        format!("band gap {band_gap} must be nonnegative"),
                    ));
                }
                if index == 0 {
                    return Err(invalid("pulse", "multi-band TX index is 1-based"));
                }
            }
            PulseFamily::SingleBandUpChirp { center_shift }
            | PulseFamily::SingleBandDownChirp { center_shift } => {
                if !(center_shift.is_finite() && center_shift >= 0.0) {
                    return Err(invalid(
                        "pulse",
                        format!("center shift {center_shift} must be nonnegative"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Phase coefficients `(c2, c1)` with phase(t) = c2 t² + c1 t on the support.
    fn phase_coefficients(&self) -> (f64, f64) {
        let beta = self.bandwidth_hz;
        let tp = self.duration_s;
        match self.family {
            PulseFamily::MultiBandChirp { band_gap, index } => {
                (PI * beta / tp, PI * beta * band_gap * index as f64)
            }
            PulseFamily::SingleBandUpChirp { center_shift } => {
                (PI * beta / tp, center_shift * PI * beta)
            }
            PulseFamily::SingleBandDownChirp { center_shift } => {
                (-PI * beta / tp, 2.0 * PI * beta + center_shift * PI * beta)
            }
        }
    }
}

/// Complex envelope p(t); zero outside `[0, T_p]`.
pub fn sample_pulse(spec: &PulseSpec, t: f64) -> Complex64 {
    if !(0.0..=spec.duration_s).contains(&t) {
        return Complex64::new(0.0, 0.0);
    }
    let (c2, c1) = spec.phase_coefficients();
    Complex64::from_polar(1.0 / spec.duration_s.sqrt(), c2 * t * t + c1 * t)
}

/// Cross-ambiguity function χ_{ab}(ν, f) = ∫ p_a(μ) p_b*(μ-ν) e^{j2πfμ} dμ.
///
/// Exactly zero when the supports do not overlap (`|ν| ≥ T_p`). Otherwise
/// the overlap is split into 16-point Gauss–Legendre panels, at least two
/// per cycle of the integrand and never fewer than
/// `ceil(10·T_p·(β + |f| + f_offset))` nodes overall.
pub fn caf(a: &PulseSpec, b: &PulseSpec, nu: f64, f: f64) -> CafValue {
    caf_refined(a, b, nu, f, 1)
}

/// [`caf`] with the panel count multiplied by `refine`; used to check
/// quadrature convergence.
pub fn caf_refined(a: &PulseSpec, b: &PulseSpec, nu: f64, f: f64, refine: usize) -> CafValue {
    let lo = nu.max(0.0);
    let hi = a.duration_s.min(b.duration_s + nu);
    if !(hi > lo) || !nu.is_finite() || !f.is_finite() {
        return Complex64::new(0.0, 0.0);
    }

    // Φ(μ) = φ_a(μ) - φ_b(μ - ν) + 2πfμ = q2 μ² + q1 μ + q0
    let (a2, a1) = a.phase_coefficients();
    let (b2, b1) = b.phase_coefficients();
    let q2 = a2 - b2;
    let q1 = a1 + 2.0 * b2 * nu - b1 + 2.0 * PI * f;
    let q0 = -b2 * nu * nu + b1 * nu;
    let amplitude = 1.0 / (a.duration_s * b.duration_s).sqrt();

    let len = hi - lo;
    let slope = (2.0 * q2 * lo + q1).abs().max((2.0 * q2 * hi + q1).abs());
    let cycles = slope * len / (2.0 * PI);
    let offset = a1.abs().max(b1.abs()) / (2.0 * PI);
    let min_nodes = (10.0 * a.duration_s * (a.bandwidth_hz + f.abs() + offset))
        .ceil()
        .max(64.0);
    let panels = ((2.0 * cycles).ceil() as usize)
        .max((min_nodes / quadrature::ORDER as f64).ceil() as usize)
        .max(4)
        * refine.max(1);

    let rule = quadrature::rule();
    let h = len / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        let mut panel = Complex64::new(0.0, 0.0);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let mu = mid + 0.5 * h * x;
            panel += *w * Complex64::cis((q2 * mu + q1) * mu + q0);
        }
        acc += panel;
    }
    acc * (0.5 * h * amplitude)
}

/// `e^{j2πfν} · conj(χ_{ba}(-ν, -f))`, which equals χ_{ab}(ν, f) by a change
/// of variables. Used by the property tests.
pub fn caf_symmetry_partner(a: &PulseSpec, b: &PulseSpec, nu: f64, f: f64) -> CafValue {
    Complex64::cis(2.0 * PI * f * nu) * caf(b, a, -nu, -f).conj()
}

/// CAF samples on a regular delay × Doppler grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CafGrid {
    pub delays_s: Vec<f64>,
    pub dopplers_hz: Vec<f64>,
    /// Row-major: one row per delay, one column per Doppler.
    pub values: Vec<CafValue>,
}

impl CafGrid {
    pub fn get(&self, i_delay: usize, i_doppler: usize) -> CafValue {
        self.values[i_delay * self.dopplers_hz.len() + i_doppler]
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluates [`caf`] on `n_delay × n_doppler` evenly spaced points,
/// endpoints included. A single Doppler point is allowed for zero-Doppler cuts.
pub fn caf_grid(
    a: &PulseSpec,
    b: &PulseSpec,
    delay_range: (f64, f64),
    doppler_range: (f64, f64),
    n_delay: usize,
    n_doppler: usize,
) -> Result<CafGrid> {
    let finite = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite();
    if !finite(delay_range) || !finite(doppler_range) {
        return Err(invalid("CAF grid", "ranges must be finite"));
    }
    if n_delay < 2 || n_doppler < 1 {
        return Err(invalid(
            "CAF grid",
            "need at least 2 delay points and 1 Doppler point",
        ));
    }
    let delays_s = linspace(delay_range.0, delay_range.1, n_delay);
    let dopplers_hz = linspace(doppler_range.0, doppler_range.1, n_doppler);
    let values = (0..n_delay * n_doppler)
        .into_par_iter()
        .map(|i| caf(a, b, delays_s[i / n_doppler], dopplers_hz[i % n_doppler]))
        .collect();
    Ok(CafGrid {
        delays_s,
        dopplers_hz,
        values,
    })
}

/// The M transmit pulses of a radar, indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSet {
    pulses: Vec<PulseSpec>,
}

impl WaveformSet {
    pub fn new(pulses: Vec<PulseSpec>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(invalid("waveform set", "at least one pulse is required"));
        }
        for p in &pulses {
            p.validate()?;
        }
        let tp = pulses[0].duration_s;
        if pulses.iter().any(|p| p.duration_s != tp) {
            return Err(invalid(
                "waveform set",
                "all pulses must share one duration",
            ));
        }
        Ok(WaveformSet { pulses })
    }

    /// M multi-band chirps with indices 1..=M.
    pub fn multi_band(m: usize, bandwidth_hz: f64, duration_s: f64, band_gap: f64) -> Result<Self> {
        Self::new(
            (1..=m)
                .map(|i| PulseSpec::multi_band(bandwidth_hz, duration_s, band_gap, i))
                .collect(),
        )
    }

    /// The up/down single-band chirp pair (M = 2).
    pub fn single_band(bandwidth_hz: f64, duration_s: f64, center_shift: f64) -> Result<Self> {
        Self::new(vec![
            PulseSpec::up_chirp(bandwidth_hz, duration_s, center_shift),
            PulseSpec::down_chirp(bandwidth_hz, duration_s, center_shift),
        ])
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn pulses(&self) -> &[PulseSpec] {
        &self.pulses
    }

    pub fn pulse_duration(&self) -> f64 {
        self.pulses[0].duration_s
    }

    /// χ_{m m̄}(ν, f): MF `m` against waveform `m̄` (both 0-based).
    pub fn ambiguity(&self, m: usize, mbar: usize, nu: f64, f: f64) -> CafValue {
        caf(&self.pulses[m], &self.pulses[mbar], nu, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TP: f64 = 1e-5;
    const BETA: f64 = 400e3;

    fn all_families() -> Vec<PulseSpec> {
        vec![
            PulseSpec::multi_band(BETA, TP, 3.0, 1),
            PulseSpec::multi_band(BETA, TP, 3.0, 2),
            PulseSpec::up_chirp(BETA, TP, 3.0),
            PulseSpec::down_chirp(BETA, TP, 3.0),
        ]
    }

    /// Trapezoid rule on 2^18 + 1 uniformly spaced samples of the pulses.
    fn trapezoid_caf(a: &PulseSpec, b: &PulseSpec, nu: f64, f: f64) -> Complex64 {
        let lo = nu.max(0.0);
        let hi = TP.min(TP + nu);
        if hi <= lo {
            return Complex64::new(0.0, 0.0);
        }
        let n = 1usize << 18;
        let h = (hi - lo) / n as f64;
        // Clamp into the support so rounding at the overlap ends cannot drop a sample.
        let at = |p: &PulseSpec, t: f64| sample_pulse(p, t.clamp(0.0, TP));
        let g = |mu: f64| at(a, mu) * at(b, mu - nu).conj() * Complex64::cis(2.0 * PI * f * mu);
        let mut acc = 0.5 * (g(lo) + g(hi));
        for i in 1..n {
            acc += g(lo + i as f64 * h);
        }
        acc * h
    }

    #[test]
    fn sample_values() {
        let mb = PulseSpec::multi_band(BETA, TP, 3.0, 1);
        let v = sample_pulse(&mb, 0.0);
        assert!((v.re - 316.227_766_016_837_94).abs() < 1e-9 && v.im.abs() < 1e-12);
        assert_eq!(sample_pulse(&mb, -TP / 2.0), Complex64::new(0.0, 0.0));
        assert_eq!(sample_pulse(&mb, 1.5 * TP), Complex64::new(0.0, 0.0));

        let up = PulseSpec::up_chirp(BETA, TP, 3.0);
        let expect = Complex64::cis(PI * BETA * (TP / 4.0 + 3.0 * TP / 2.0)) / TP.sqrt();
        assert!((sample_pulse(&up, TP / 2.0) - expect).norm() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(PulseSpec::multi_band(0.0, TP, 3.0, 1).validate().is_err());
        assert!(PulseSpec::multi_band(BETA, -TP, 3.0, 1).validate().is_err());
        assert!(PulseSpec::multi_band(BETA, TP, -1.0, 1).validate().is_err());
        assert!(PulseSpec::multi_band(BETA, TP, 3.0, 0).validate().is_err());
        assert!(PulseSpec::up_chirp(BETA, TP, -3.0).validate().is_err());
        assert!(WaveformSet::new(vec![]).is_err());
        assert!(WaveformSet::new(vec![
            PulseSpec::up_chirp(BETA, TP, 3.0),
            PulseSpec::down_chirp(BETA, 2.0 * TP, 3.0)
        ])
        .is_err());
    }

    #[test]
    fn unit_energy_by_independent_quadrature() {
        for p in all_families() {
            let n = 200_000;
            let h = TP / n as f64;
            let mut e = 0.5 * (sample_pulse(&p, 0.0).norm_sqr() + sample_pulse(&p, TP).norm_sqr());
            for i in 1..n {
                e += sample_pulse(&p, i as f64 * h).norm_sqr();
            }
            assert!((e * h - 1.0).abs() < 1e-10);
            assert!((caf(&p, &p, 0.0, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn multi_band_pair_orthogonal_at_origin() {
        let w = WaveformSet::multi_band(2, BETA, TP, 3.0).unwrap();
        assert!(w.ambiguity(0, 1, 0.0, 0.0).norm() < 1e-9);
        assert!(w.ambiguity(1, 0, 0.0, 0.0).norm() < 1e-9);
    }

    #[test]
    fn disjoint_support_is_exact_zero() {
        let ps = all_families();
        for a in &ps {
            for b in &ps {
                for &nu in &[TP, -TP, 1.3 * TP, -7.0 * TP] {
                    assert_eq!(caf(a, b, nu, 123.0), Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn single_band_cross_term_matches_trapezoid() {
        let up = PulseSpec::up_chirp(BETA, TP, 3.0);
        let down = PulseSpec::down_chirp(BETA, TP, 3.0);
        for &(nu, f) in &[
            (0.51 * TP, 0.0),
            (0.0, 0.0),
            (-0.3 * TP, -10.0),
            (0.51 * TP, -10.0),
        ] {
            let q = caf(&up, &down, nu, f);
            let t = trapezoid_caf(&up, &down, nu, f);
            assert!((q - t).norm() < 1e-9, "nu={nu} f={f}: {q} vs {t}");
        }
        // Non-orthogonal pair: large cross-ambiguity near zero delay.
        assert!(caf(&up, &down, 0.0, 0.0).norm() > 0.1);
    }

    #[test]
    fn multi_band_cross_term_matches_trapezoid() {
        let a = PulseSpec::multi_band(BETA, TP, 3.0, 1);
        let b = PulseSpec::multi_band(BETA, TP, 3.0, 2);
        for &(nu, f) in &[(0.51 * TP, -10.0), (-0.2 * TP, 200.0), (0.9 * TP, 0.0)] {
            let q = caf(&a, &b, nu, f);
            let t = trapezoid_caf(&a, &b, nu, f);
            assert!((q - t).norm() < 1e-9, "nu={nu} f={f}: {q} vs {t}");
        }
    }

    #[test]
    fn panel_doubling_converged() {
        let ps = all_families();
        for a in &ps {
            for b in &ps {
                for &(nu, f) in &[
                    (0.0, 0.0),
                    (0.51 * TP, -10.0),
                    (-0.77 * TP, 25.0),
                    (0.2 * TP, 500.0),
                ] {
                    let d = caf_refined(a, b, nu, f, 1) - caf_refined(a, b, nu, f, 2);
                    assert!(d.norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn grid_corners_and_pointwise() {
        let a = PulseSpec::multi_band(BETA, TP, 3.0, 1);
        let b = PulseSpec::multi_band(BETA, TP, 3.0, 2);
        let g = caf_grid(&a, &b, (-TP, TP), (-50.0, 50.0), 2, 2).unwrap();
        assert!(g.values.iter().all(|v| v.norm() == 0.0));

        let g = caf_grid(&a, &b, (-0.8 * TP, 0.7 * TP), (-300.0, 300.0), 8, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(g.get(i, j), caf(&a, &b, g.delays_s[i], g.dopplers_hz[j]));
            }
        }
        assert!(caf_grid(&a, &b, (0.0, f64::NAN), (0.0, 0.0), 4, 1).is_err());
        assert!(caf_grid(&a, &b, (0.0, TP), (0.0, 0.0), 1, 1).is_err());
    }

    #[test]
    fn zero_doppler_slice_character() {
        let w = WaveformSet::multi_band(2, BETA, TP, 3.0).unwrap();
        let p = w.pulses();
        let auto = caf_grid(&p[0], &p[0], (-TP, TP), (0.0, 0.0), 201, 1).unwrap();
        let cross = caf_grid(&p[0], &p[1], (-TP, TP), (0.0, 0.0), 201, 1).unwrap();
        let peak = auto.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((auto.get(100, 0).norm() - 1.0).abs() < 1e-9);
        assert!((peak - 1.0).abs() < 1e-9);
        let cross_max = cross.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(cross_max < 0.5, "{cross_max}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn symmetry_identity_and_cauchy_schwarz(
            ia in 0usize..4, ib in 0usize..4,
            nu_frac in -1.2f64..1.2, f in -2000.0f64..2000.0,
        ) {
            let ps = all_families();
            let (a, b) = (&ps[ia], &ps[ib]);
            let nu = nu_frac * TP;
            let v = caf(a, b, nu, f);
            prop_assert!((v - caf_symmetry_partner(a, b, nu, f)).norm() < 1e-8);
            prop_assert!(v.norm() <= 1.0 + 1e-9);
        }
    }
}
