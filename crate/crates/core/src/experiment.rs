//! Experiment files: a scene, injected sync errors, a waveform family and a
//! one-dimensional sweep, evaluated analytically or by simulation.
//!
//! Files are JSON with absolute units in the field names. Sweep ranges are
//! absolute too (dB, seconds, radians, Hz); result rows carry both the
//! absolute value and the value normalized by dB, T_p, π or PRF.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::analysis::{evaluate, PerfPoint};
use crate::detectors::{CompensationSet, DetectorKind};
use crate::error::{invalid, Result};
use crate::montecarlo::{run_trials, EmpiricalResult, Hypothesis, TargetDraw, TrialConfig};
use crate::scene::{colocated_scenario, PathModel, Scenario, SyncErrors, TargetModel};
use crate::specfun::Probability;
use crate::waveforms::{caf_grid, CafValue, WaveformSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveformConfig {
    MultiBand {
        bandwidth_hz: f64,
        duration_s: f64,
        band_gap: f64,
    },
    SingleBand {
        bandwidth_hz: f64,
        duration_s: f64,
        center_shift: f64,
    },
}

impl WaveformConfig {
    pub fn build(&self, num_tx: usize) -> Result<WaveformSet> {
        match *self {
            WaveformConfig::MultiBand {
                bandwidth_hz,
                duration_s,
                band_gap,
            } => WaveformSet::multi_band(num_tx, bandwidth_hz, duration_s, band_gap),
            WaveformConfig::SingleBand {
                bandwidth_hz,
                duration_s,
                center_shift,
            } => {
                if num_tx != 2 {
                    return Err(invalid(
                        "waveform",
                        format!("single-band chirps need exactly 2 TX, got {num_tx}"),
                    ));
                }
                WaveformSet::single_band(bandwidth_hz, duration_s, center_shift)
            }
        }
    }

    pub fn duration_s(&self) -> f64 {
        match *self {
            WaveformConfig::MultiBand { duration_s, .. }
            | WaveformConfig::SingleBand { duration_s, .. } => duration_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// SNR of `path` minus SNR of `reference_path`, dB.
    SnrOffsetDb,
    /// τ_path − τ_ref in seconds.
    DelayOffset,
    /// ψ_path − ψ_ref in radians.
    PhaseOffset,
    /// f_path − f_ref in Hz.
    DopplerOffset,
    /// Common SNR of every path, dB.
    SnrDb,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::SnrOffsetDb => "snr_offset_db",
            SweepVariable::DelayOffset => "delay_offset",
            SweepVariable::PhaseOffset => "phase_offset",
            SweepVariable::DopplerOffset => "doppler_offset",
            SweepVariable::SnrDb => "snr_db",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_path() -> [usize; 2] {
    [2, 1]
}

fn default_reference() -> [usize; 2] {
    [1, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Swept path as 1-based `[tx, rx]`.
    #[serde(default = "default_path")]
    pub path: [usize; 2],
    #[serde(default = "default_reference")]
    pub reference_path: [usize; 2],
    /// Common per-path SNR applied before the sweep variable; when absent
    /// the scenario's own channel gains are used.
    #[serde(default)]
    pub base_snr_db: Option<f64>,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        (0..self.points)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CafSpec {
    pub delay_min_s: f64,
    pub delay_max_s: f64,
    pub delay_points: usize,
    #[serde(default = "zero_doppler")]
    pub doppler_hz: Vec<f64>,
}

fn zero_doppler() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub caf_csv: Option<String>,
    #[serde(default)]
    pub analyze_csv: Option<String>,
    #[serde(default)]
    pub simulate_csv: Option<String>,
}

fn default_detectors() -> Vec<DetectorKind> {
    DetectorKind::ALL.to_vec()
}

fn default_pfa() -> Probability {
    Probability::new(1e-4).expect("constant")
}

fn default_trials() -> u64 {
    100_000
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    #[serde(default)]
    pub errors: Option<SyncErrors>,
    pub waveform: WaveformConfig,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorKind>,
    #[serde(default = "default_pfa")]
    pub pfa_target: Probability,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Also evaluate every point with the sync errors removed.
    #[serde(default)]
    pub include_error_free: bool,
    /// Also evaluate the synchronous orthogonal co-located counterpart.
    #[serde(default)]
    pub colocated_benchmark: bool,
    #[serde(default)]
    pub caf: Option<CafSpec>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| invalid("experiment", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.errors().validate_for(&self.scenario)?;
        self.waveform.build(self.scenario.num_tx)?;
        if !self.pfa_target.is_interior() {
            return Err(invalid(
                "experiment",
                "pfa_target must lie strictly between 0 and 1",
            ));
        }
        if self.detectors.is_empty() {
            return Err(invalid("experiment", "detectors must not be empty"));
        }
        if self.trials == 0 {
            return Err(invalid("experiment", "trials must be at least 1"));
        }
        if let Some(sw) = &self.sweep {
            if !(sw.start.is_finite() && sw.stop.is_finite()) {
                return Err(invalid("sweep", "start and stop must be finite"));
            }
            if sw.points < 2 {
                return Err(invalid("sweep", "points must be at least 2"));
            }
            let (m, n) = (self.scenario.num_tx, self.scenario.num_rx);
            for (name, p) in [("path", sw.path), ("reference_path", sw.reference_path)] {
                if !(1..=m).contains(&p[0]) || !(1..=n).contains(&p[1]) {
                    return Err(invalid(
                        "sweep",
                        format!("{name} {p:?} is outside the {m}x{n} scene (1-based [tx, rx])"),
                    ));
                }
            }
            if sw.variable != SweepVariable::SnrDb && sw.path == sw.reference_path {
                return Err(invalid(
                    "sweep",
                    "path and reference_path must differ for offset sweeps",
                ));
            }
            if sw.base_snr_db.is_some_and(|v| !v.is_finite()) {
                return Err(invalid("sweep", "base_snr_db must be finite"));
            }
            // Every point must produce a valid scene.
            for v in sw.values() {
                self.scene_at(v)?;
            }
        }
        if let Some(c) = &self.caf {
            if !(c.delay_min_s.is_finite() && c.delay_max_s.is_finite()) || c.delay_points < 2 {
                return Err(invalid(
                    "caf",
                    "need a finite delay range and at least 2 delay points",
                ));
            }
            if c.doppler_hz.is_empty() || c.doppler_hz.iter().any(|f| !f.is_finite()) {
                return Err(invalid("caf", "doppler_hz must list finite values"));
            }
        }
        Ok(())
    }

    pub fn errors(&self) -> SyncErrors {
        self.errors
            .clone()
            .unwrap_or_else(|| SyncErrors::zeros(self.scenario.num_tx, self.scenario.num_rx))
    }

    pub fn waveforms(&self) -> Result<WaveformSet> {
        self.waveform.build(self.scenario.num_tx)
    }

    fn sweep(&self) -> Result<&SweepSpec> {
        self.sweep
            .as_ref()
            .ok_or_else(|| invalid("experiment", "a sweep section is required for this command"))
    }

    /// The scenario at sweep value `value` (absolute units).
    ///
    /// Delay offsets that would make a delay negative shift every delay at
    /// that RX up by the same amount; a common delay is a global phase and
    /// leaves all detectors unchanged.
    pub fn scene_at(&self, value: f64) -> Result<Scenario> {
        let sw = self.sweep()?;
        let mut sc = self.scenario.clone();
        if let Some(base) = sw.base_snr_db {
            sc.set_uniform_snr_db(base)?;
        }
        let (pm, pn) = (sw.path[0] - 1, sw.path[1] - 1);
        let (rm, rn) = (sw.reference_path[0] - 1, sw.reference_path[1] - 1);
        match sw.variable {
            SweepVariable::SnrDb => sc.set_uniform_snr_db(value)?,
            SweepVariable::SnrOffsetDb => {
                let reference = 10.0 * sc.path_snr(rm, rn).log10();
                sc.set_path_snr_db(pm, pn, reference + value)?;
            }
            SweepVariable::PhaseOffset => sc.psi_rad[pm][pn] = sc.psi_rad[rm][rn] + value,
            SweepVariable::DopplerOffset => sc.doppler_hz[pm][pn] = sc.doppler_hz[rm][rn] + value,
            SweepVariable::DelayOffset => {
                let tau = sc.tau_s[rm][rn] + value;
                sc.tau_s[pm][pn] = tau;
                if tau < 0.0 {
                    for row in sc.tau_s.iter_mut() {
                        row[pn] -= tau;
                    }
                }
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn normalize(&self, value: f64) -> f64 {
        match self.sweep.as_ref().map(|s| s.variable) {
            Some(SweepVariable::DelayOffset) => value / self.waveform.duration_s(),
            Some(SweepVariable::PhaseOffset) => value / PI,
            Some(SweepVariable::DopplerOffset) => value * self.scenario.pri_s,
            _ => value,
        }
    }
}

/// Which variant of the scene a result row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// The scene with the configured sync errors.
    Distributed,
    /// The same scene with the sync errors removed.
    ErrorFree,
    /// Synchronous orthogonal co-located benchmark.
    Colocated,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Distributed => "distributed",
            Case::ErrorFree => "error_free",
            Case::Colocated => "colocated",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRow {
    pub sweep_var: SweepVariable,
    pub sweep_value: f64,
    pub sweep_value_normalized: f64,
    pub case: Case,
    pub detector: DetectorKind,
    /// The operating point, or why this detector is undefined here.
    pub point: std::result::Result<PerfPoint, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRow {
    pub analytic: AnalyticRow,
    pub empirical: Option<EmpiricalResult>,
    pub seed: u64,
}

impl SimulatedRow {
    /// `|analytic − empirical|` against `max(3σ_binomial(P_d), ci_halfwidth)`;
    /// `None` when the row has no simulation.
    pub fn within_gate(&self) -> Option<bool> {
        let (pt, emp) = (self.analytic.point.as_ref().ok()?, self.empirical.as_ref()?);
        let pd = pt.pd.value();
        let sigma3 = 3.0 * (pd * (1.0 - pd) / emp.trials as f64).sqrt();
        let gate = sigma3.max(emp.ci_halfwidth);
        Some((pd - emp.p_hat.value()).abs() <= gate)
    }
}

struct CaseScene {
    case: Case,
    scenario: Scenario,
    errors: SyncErrors,
}

impl ExperimentSpec {
    fn cases_at(&self, value: f64) -> Result<Vec<CaseScene>> {
        let sc = self.scene_at(value)?;
        let zero = SyncErrors::zeros(sc.num_tx, sc.num_rx);
        let mut out = vec![CaseScene {
            case: Case::Distributed,
            scenario: sc.clone(),
            errors: self.errors(),
        }];
        if self.include_error_free {
            out.push(CaseScene {
                case: Case::ErrorFree,
                scenario: sc.clone(),
                errors: zero.clone(),
            });
        }
        if self.colocated_benchmark {
            out.push(CaseScene {
                case: Case::Colocated,
                scenario: colocated_scenario(&sc),
                errors: zero,
            });
        }
        Ok(out)
    }

    fn rows_for(
        &self,
        value: f64,
        cs: &CaseScene,
        truth: &PathModel,
        comp: &CompensationSet,
    ) -> Vec<AnalyticRow> {
        let sw = self.sweep.as_ref().expect("checked by caller");
        self.detectors
            .iter()
            .map(|&det| AnalyticRow {
                sweep_var: sw.variable,
                sweep_value: value,
                sweep_value_normalized: self.normalize(value),
                case: cs.case,
                detector: det,
                point: evaluate(det, truth, comp, &cs.scenario, self.pfa_target)
                    .map_err(|e| e.to_string()),
            })
            .collect()
    }

    /// Analytic rows in sweep order, then case, then detector order.
    pub fn analyze(&self) -> Result<Vec<AnalyticRow>> {
        let wf = self.waveforms()?;
        let values = self.sweep()?.values();
        let blocks = values
            .par_iter()
            .map(|&v| {
                let mut rows = Vec::new();
                for cs in self.cases_at(v)? {
                    let truth = PathModel::build(&cs.scenario, &cs.errors, &wf)?;
                    let comp = CompensationSet::new(&cs.scenario, &cs.errors, &wf)?;
                    rows.extend(self.rows_for(v, &cs, &truth, &comp));
                }
                Ok(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(blocks.into_iter().flatten().collect())
    }

    /// Analytic rows joined with Monte Carlo estimates at the analytic
    /// thresholds. Every sweep point and case uses the same seed.
    pub fn simulate(&self) -> Result<Vec<SimulatedRow>> {
        let wf = self.waveforms()?;
        let values = self.sweep()?.values();
        let mut out = Vec::new();
        for v in values {
            for cs in self.cases_at(v)? {
                let truth = PathModel::build(&cs.scenario, &cs.errors, &wf)?;
                let comp = CompensationSet::new(&cs.scenario, &cs.errors, &wf)?;
                let rows = self.rows_for(v, &cs, &truth, &comp);
                let thresholds: Vec<(DetectorKind, f64)> = rows
                    .iter()
                    .filter_map(|r| r.point.as_ref().ok().map(|p| (p.detector, p.gamma)))
                    .collect();
                let target = match cs.scenario.target {
                    TargetModel::Swerling1 { rho_bar } => TargetDraw::Swerling1 { rho_bar },
                    TargetModel::NonFluctuating { alpha } => TargetDraw::Fixed(alpha),
                };
                let cfg = TrialConfig {
                    trials: self.trials,
                    seed: self.seed,
                    hypothesis: Hypothesis::H1,
                    target,
                };
                let mut emp = if thresholds.is_empty() {
                    Vec::new()
                } else {
                    run_trials(&truth, &comp, cs.scenario.noise_power, &thresholds, &cfg)?
                }
                .into_iter();
                for row in rows {
                    let empirical = if row.point.is_ok() { emp.next() } else { None };
                    out.push(SimulatedRow {
                        analytic: row,
                        empirical,
                        seed: self.seed,
                    });
                }
            }
        }
        Ok(out)
    }

    /// CAF samples for every ordered waveform pair, in pair order then
    /// delay-major order.
    pub fn caf_rows(&self) -> Result<Vec<CafRow>> {
        let wf = self.waveforms()?;
        let tp = wf.pulse_duration();
        let c = self.caf.clone().unwrap_or(CafSpec {
            delay_min_s: -tp,
            delay_max_s: tp,
            delay_points: 401,
            doppler_hz: zero_doppler(),
        });
        let mut rows = Vec::new();
        for m in 0..wf.len() {
            for mbar in 0..wf.len() {
                for &f in &c.doppler_hz {
                    let grid = caf_grid(
                        &wf.pulses()[m],
                        &wf.pulses()[mbar],
                        (c.delay_min_s, c.delay_max_s),
                        (f, f),
                        c.delay_points,
                        1,
                    )?;
                    for (i, &nu) in grid.delays_s.iter().enumerate() {
                        rows.push(CafRow {
                            m: m + 1,
                            mbar: mbar + 1,
                            nu_over_tp: nu / tp,
                            f_hz: f,
                            value: grid.get(i, 0),
                        });
                    }
                }
            }
        }
        Ok(rows)
    }
}

/// One CAF sample; `m` and `mbar` are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CafRow {
    pub m: usize,
    pub mbar: usize,
    pub nu_over_tp: f64,
    pub f_hz: f64,
    pub value: CafValue,
}

/// The reference two-TX scene with the given waveform, ready for a sweep.
pub fn reference_experiment(waveform: WaveformConfig, sweep: SweepSpec) -> ExperimentSpec {
    ExperimentSpec {
        scenario: crate::scene::reference_scenario(),
        errors: None,
        waveform,
        sweep: Some(sweep),
        detectors: default_detectors(),
        pfa_target: default_pfa(),
        trials: default_trials(),
        seed: default_seed(),
        include_error_free: false,
        colocated_benchmark: false,
        caf: None,
        outputs: Outputs::default(),
    }
}

pub const MULTI_BAND: WaveformConfig = WaveformConfig::MultiBand {
    bandwidth_hz: 400e3,
    duration_s: 1e-5,
    band_gap: 3.0,
};

pub const SINGLE_BAND: WaveformConfig = WaveformConfig::SingleBand {
    bandwidth_hz: 400e3,
    duration_s: 1e-5,
    center_shift: 3.0,
};

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(variable: SweepVariable, start: f64, stop: f64, points: usize) -> SweepSpec {
        SweepSpec {
            variable,
            start,
            stop,
            points,
            path: [2, 1],
            reference_path: [1, 1],
            base_snr_db: None,
        }
    }

    #[test]
    fn sweep_values_include_endpoints() {
        let v = sweep(SweepVariable::SnrDb, -10.0, 10.0, 5).values();
        assert_eq!(v, vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
    }

    #[test]
    fn snr_offset_is_relative_to_reference_path() {
        let x = reference_experiment(MULTI_BAND, sweep(SweepVariable::SnrOffsetDb, -6.0, 6.0, 3));
        let sc = x.scene_at(-6.0).unwrap();
        let diff = 10.0 * (sc.path_snr(1, 0) / sc.path_snr(0, 0)).log10();
        assert!((diff + 6.0).abs() < 1e-9);
    }

    #[test]
    fn negative_delay_shifts_whole_rx() {
        let x = reference_experiment(
            MULTI_BAND,
            sweep(SweepVariable::DelayOffset, -1e-5, 1e-5, 3),
        );
        let base = x.scenario.tau_s[0][0];
        let sc = x.scene_at(-base - 2e-6).unwrap();
        assert!(sc.tau_s.iter().all(|r| r[0] >= 0.0));
        assert!((sc.tau_s[1][0] - sc.tau_s[0][0] + base + 2e-6).abs() < 1e-15);
    }

    #[test]
    fn normalization_per_variable() {
        let mut x =
            reference_experiment(MULTI_BAND, sweep(SweepVariable::PhaseOffset, 0.0, 1.0, 2));
        assert!((x.normalize(PI) - 1.0).abs() < 1e-15);
        x.sweep = Some(sweep(SweepVariable::DelayOffset, 0.0, 1.0, 2));
        assert!((x.normalize(5e-6) - 0.5).abs() < 1e-12);
        x.sweep = Some(sweep(SweepVariable::SnrDb, 0.0, 1.0, 2));
        assert_eq!(x.normalize(3.0), 3.0);
    }

    #[test]
    fn validation_rejects_bad_sections() {
        let good = reference_experiment(MULTI_BAND, sweep(SweepVariable::SnrDb, 0.0, 1.0, 2));
        good.validate().unwrap();
        let mut x = good.clone();
        x.sweep.as_mut().unwrap().points = 1;
        assert!(x.validate().is_err());
        let mut x = good.clone();
        x.sweep.as_mut().unwrap().path = [3, 1];
        assert!(x.validate().is_err());
        let mut x = good.clone();
        x.detectors.clear();
        assert!(x.validate().is_err());
        let mut x = good;
        x.trials = 0;
        assert!(x.validate().is_err());
    }

    #[test]
    fn single_band_needs_two_tx() {
        assert!(SINGLE_BAND.build(3).is_err());
        assert_eq!(SINGLE_BAND.build(2).unwrap().len(), 2);
    }

    #[test]
    fn analyze_row_order_and_cases() {
        let mut x = reference_experiment(MULTI_BAND, sweep(SweepVariable::SnrDb, 0.0, 5.0, 2));
        x.colocated_benchmark = true;
        x.include_error_free = true;
        let rows = x.analyze().unwrap();
        assert_eq!(rows.len(), 2 * 3 * 4);
        assert_eq!(rows[0].case, Case::Distributed);
        assert_eq!(rows[4].case, Case::ErrorFree);
        assert_eq!(rows[8].case, Case::Colocated);
        assert_eq!(rows[12].sweep_value, 5.0);
        assert_eq!(rows[1].detector, DetectorKind::Acd);
    }

    #[test]
    fn simulate_gate_holds_on_small_run() {
        let mut x = reference_experiment(MULTI_BAND, sweep(SweepVariable::SnrDb, 0.0, 5.0, 2));
        x.trials = 20_000;
        let rows = x.simulate().unwrap();
        assert!(rows.iter().all(|r| r.within_gate() == Some(true)));
    }

    #[test]
    fn caf_rows_cover_all_pairs() {
        let mut x = reference_experiment(MULTI_BAND, sweep(SweepVariable::SnrDb, 0.0, 1.0, 2));
        x.caf = Some(CafSpec {
            delay_min_s: -1e-5,
            delay_max_s: 1e-5,
            delay_points: 5,
            doppler_hz: vec![0.0, 1e3],
        });
        let rows = x.caf_rows().unwrap();
        assert_eq!(rows.len(), 4 * 2 * 5);
        let peak = rows
            .iter()
            .find(|r| r.m == 1 && r.mbar == 1 && r.nu_over_tp == 0.0 && r.f_hz == 0.0)
            .unwrap();
        assert!((peak.value.norm() - 1.0).abs() < 1e-9);
    }
}
