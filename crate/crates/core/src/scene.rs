//! Noise-free matched-filter output model.
//!
//! For TX `m` and RX `n` the K slow-time MF samples factor as
//! `x_mn = α · S_n · X_mn · h_mn`, where `S_n` is the K×M Doppler steering
//! matrix, `X_mn` the diagonal matrix of auto/cross-ambiguity samples and
//! `h_mn` the channel vector. All indices are 0-based here; paths are stored
//! flat at `m * num_rx + n`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, invalid, Error, Result};
use crate::waveforms::WaveformSet;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Target amplitude model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetModel {
    /// Deterministic complex amplitude α, serialized as `[re, im]`.
    NonFluctuating { alpha: Complex64 },
    /// α ~ CN(0, ρ̄), constant within a CPI.
    Swerling1 { rho_bar: f64 },
}

impl TargetModel {
    /// E|α|² (or |α|² for a fixed target).
    pub fn mean_rcs(&self) -> f64 {
        match *self {
            TargetModel::NonFluctuating { alpha } => alpha.norm_sqr(),
            TargetModel::Swerling1 { rho_bar } => rho_bar,
        }
    }
}

/// Geometry and parameters of one distributed MIMO radar scene.
///
/// Per-path arrays are indexed `[m][n]` (TX, RX). Doppler values are the
/// effective Dopplers, with any TX/RX carrier offsets already folded in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub num_tx: usize,
    pub num_rx: usize,
    pub pulses: usize,
    pub pri_s: f64,
    pub carrier_hz: f64,
    pub tau_s: Vec<Vec<f64>>,
    pub doppler_hz: Vec<Vec<f64>>,
    pub psi_rad: Vec<Vec<f64>>,
    pub tx_amplitude: Vec<f64>,
    pub channel_gain: Vec<Vec<f64>>,
    pub noise_power: f64,
    pub target: TargetModel,
    /// Orthogonal co-located benchmark: cross-ambiguity entries forced to 0.
    #[serde(default)]
    pub colocated: bool,
}

fn check_grid(name: &str, v: &[Vec<f64>], m: usize, n: usize) -> Result<()> {
    if v.len() != m || v.iter().any(|row| row.len() != n) {
        return Err(invalid(
            "scenario",
            format!("{name} must be {m}x{n} (indexed [tx][rx])"),
        ));
    }
    if v.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(
            "scenario",
            format!("{name} has non-finite entries"),
        ));
    }
    Ok(())
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.num_tx, self.num_rx);
        if m == 0 || n == 0 || self.pulses == 0 {
            return Err(invalid(
                "scenario",
                "num_tx, num_rx and pulses must be at least 1",
            ));
        }
        if !(self.pri_s.is_finite() && self.pri_s > 0.0) {
            return Err(invalid(
                "scenario",
                format!("pri_s = {} must be positive", self.pri_s),
            ));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz >= 0.0) {
            return Err(invalid(
                "scenario",
                "carrier_hz must be finite and nonnegative",
            ));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(invalid(
                "scenario",
                format!("noise_power = {} must be positive", self.noise_power),
            ));
        }
        check_grid("tau_s", &self.tau_s, m, n)?;
        check_grid("doppler_hz", &self.doppler_hz, m, n)?;
        check_grid("psi_rad", &self.psi_rad, m, n)?;
        check_grid("channel_gain", &self.channel_gain, m, n)?;
        if self.tx_amplitude.len() != m {
            return Err(invalid(
                "scenario",
                format!("tx_amplitude must have {m} entries"),
            ));
        }
        if self
            .tx_amplitude
            .iter()
            .any(|b| !(b.is_finite() && *b >= 0.0))
        {
            return Err(invalid(
                "scenario",
                "tx_amplitude entries must be finite and nonnegative",
            ));
        }
        if self.channel_gain.iter().flatten().any(|g| *g < 0.0) {
            return Err(invalid(
                "scenario",
                "channel_gain entries must be nonnegative",
            ));
        }
        for (i, row) in self.tau_s.iter().enumerate() {
            for (j, &t) in row.iter().enumerate() {
                if t < 0.0 || t >= self.pri_s {
                    return Err(invalid(
                        "scenario",
                        format!("tau_s[{i}][{j}] = {t} must lie in [0, pri_s)"),
                    ));
                }
            }
        }
        match self.target {
            TargetModel::Swerling1 { rho_bar } if !(rho_bar.is_finite() && rho_bar > 0.0) => {
                Err(invalid("scenario", "Swerling rho_bar must be positive"))
            }
            TargetModel::NonFluctuating { alpha }
                if !(alpha.re.is_finite() && alpha.im.is_finite()) =>
            {
                Err(invalid("scenario", "alpha must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn num_paths(&self) -> usize {
        self.num_tx * self.num_rx
    }

    pub fn path_index(&self, m: usize, n: usize) -> usize {
        m * self.num_rx + n
    }

    /// SNR_mn = |b_m ξ_mn|² E|α|² / σ² (linear).
    pub fn path_snr(&self, m: usize, n: usize) -> f64 {
        let a = self.tx_amplitude[m] * self.channel_gain[m][n];
        a * a * self.target.mean_rcs() / self.noise_power
    }

    /// Sets ξ_mn so that path (m, n) has the requested SNR in dB.
    pub fn set_path_snr_db(&mut self, m: usize, n: usize, snr_db: f64) -> Result<()> {
        let b = self.tx_amplitude[m];
        let rcs = self.target.mean_rcs();
        if b <= 0.0 || rcs <= 0.0 {
            return Err(invalid(
                "scenario",
                "SNR can only be set with positive tx_amplitude and target power",
            ));
        }
        let snr = 10f64.powf(snr_db / 10.0);
        self.channel_gain[m][n] = (snr * self.noise_power / rcs).sqrt() / b;
        Ok(())
    }

    pub fn set_uniform_snr_db(&mut self, snr_db: f64) -> Result<()> {
        for m in 0..self.num_tx {
            for n in 0..self.num_rx {
                self.set_path_snr_db(m, n, snr_db)?;
            }
        }
        Ok(())
    }

    /// The receiver's view of the scene: delays, Dopplers and phases
    /// replaced by their estimates τ + Δᵗ, f + Δᶠ, ψ + Δᵖ. Compensation
    /// templates are the error-free model of this scenario.
    pub fn estimated(&self, err: &SyncErrors) -> Scenario {
        let add = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            a.iter()
                .zip(b)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
                .collect()
        };
        Scenario {
            tau_s: add(&self.tau_s, &err.timing_s),
            doppler_hz: add(&self.doppler_hz, &err.freq_hz),
            psi_rad: add(&self.psi_rad, &err.phase_rad),
            ..self.clone()
        }
    }
}

/// Per-path synchronization errors, indexed `[m][n]`, plus the per-RX
/// carrier error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncErrors {
    pub timing_s: Vec<Vec<f64>>,
    pub freq_hz: Vec<Vec<f64>>,
    pub phase_rad: Vec<Vec<f64>>,
    pub rx_carrier_hz: Vec<f64>,
}

impl SyncErrors {
    pub fn zeros(num_tx: usize, num_rx: usize) -> Self {
        SyncErrors {
            timing_s: vec![vec![0.0; num_rx]; num_tx],
            freq_hz: vec![vec![0.0; num_rx]; num_tx],
            phase_rad: vec![vec![0.0; num_rx]; num_tx],
            rx_carrier_hz: vec![0.0; num_rx],
        }
    }

    pub fn validate_for(&self, sc: &Scenario) -> Result<()> {
        let (m, n) = (sc.num_tx, sc.num_rx);
        let grid = |name: &str, v: &[Vec<f64>]| -> Result<()> {
            if v.len() != m || v.iter().any(|r| r.len() != n) {
                return Err(invalid("sync errors", format!("{name} must be {m}x{n}")));
            }
            if v.iter().flatten().any(|x| !x.is_finite()) {
                return Err(invalid(
                    "sync errors",
                    format!("{name} has non-finite entries"),
                ));
            }
            Ok(())
        };
        grid("timing_s", &self.timing_s)?;
        grid("freq_hz", &self.freq_hz)?;
        grid("phase_rad", &self.phase_rad)?;
        if self.rx_carrier_hz.len() != n || self.rx_carrier_hz.iter().any(|x| !x.is_finite()) {
            return Err(invalid(
                "sync errors",
                format!("rx_carrier_hz must have {n} finite entries"),
            ));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.timing_s
            .iter()
            .chain(&self.freq_hz)
            .chain(&self.phase_rad)
            .flatten()
            .chain(&self.rx_carrier_hz)
            .all(|x| *x == 0.0)
    }
}

/// K×M steering matrix with column `j` equal to `[1, e^{j2πT_s f_j}, …]ᵀ`.
pub fn doppler_steering(dopplers_hz: &[f64], pulses: usize, pri_s: f64) -> CMatrix {
    CMatrix::from_fn(pulses, dopplers_hz.len(), |k, j| {
        Complex64::cis(2.0 * PI * k as f64 * pri_s * dopplers_hz[j])
    })
}

/// Diagonal of the ambiguity-function matrix 𝓧_mn:
/// entry m̄ is χ_{m m̄}(τ_mn + Δᵗ_mn − τ_m̄n, f_m̄n − f_mn − Δᶠ_mn).
///
/// In co-located mode the cross entries are zero (orthogonal waveforms at
/// zero offset) and only the auto entry χ_mm(Δᵗ_mn, −Δᶠ_mn) remains.
pub fn af_matrix(sc: &Scenario, err: &SyncErrors, wf: &WaveformSet, m: usize, n: usize) -> CVector {
    let dt = err.timing_s[m][n];
    let df = err.freq_hz[m][n];
    CVector::from_fn(sc.num_tx, |mbar, _| {
        if sc.colocated && mbar != m {
            return Complex64::new(0.0, 0.0);
        }
        let nu = sc.tau_s[m][n] + dt - sc.tau_s[mbar][n];
        let f = sc.doppler_hz[mbar][n] - sc.doppler_hz[m][n] - df;
        wf.ambiguity(m, mbar, nu, f)
    })
}

/// Channel vector h_mn; entry m̄ is
/// `b_m̄ ξ_m̄n e^{jψ_m̄n} e^{−j2π(f_c+Δᶜ_n)τ_m̄n} e^{j2π(f_mn+Δᶠ_mn)(τ_mn+Δᵗ_mn−τ_m̄n)}`.
pub fn channel_vector(sc: &Scenario, err: &SyncErrors, m: usize, n: usize) -> CVector {
    let carrier = sc.carrier_hz + err.rx_carrier_hz[n];
    let f_mf = sc.doppler_hz[m][n] + err.freq_hz[m][n];
    let t_sample = sc.tau_s[m][n] + err.timing_s[m][n];
    CVector::from_fn(sc.num_tx, |mbar, _| {
        let tau = sc.tau_s[mbar][n];
        let amp = sc.tx_amplitude[mbar] * sc.channel_gain[mbar][n];
        let phase =
            sc.psi_rad[mbar][n] - 2.0 * PI * carrier * tau + 2.0 * PI * f_mf * (t_sample - tau);
        Complex64::from_polar(amp, phase)
    })
}

/// The (S_n, 𝓧_mn, h_mn) factorization for every path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathModel {
    num_tx: usize,
    num_rx: usize,
    steering: Vec<CMatrix>,
    ambiguity: Vec<CVector>,
    channel: Vec<CVector>,
}

impl PathModel {
    pub fn build(sc: &Scenario, err: &SyncErrors, wf: &WaveformSet) -> Result<Self> {
        sc.validate()?;
        err.validate_for(sc)?;
        if wf.len() != sc.num_tx {
            return Err(Error::Dimension(format!(
                "scenario has {} TX but the waveform set has {} pulses",
                sc.num_tx,
                wf.len()
            )));
        }
        Ok(Self::build_unchecked(sc, err, wf))
    }

    /// Compensation templates: the error-free model of the receiver's
    /// estimated scene (τ̂, f̂, ψ̂). The RX carrier error is not known to the
    /// receiver and does not enter the templates.
    pub fn templates(sc: &Scenario, err: &SyncErrors, wf: &WaveformSet) -> Result<Self> {
        Self::build(sc, err, wf)?;
        let est = sc.estimated(err);
        Ok(Self::build_unchecked(
            &est,
            &SyncErrors::zeros(sc.num_tx, sc.num_rx),
            wf,
        ))
    }

    fn build_unchecked(sc: &Scenario, err: &SyncErrors, wf: &WaveformSet) -> Self {
        let steering = (0..sc.num_rx)
            .map(|n| {
                let col: Vec<f64> = (0..sc.num_tx).map(|m| sc.doppler_hz[m][n]).collect();
                doppler_steering(&col, sc.pulses, sc.pri_s)
            })
            .collect();
        let mut ambiguity = Vec::with_capacity(sc.num_paths());
        let mut channel = Vec::with_capacity(sc.num_paths());
        for m in 0..sc.num_tx {
            for n in 0..sc.num_rx {
                ambiguity.push(af_matrix(sc, err, wf, m, n));
                channel.push(channel_vector(sc, err, m, n));
            }
        }
        PathModel {
            num_tx: sc.num_tx,
            num_rx: sc.num_rx,
            steering,
            ambiguity,
            channel,
        }
    }

    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn num_paths(&self) -> usize {
        self.num_tx * self.num_rx
    }

    pub fn pulses(&self) -> usize {
        self.steering[0].nrows()
    }

    pub fn path_index(&self, m: usize, n: usize) -> usize {
        m * self.num_rx + n
    }

    /// RX index of a flat path index.
    pub fn rx_of(&self, path: usize) -> usize {
        path % self.num_rx
    }

    pub fn steering(&self, n: usize) -> &CMatrix {
        &self.steering[n]
    }

    pub fn steering_all(&self) -> &[CMatrix] {
        &self.steering
    }

    /// Diagonal entries of 𝓧_mn.
    pub fn ambiguity(&self, m: usize, n: usize) -> &CVector {
        &self.ambiguity[self.path_index(m, n)]
    }

    pub fn channel(&self, m: usize, n: usize) -> &CVector {
        &self.channel[self.path_index(m, n)]
    }

    /// S_n 𝓧_mn h_mn, the unit-amplitude noise-free MF output of a path.
    pub fn signature(&self, m: usize, n: usize) -> CVector {
        let p = self.path_index(m, n);
        &self.steering[n] * self.ambiguity[p].component_mul(&self.channel[p])
    }

    /// All signatures in flat path order.
    pub fn signatures(&self) -> Vec<CVector> {
        (0..self.num_tx)
            .flat_map(|m| (0..self.num_rx).map(move |n| (m, n)))
            .map(|(m, n)| self.signature(m, n))
            .collect()
    }
}

/// x_mn = α S_n 𝓧_mn h_mn for every path, in flat path order.
pub fn noise_free_mf_output(
    sc: &Scenario,
    err: &SyncErrors,
    wf: &WaveformSet,
    alpha: Complex64,
) -> Result<Vec<CVector>> {
    let model = PathModel::build(sc, err, wf)?;
    Ok(model.signatures().into_iter().map(|x| x * alpha).collect())
}

/// One slow-time MF sample x_mn(k) evaluated term by term: the auto term
/// plus the M−1 cross terms. Independent of the matrix factorization.
pub fn slow_time_sample(
    sc: &Scenario,
    err: &SyncErrors,
    wf: &WaveformSet,
    alpha: Complex64,
    m: usize,
    n: usize,
    k: usize,
) -> Complex64 {
    let dt = err.timing_s[m][n];
    let df = err.freq_hz[m][n];
    let carrier = sc.carrier_hz + err.rx_carrier_hz[n];
    let kts = k as f64 * sc.pri_s;
    let f_mn = sc.doppler_hz[m][n];
    let tau_mn = sc.tau_s[m][n];

    let amp = |j: usize| sc.tx_amplitude[j] * sc.channel_gain[j][n];
    let auto = alpha
        * amp(m)
        * Complex64::cis(2.0 * PI * kts * f_mn)
        * wf.ambiguity(m, m, dt, -df)
        * Complex64::cis(-2.0 * PI * carrier * tau_mn)
        * Complex64::cis(2.0 * PI * (f_mn + df) * dt)
        * Complex64::cis(sc.psi_rad[m][n]);
    if sc.colocated {
        return auto;
    }

    let mut cross = Complex64::new(0.0, 0.0);
    for mbar in (0..sc.num_tx).filter(|&j| j != m) {
        let tau_b = sc.tau_s[mbar][n];
        let f_b = sc.doppler_hz[mbar][n];
        let lag = tau_mn + dt - tau_b;
        cross += alpha
            * amp(mbar)
            * Complex64::cis(sc.psi_rad[mbar][n])
            * Complex64::cis(-2.0 * PI * carrier * tau_b)
            * Complex64::cis(2.0 * PI * kts * f_b)
            * wf.ambiguity(m, mbar, lag, f_b - f_mn - df)
            * Complex64::cis(2.0 * PI * (f_mn + df) * lag);
    }
    auto + cross
}

/// Synchronous co-located counterpart of a scene: every path takes the
/// delay, Doppler and phase of path (0, 0) and the cross-ambiguity entries
/// are forced to zero. Amplitudes and gains are kept.
pub fn colocated_scenario(template: &Scenario) -> Scenario {
    let fill = |v: f64| vec![vec![v; template.num_rx]; template.num_tx];
    Scenario {
        tau_s: fill(template.tau_s[0][0]),
        doppler_hz: fill(template.doppler_hz[0][0]),
        psi_rad: fill(template.psi_rad[0][0]),
        colocated: true,
        ..template.clone()
    }
}

/// Bistatic channel coefficient ξ = √(G_r G_t λ² / ((4π)³ R_t² R_r²)).
///
/// The wavelength is taken as given; it is not cross-checked against the
/// scenario carrier.
pub fn link_budget_xi(
    range_tx_m: f64,
    range_rx_m: f64,
    gain_tx: f64,
    gain_rx: f64,
    wavelength_m: f64,
) -> Result<f64> {
    let args = [range_tx_m, range_rx_m, gain_tx, gain_rx, wavelength_m];
    if args.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(domain(
            "link_budget_xi",
            format!("all inputs must be positive, got {args:?}"),
        ));
    }
    let four_pi = 4.0 * PI;
    Ok((gain_rx * gain_tx * wavelength_m * wavelength_m
        / (four_pi.powi(3) * range_tx_m.powi(2) * range_rx_m.powi(2)))
    .sqrt())
}

/// The default two-TX, one-RX scene used throughout the experiments:
/// K = 12 pulses at PRF 500 Hz, 3 GHz carrier, T_p = 10 µs,
/// τ = (0.61, 0.1)·T_p, f = (200, 190) Hz, ψ = (0.1π, 0.3π), σ² = 1 and a
/// Swerling I target with unit mean RCS at 0 dB SNR per path.
pub fn reference_scenario() -> Scenario {
    let tp = 1e-5;
    let mut sc = Scenario {
        num_tx: 2,
        num_rx: 1,
        pulses: 12,
        pri_s: 1.0 / 500.0,
        carrier_hz: 3e9,
        tau_s: vec![vec![0.61 * tp], vec![0.1 * tp]],
        doppler_hz: vec![vec![200.0], vec![190.0]],
        psi_rad: vec![vec![0.1 * PI], vec![0.3 * PI]],
        tx_amplitude: vec![1.0, 1.0],
        channel_gain: vec![vec![1.0], vec![1.0]],
        noise_power: 1.0,
        target: TargetModel::Swerling1 { rho_bar: 1.0 },
        colocated: false,
    };
    sc.set_uniform_snr_db(0.0)
        .expect("reference scenario is valid");
    sc
}
