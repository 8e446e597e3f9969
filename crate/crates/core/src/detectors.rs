//! The four test statistics and the least-squares amplitude estimates
//! behind the coherent and hybrid GLRTs.

use nalgebra::linalg::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::scene::{CMatrix, CVector, PathModel, Scenario, SyncErrors};
use crate::waveforms::WaveformSet;

/// Below this reciprocal condition number the Doppler subspace is treated
/// as rank deficient.
pub const RCOND_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "NCD", alias = "ncd")]
    Ncd,
    #[serde(rename = "ACD", alias = "acd")]
    Acd,
    #[serde(rename = "CD", alias = "cd")]
    Cd,
    #[serde(rename = "HD", alias = "hd")]
    Hd,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::Ncd,
        DetectorKind::Acd,
        DetectorKind::Cd,
        DetectorKind::Hd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Ncd => "NCD",
            DetectorKind::Acd => "ACD",
            DetectorKind::Cd => "CD",
            DetectorKind::Hd => "HD",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NCD" => Ok(DetectorKind::Ncd),
            "ACD" => Ok(DetectorKind::Acd),
            "CD" => Ok(DetectorKind::Cd),
            "HD" => Ok(DetectorKind::Hd),
            _ => Err(Error::Argument(format!(
                "unknown detector '{s}' (expected NCD, ACD, CD or HD)"
            ))),
        }
    }
}

/// Received slow-time vectors y_mn, stored flat at `m * num_rx + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    num_tx: usize,
    num_rx: usize,
    paths: Vec<CVector>,
}

impl Measurement {
    pub fn new(num_tx: usize, num_rx: usize, paths: Vec<CVector>) -> Result<Self> {
        if num_tx == 0 || num_rx == 0 || paths.len() != num_tx * num_rx {
            return Err(Error::Dimension(format!(
                "expected {} path vectors for {num_tx} TX x {num_rx} RX, got {}",
                num_tx * num_rx,
                paths.len()
            )));
        }
        let k = paths[0].len();
        if k == 0 || paths.iter().any(|p| p.len() != k) {
            return Err(Error::Dimension(
                "path vectors must share one nonzero length".into(),
            ));
        }
        Ok(Measurement {
            num_tx,
            num_rx,
            paths,
        })
    }

    pub fn zeros(num_tx: usize, num_rx: usize, pulses: usize) -> Self {
        Measurement {
            num_tx,
            num_rx,
            paths: vec![CVector::zeros(pulses); num_tx * num_rx],
        }
    }

    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn pulses(&self) -> usize {
        self.paths[0].len()
    }

    pub fn path(&self, m: usize, n: usize) -> &CVector {
        &self.paths[m * self.num_rx + n]
    }

    pub fn paths(&self) -> &[CVector] {
        &self.paths
    }

    pub fn paths_mut(&mut self) -> &mut [CVector] {
        &mut self.paths
    }
}

/// Orthonormal bases Q_n of the estimated Doppler subspaces span(Ŝ_n).
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerSubspace {
    bases: Vec<CMatrix>,
}

impl DopplerSubspace {
    pub fn new(steering: &[CMatrix]) -> Result<Self> {
        let mut bases = Vec::with_capacity(steering.len());
        for (rx, s) in steering.iter().enumerate() {
            let (k, m) = s.shape();
            if k < m {
                return Err(Error::Dimension(format!(
                    "HD needs at least as many pulses as transmitters (K = {k}, M = {m})"
                )));
            }
            let sv = SVD::new(s.clone(), false, false).singular_values;
            let smax = sv.max();
            let smin = sv.min();
            let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
            if !(rcond >= RCOND_MIN) {
                return Err(Error::Conditioning { rx, rcond });
            }
            bases.push(s.clone().qr().q());
        }
        Ok(DopplerSubspace { bases })
    }

    pub fn basis(&self, n: usize) -> &CMatrix {
        &self.bases[n]
    }

    /// ‖P_n y‖² = ‖Q_nᴴ y‖².
    pub fn projected_energy(&self, n: usize, y: &CVector) -> f64 {
        self.bases[n].ad_mul(y).norm_squared()
    }

    pub fn project(&self, n: usize, y: &CVector) -> CVector {
        let q = &self.bases[n];
        q * q.ad_mul(y)
    }
}

/// Receiver-side compensation quantities: the hatted model Ŝ, 𝓧̂, ĥ built
/// from the estimated delays, Dopplers and phases, the phase references
/// θ̂_mnk, and derived templates t̂_mn = Ŝ_n 𝓧̂_mn ĥ_mn.
#[derive(Debug, Clone)]
pub struct CompensationSet {
    model: PathModel,
    theta: Vec<Vec<f64>>,
    derotate: Vec<CVector>,
    templates: Vec<CVector>,
    varsigma: f64,
    subspace: std::result::Result<DopplerSubspace, Error>,
}

impl CompensationSet {
    pub fn new(sc: &Scenario, err: &SyncErrors, wf: &WaveformSet) -> Result<Self> {
        let model = PathModel::templates(sc, err, wf)?;
        let est = sc.estimated(err);
        let mut theta = Vec::with_capacity(sc.num_paths());
        for m in 0..sc.num_tx {
            for n in 0..sc.num_rx {
                let base = est.psi_rad[m][n] - 2.0 * PI * est.carrier_hz * est.tau_s[m][n];
                let step = 2.0 * PI * est.pri_s * est.doppler_hz[m][n];
                theta.push(
                    (0..sc.pulses)
                        .map(|k| base + step * k as f64)
                        .collect::<Vec<_>>(),
                );
            }
        }
        let derotate = theta
            .iter()
            .map(|th| CVector::from_iterator(th.len(), th.iter().map(|t| Complex64::cis(-t))))
            .collect();
        let templates = model.signatures();
        let varsigma = templates.iter().map(|t| t.norm_squared()).sum();
        let subspace = DopplerSubspace::new(model.steering_all());
        Ok(CompensationSet {
            model,
            theta,
            derotate,
            templates,
            varsigma,
            subspace,
        })
    }

    /// Compensation with perfect knowledge of the true scene.
    pub fn exact(sc: &Scenario, wf: &WaveformSet) -> Result<Self> {
        Self::new(sc, &SyncErrors::zeros(sc.num_tx, sc.num_rx), wf)
    }

    pub fn model(&self) -> &PathModel {
        &self.model
    }

    pub fn theta(&self, m: usize, n: usize) -> &[f64] {
        &self.theta[self.model.path_index(m, n)]
    }

    pub fn templates(&self) -> &[CVector] {
        &self.templates
    }

    /// ς = Σ ‖Ŝ_n 𝓧̂_mn ĥ_mn‖².
    pub fn varsigma(&self) -> f64 {
        self.varsigma
    }

    /// Doppler subspace for HD, or the rank/dimension error that makes HD
    /// undefined for this geometry.
    pub fn subspace(&self) -> Result<&DopplerSubspace> {
        self.subspace.as_ref().map_err(Clone::clone)
    }

    pub fn check(&self, y: &Measurement) -> Result<()> {
        if y.num_tx != self.model.num_tx()
            || y.num_rx != self.model.num_rx()
            || y.pulses() != self.model.pulses()
        {
            return Err(Error::Argument(format!(
                "measurement is {}x{}x{} but compensation expects {}x{}x{}",
                y.num_tx,
                y.num_rx,
                y.pulses(),
                self.model.num_tx(),
                self.model.num_rx(),
                self.model.pulses()
            )));
        }
        Ok(())
    }
}

pub fn ncd_statistic(y: &Measurement) -> f64 {
    y.paths.iter().map(|p| p.norm_squared()).sum()
}

/// Panics if `y` and `comp` disagree in shape; see [`CompensationSet::check`].
pub fn acd_statistic(y: &Measurement, comp: &CompensationSet) -> f64 {
    let sum: Complex64 = y
        .paths
        .iter()
        .zip(&comp.derotate)
        .map(|(p, d)| d.transpose() * p)
        .map(|v| v[0])
        .sum();
    sum.norm_sqr()
}

pub fn cd_statistic(y: &Measurement, comp: &CompensationSet) -> f64 {
    let sum: Complex64 = y
        .paths
        .iter()
        .zip(&comp.templates)
        .map(|(p, t)| t.dotc(p))
        .sum();
    sum.norm_sqr()
}

pub fn hd_statistic(y: &Measurement, comp: &CompensationSet) -> Result<f64> {
    let sub = comp.subspace()?;
    Ok(y.paths
        .iter()
        .enumerate()
        .map(|(p, v)| sub.projected_energy(p % y.num_rx, v))
        .sum())
}

pub fn statistic(kind: DetectorKind, y: &Measurement, comp: &CompensationSet) -> Result<f64> {
    comp.check(y)?;
    Ok(match kind {
        DetectorKind::Ncd => ncd_statistic(y),
        DetectorKind::Acd => acd_statistic(y, comp),
        DetectorKind::Cd => cd_statistic(y, comp),
        DetectorKind::Hd => hd_statistic(y, comp)?,
    })
}

/// α̂ = Σ tᴴy / Σ‖t‖² with t_mn = S_n 𝓧_mn h_mn.
pub fn alpha_mle(y: &Measurement, model: &PathModel) -> Result<Complex64> {
    let sig = model.signatures();
    if sig.len() != y.paths.len() || sig[0].len() != y.pulses() {
        return Err(Error::Dimension(
            "measurement does not match the path model".into(),
        ));
    }
    let energy: f64 = sig.iter().map(|t| t.norm_squared()).sum();
    if !(energy > 0.0) {
        return Err(domain("alpha_mle", "template energy is zero"));
    }
    let num: Complex64 = sig.iter().zip(&y.paths).map(|(t, v)| t.dotc(v)).sum();
    Ok(num / energy)
}

/// β̂ = argmin ‖y − Sβ‖, solved through the QR factorization of S.
pub fn beta_mle(y: &CVector, steering: &CMatrix) -> Result<CVector> {
    if y.len() != steering.nrows() {
        return Err(Error::Dimension(format!(
            "vector length {} does not match {} steering rows",
            y.len(),
            steering.nrows()
        )));
    }
    DopplerSubspace::new(std::slice::from_ref(steering))?;
    let qr = steering.clone().qr();
    let rhs = qr.q().ad_mul(y);
    qr.r()
        .solve_upper_triangular(&rhs)
        .ok_or(Error::Conditioning { rx: 0, rcond: 0.0 })
}
