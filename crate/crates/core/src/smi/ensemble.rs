use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, SpectralDecomposition};

/// Commutator tolerance for the dephasing-kind base Hamiltonian.
pub const COMMUTE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// Every slice equals the base Hamiltonian.
    ZeroNoise,
    /// Independent white-noise weights on the eigenprojectors of the observable.
    Dephasing,
    /// Independent GUE perturbations per slice.
    GuePerturbed,
}

impl EnsembleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnsembleKind::ZeroNoise => "zero-noise",
            EnsembleKind::Dephasing => "dephasing",
            EnsembleKind::GuePerturbed => "gue-perturbed",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-noise" => Ok(EnsembleKind::ZeroNoise),
            "dephasing" => Ok(EnsembleKind::Dephasing),
            "gue-perturbed" => Ok(EnsembleKind::GuePerturbed),
            other => Err(Error::config(format!(
                "unknown ensemble kind {other:?} (expected zero-noise, dephasing or gue-perturbed)"
            ))),
        }
    }
}

/// Parameters of the trajectory ensemble for the system Hamiltonian.
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    kind: EnsembleKind,
    lambda: f64,
    base: HermitianOperator,
    total: Option<HermitianOperator>,
    measurement: Option<SpectralDecomposition>,
}

impl EnsembleSpec {
    pub fn new(
        kind: EnsembleKind,
        lambda: f64,
        base: HermitianOperator,
        measurement: Option<SpectralDecomposition>,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::config(format!("ensemble.lambda must satisfy lambda >= 0, got {lambda}")));
        }
        match kind {
            EnsembleKind::ZeroNoise if lambda != 0.0 => {
                return Err(Error::config(format!("zero-noise ensemble requires lambda = 0, got {lambda}")));
            }
            EnsembleKind::Dephasing => {
                let basis = measurement
                    .as_ref()
                    .ok_or_else(|| Error::config("dephasing ensemble needs the observable's spectral decomposition"))?;
                if basis.dim() != base.dim() {
                    return Err(Error::dim(format!(
                        "measurement basis has dimension {}, base Hamiltonian {}",
                        basis.dim(),
                        base.dim()
                    )));
                }
                for (i, p) in basis.projectors().iter().enumerate() {
                    let c = base.commutator_norm(p);
                    if c > COMMUTE_TOL {
                        return Err(Error::config(format!(
                            "dephasing base Hamiltonian does not commute with projector {i}: |[H, P]| = {c:e}"
                        )));
                    }
                }
            }
            _ => {}
        }
        if let Some(m) = &measurement {
            if m.dim() != base.dim() {
                return Err(Error::dim("measurement basis and base Hamiltonian differ in dimension"));
            }
        }
        Ok(Self { kind, lambda, base, total: None, measurement })
    }

    pub fn zero_noise(base: HermitianOperator) -> Self {
        Self { kind: EnsembleKind::ZeroNoise, lambda: 0.0, base, total: None, measurement: None }
    }

    pub fn dephasing(lambda: f64, base: HermitianOperator, measurement: SpectralDecomposition) -> Result<Self> {
        Self::new(EnsembleKind::Dephasing, lambda, base, Some(measurement))
    }

    pub fn gue_perturbed(lambda: f64, base: HermitianOperator) -> Result<Self> {
        Self::new(EnsembleKind::GuePerturbed, lambda, base, None)
    }

    /// Attach the conserved total Hamiltonian used for complements.
    pub fn with_total(mut self, total: HermitianOperator) -> Result<Self> {
        if total.dim() != self.base.dim() {
            return Err(Error::dim("total Hamiltonian and base Hamiltonian differ in dimension"));
        }
        self.total = Some(total);
        Ok(self)
    }

    /// Attach the observable's decomposition (used for basis-aware metrics).
    pub fn with_measurement(mut self, measurement: SpectralDecomposition) -> Result<Self> {
        if measurement.dim() != self.base.dim() {
            return Err(Error::dim("measurement basis and base Hamiltonian differ in dimension"));
        }
        self.measurement = Some(measurement);
        Ok(self)
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn base(&self) -> &HermitianOperator {
        &self.base
    }

    pub fn total(&self) -> Option<&HermitianOperator> {
        self.total.as_ref()
    }

    pub fn measurement(&self) -> Option<&SpectralDecomposition> {
        self.measurement.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Same ensemble with a different strength.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut s = Self::new(self.kind, lambda, self.base.clone(), self.measurement.clone())?;
        s.total = self.total.clone();
        Ok(s)
    }
}
