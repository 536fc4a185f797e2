//! Envariance and coarse-graining baseline.
//!
//! The tripartite state `Σ_j |s_{k(j)}⟩|O_j⟩|e_j⟩ / √M` over fine indices
//! `j = 0..M`, with contiguous coarse blocks of sizes `m_k`. With all
//! `m_k = 1` every outcome has probability `1/M`; with general blocks the
//! system outcome `k` has probability `m_k/M`. Probabilities are exact
//! rationals.

use std::collections::BTreeSet;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::StateVector;

pub type Probability = Ratio<u64>;

/// Local dimensions of system, observer and environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TripartiteDims {
    pub system: usize,
    pub observer: usize,
    pub environment: usize,
}

impl TripartiteDims {
    /// Smallest dimensions that hold `coarse` system labels and `fine`
    /// observer/environment labels.
    pub fn minimal(coarse: usize, fine: usize) -> Self {
        Self { system: coarse, observer: fine, environment: fine }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvarianceState {
    multiplicities: Vec<u64>,
    /// `coarse_map[j] = k(j)`.
    coarse_map: Vec<usize>,
    dims: TripartiteDims,
}

impl EnvarianceState {
    fn from_multiplicities(multiplicities: Vec<u64>, dims: TripartiteDims) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(Error::pre("at least one coarse block is required"));
        }
        if let Some(k) = multiplicities.iter().position(|&m| m == 0) {
            return Err(Error::pre(format!("coarse block {k} has multiplicity 0")));
        }
        let coarse_map: Vec<usize> = multiplicities
            .iter()
            .enumerate()
            .flat_map(|(k, &m)| std::iter::repeat_n(k, m as usize))
            .collect();
        let fine = coarse_map.len();
        if dims.system < multiplicities.len() || dims.observer < fine || dims.environment < fine {
            return Err(Error::dim(format!(
                "dims (s={}, o={}, e={}) cannot hold {} coarse and {fine} fine labels",
                dims.system,
                dims.observer,
                dims.environment,
                multiplicities.len()
            )));
        }
        Ok(Self { multiplicities, coarse_map, dims })
    }

    /// `M`.
    pub fn fine_count(&self) -> usize {
        self.coarse_map.len()
    }

    pub fn coarse_count(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    /// `k(j)` for a zero-based fine index.
    pub fn coarse_index(&self, j: usize) -> usize {
        self.coarse_map[j]
    }

    pub fn dims(&self) -> TripartiteDims {
        self.dims
    }

    /// Basis triples `(s, O, e)` carrying amplitude `1/√M`.
    pub fn support(&self) -> Vec<(usize, usize, usize)> {
        self.coarse_map.iter().enumerate().map(|(j, &k)| (k, j, j)).collect()
    }

    /// `Σ |amplitude|² = M · (1/M)`, exactly.
    pub fn norm_squared(&self) -> Probability {
        Ratio::new(1, self.fine_count() as u64) * self.fine_count() as u64
    }

    /// `p(s_{k(j)}, O_j)` for each fine index.
    pub fn outcome_probabilities(&self) -> Vec<Probability> {
        vec![Ratio::new(1, self.fine_count() as u64); self.fine_count()]
    }

    /// Dense state vector on `S ⊗ O ⊗ E` (system slowest).
    pub fn state_vector(&self) -> Result<StateVector> {
        let TripartiteDims { system, observer, environment } = self.dims;
        let len = system * observer * environment;
        if len > 1 << 22 {
            return Err(Error::dim(format!("dense tripartite vector of length {len} is too large")));
        }
        let amp = Complex64::new(1.0 / (self.fine_count() as f64).sqrt(), 0.0);
        let mut v = vec![Complex64::new(0.0, 0.0); len];
        for (s, o, e) in self.support() {
            v[(s * observer + o) * environment + e] = amp;
        }
        StateVector::normalized(v)
    }
}

/// `Σ_j |s_j⟩|O_j⟩|e_j⟩ / √M`.
pub fn build_equal_state(m: usize, dims: TripartiteDims) -> Result<EnvarianceState> {
    if m == 0 {
        return Err(Error::pre("M must be >= 1"));
    }
    EnvarianceState::from_multiplicities(vec![1; m], dims)
}

/// Common-denominator rational approximation `m_k / M` of target weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalApproximation {
    pub target: Vec<f64>,
    pub numerators: Vec<u64>,
    pub denominator: u64,
    pub max_denominator: u64,
    pub achieved_error: f64,
}

impl RationalApproximation {
    pub fn probabilities(&self) -> Vec<Probability> {
        self.numerators.iter().map(|&m| Ratio::new(m, self.denominator)).collect()
    }
}

/// Best integer split of `total` units against `target`, minimizing the
/// largest `|m_k/total − target_k|`, with `m_k ≥ 1` where the target is
/// nonzero. Units go one at a time to the largest remaining deficit.
fn best_split(target: &[f64], total: u64) -> Option<(Vec<u64>, f64)> {
    let mut m: Vec<u64> = target.iter().map(|&t| u64::from(t > 0.0)).collect();
    let floor: u64 = m.iter().sum();
    if floor > total {
        return None;
    }
    let tf = total as f64;
    for _ in floor..total {
        let k = (0..target.len())
            .max_by(|&a, &b| {
                let da = target[a] * tf - m[a] as f64;
                let db = target[b] * tf - m[b] as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("non-empty target");
        m[k] += 1;
    }
    let err = m
        .iter()
        .zip(target)
        .map(|(&mk, &t)| (mk as f64 / tf - t).abs())
        .fold(0.0, f64::max);
    Some((m, err))
}

/// Search `M = 1..=max_denominator` for the best approximation; a larger `M`
/// must improve the error by more than rounding noise to be preferred.
pub fn fine_grain(alpha_sq: &[f64], max_denominator: u64) -> Result<RationalApproximation> {
    if alpha_sq.is_empty() {
        return Err(Error::pre("alpha_sq is empty"));
    }
    if alpha_sq.iter().any(|&a| !(a.is_finite() && a >= 0.0)) {
        return Err(Error::pre("alpha_sq entries must be finite and >= 0"));
    }
    let sum: f64 = alpha_sq.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::pre(format!("alpha_sq sums to {sum}, expected 1")));
    }
    let nonzero = alpha_sq.iter().filter(|&&a| a > 0.0).count() as u64;
    if nonzero > max_denominator {
        return Err(Error::Resolution(format!(
            "{nonzero} nonzero targets need M >= {nonzero}, but the cap is {max_denominator}"
        )));
    }

    const IMPROVEMENT: f64 = 1e-15;
    let mut best: Option<(Vec<u64>, u64, f64)> = None;
    for total in nonzero.max(1)..=max_denominator {
        if let Some((m, err)) = best_split(alpha_sq, total) {
            if best.as_ref().is_none_or(|(_, _, e)| err < e - IMPROVEMENT) {
                best = Some((m, total, err));
            }
        }
    }
    let (numerators, denominator, achieved_error) =
        best.ok_or_else(|| Error::Resolution("no admissible denominator under the cap".into()))?;
    Ok(RationalApproximation {
        target: alpha_sq.to_vec(),
        numerators,
        denominator,
        max_denominator,
        achieved_error,
    })
}

/// `Σ_j |s_{k(j)}⟩|O_j⟩|e_j⟩ / √M` with contiguous blocks of sizes `m_k`.
pub fn build_coarse_state(approx: &RationalApproximation, dims: TripartiteDims) -> Result<EnvarianceState> {
    if approx.numerators.iter().sum::<u64>() != approx.denominator {
        return Err(Error::pre("numerators do not sum to the denominator"));
    }
    EnvarianceState::from_multiplicities(approx.numerators.clone(), dims)
}

/// Builds the coarse state directly from block sizes.
pub fn build_coarse_state_from_multiplicities(m: &[u64], dims: TripartiteDims) -> Result<EnvarianceState> {
    EnvarianceState::from_multiplicities(m.to_vec(), dims)
}

/// Applies the fine-index permutation `perm` (`j ↦ perm[j]`) to the observer
/// and environment labels. If the permutation maps whole coarse blocks onto
/// whole coarse blocks, the induced relabeling `s_{k(j)} ↦ s_{k(perm[j])}`
/// is applied to the system as well; otherwise the system is left alone.
/// Returns whether the global state is unchanged.
pub fn envariance_swap_check(state: &EnvarianceState, perm: &[usize]) -> Result<bool> {
    let m = state.fine_count();
    if perm.len() != m {
        return Err(Error::pre(format!("permutation has {} entries, expected {m}", perm.len())));
    }
    let mut seen = vec![false; m];
    for &p in perm {
        if p >= m || seen[p] {
            return Err(Error::pre(format!("invalid permutation entry {p} for M = {m}")));
        }
        seen[p] = true;
    }

    let relabel = induced_relabeling(state, perm);
    let original: BTreeSet<_> = state.support().into_iter().collect();
    let transformed: BTreeSet<_> = state
        .support()
        .into_iter()
        .map(|(s, o, e)| {
            let s2 = relabel.as_ref().map_or(s, |r| r[s]);
            (s2, perm[o], perm[e])
        })
        .collect();
    Ok(original == transformed)
}

/// `σ` with `σ(k(j)) = k(perm[j])`, if that defines a bijection on coarse labels.
fn induced_relabeling(state: &EnvarianceState, perm: &[usize]) -> Option<Vec<usize>> {
    let n = state.coarse_count();
    let mut sigma: Vec<Option<usize>> = vec![None; n];
    for (j, &p) in perm.iter().enumerate() {
        let (from, to) = (state.coarse_index(j), state.coarse_index(p));
        match sigma[from] {
            None => sigma[from] = Some(to),
            Some(t) if t == to => {}
            Some(_) => return None,
        }
    }
    let sigma: Vec<usize> = sigma.into_iter().map(|s| s.expect("every block is hit")).collect();
    let distinct: BTreeSet<_> = sigma.iter().collect();
    (distinct.len() == n).then_some(sigma)
}

/// `p(s_k) = m_k / M`, exact.
pub fn coarse_probabilities(state: &EnvarianceState) -> Vec<Probability> {
    let total = state.fine_count() as u64;
    state.multiplicities().iter().map(|&m| Ratio::new(m, total)).collect()
}
