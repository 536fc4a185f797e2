//! Decoherence experiments on top of the trajectory ensembles: the
//! eigenstate stability protocol, Born-rule and coherence metrics, and decay
//! curves checked against the Gaussian dephasing law.

pub mod decay;
pub mod metrics;
pub mod stability;

pub use decay::{decay_curve, dephasing_factor, DecayCurve};
pub use metrics::{
    block_norms, born_distribution, decoherence_metrics, reduced_operator_check, superselection_uniformity, DecoherenceMetrics,
    UniformityCheck,
};
pub use stability::{stability_test, stability_test_with_threshold, StabilityReport, ADIABATIC_GATE, STABILITY_THRESHOLD};
