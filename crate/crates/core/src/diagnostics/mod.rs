//! Energy functionals, kernel inequalities and the 1D commutator terms.

mod commutator;
mod energy;
mod lemmas;
mod trials;

pub use commutator::{
    commutator_decomposition_1d, CommutatorEntry, CommutatorLedger1D, CONVEXITY_TOL,
};
pub use energy::{
    check_energy_dissipation, entropy, interaction_energy, l2_mollified_error, quadratic_energy,
    sqrt_filtered_norm_sq, EnergyLedger, EnergyRow, LEDGER_SLACK,
};
pub use lemmas::{
    check_lemma_intermediate1, check_lemma_intermediate2, intermediate_ratio,
    sqrt_gradient_magnitude, sqrt_gradient_ratio, IntermediateBoundReport, SqrtGradientReport,
    TrialRatio,
};
pub use trials::{nonnegative_trials, signed_trials, trial_field, TrialKind};
