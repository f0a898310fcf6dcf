//! Eve's strategies.
//!
//! [`ProbeKets`] describes an identical individual attack by the probe
//! vectors attached to each of Bob's outcomes. The check functions return
//! residuals rather than booleans so a search can use them as penalties.
//! [`PrsAttack`] covers measure-and-resend strategies that hide failed
//! measurements in the loss budget, with [`usd_intercept_resend`] as the
//! two-state special case.

mod probe;
mod prs;

pub use probe::{
    check_equal_throughput, check_isometry, filter_no_count, filter_no_count_with,
    imaginary_deficit_attack, passive_loss_attack, signal_throughput, throughput_of,
    FilteredAttack, IsometryResiduals, ProbeKets, ThroughputResiduals, FEASIBILITY_TOL,
    ISOMETRY_TOL, NO_COUNT,
};
pub use prs::{
    apply_prs, usd_intercept_resend, Action, Branch, Delivery, OutcomeTag, PrsAttack, UsdAttack,
};
