//! Numerical checks of the lemma-level inequalities on grid functions.

mod dg;
mod first_lemma;
mod holder;
mod ivl;
mod report;

pub(crate) use crate::fields::dist;

pub use dg::{
    check_dg_membership, check_dg_samples, draw_dg_samples, evaluate_dg_sample, DgCheckOptions,
    DgSample,
};
pub use first_lemma::{
    check_first_lemma_iteration, run_lowering_max, LoweringMax, DEFAULT_FIRST_LEMMA_STEPS,
    LOWERING_MAX_STEP_CAP,
};
pub use holder::{estimate_holder, HolderEstimate, NOISE_FACTOR};
pub use ivl::{
    check_close_times, check_ivl_h1, check_ivl_parabolic, time_lattice, IvlOrientation,
    PigeonholeTrace, PIGEONHOLE_MAX_SLABS,
};
pub use report::{fmt_f64, CheckReport, Sample, Tolerance, Verdict, DEFAULT_TOLERANCE_CONSTANT};
