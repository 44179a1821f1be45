//! Stability and stabilization of Metzler matrices.
//!
//! The crate computes spectral abscissas of Metzler matrices with a shifted
//! power method, optimises the spectral abscissa over product families with
//! the selective greedy method, and finds closest (un)stable matrices in the
//! max-norm, the l-infinity norm and over sign patterns.

pub mod error;
pub mod family;
pub mod infnorm;
pub mod io;
pub mod lss;
pub mod matrix;
pub mod maxnorm;
pub mod perron;
pub mod sign;

pub use error::{Error, Result};
pub use family::{
    frobenius_blocks, optimize_with_irreducibility_patch, row_optimize, selective_greedy, Certification, Direction,
    FrobeniusSplit, GreedyOptions, GreedyOutcome, PatchOptions, PatchedOutcome, ProductFamily, RowPick,
    UncertaintySet,
};
pub use infnorm::{
    ball_row_minimizer, closest_stable_inf_hurwitz, closest_stable_inf_schur, closest_unstable_inf_hurwitz,
    closest_unstable_inf_schur, cr_decomposition, minimize_on_ball, BallKind, BallRow, BallSpec, CrDecomposition, InfDestabilization, InfStabilization,
    StabilizeOptions, TauProbe,
};
pub use lss::{
    hull_max_abscissa, stabilize_2d_lss, stabilize_lss_by_signs, HullMax, Lss2dOptions, Lss2dResult, SignStabilization,
    SwitchingSystem,
};
pub use matrix::{metzlerize, norm, Matrix, MetzlerMatrix, NormKind};
pub use maxnorm::{clamp_shift, closest_stable_max, closest_unstable_max, MaxStabilization};
pub use perron::{
    is_hurwitz_stable, is_schur_stable, plain_power_iteration, selected_leading_eigenpair, spectral_abscissa,
    spectral_radius, translation_shift, EigenPair, PlainPowerReport, SpectralConfig,
};
pub use sign::{closest_stable_sign, is_sign_stable, sign_ball_minimize, sgn_realize, Sign, SignMatrix, SignStable};
