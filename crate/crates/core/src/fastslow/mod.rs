//! Deterministic fast–slow problems: the transcritical passage classifier and
//! oscillation patterns of the Olsen model.

mod lyap;
mod maxima;
mod olsen;
mod tc;

pub use lyap::{check_jacobian, lyapunov_spectrum, top_lyapunov_benettin, top_lyapunov_benettin_with, BenettinOptions, LyapEstimate};
pub use maxima::{count_maxima, count_maxima_values};
pub use olsen::*;
pub use tc::{
    classify_transcritical, tc_field, tc_flip_interval, tc_trajectory, FlipInterval, StateBox, TcConfig, TcLabel,
    TC_EPS_FLOOR, TC_START,
};
