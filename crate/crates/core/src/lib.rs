//! Huisken's Gaussian-weighted area functional and the extrinsic asymptotic
//! volume ratio on minimal submanifolds of Euclidean space.
//!
//! The crate is organised bottom-up:
//!
//! * [`geom`]: charts with exact 2-jets, area element, mean curvature.
//! * [`expr`]: user immersions written as expressions, differentiated by
//!   second-order forward-mode AD.
//! * [`zoo`]: built-in surfaces with closed forms where they exist.
//! * [`quad`]: adaptive Gauss–Legendre cubature for the functional and for
//!   extrinsic ball volumes.
//! * [`profile`]: the radial volume profile f(r) = Vol(B(y0, r) ∩ M) and
//!   everything derived from it.
//! * [`verify`]: the inequality suite and its report.
//! * [`special`]: erfc, half-integer incomplete gamma, ω_n.

pub mod expr;
pub mod geom;
pub mod profile;
pub mod quad;
pub mod special;
pub mod verify;
pub mod zoo;

pub use geom::{
    check_minimality, gram_area_element, mean_curvature_vector, AmbientPoint, ImmersionChart,
    Submanifold,
};
pub use profile::{EavrEstimate, RadialProfile};
pub use quad::{ball_volume, huisken_direct, EntropyValue, QuadSpec, VolumeValue};
pub use special::{incomplete_gamma_upper, normalization_identity, unit_ball_volume};
pub use verify::VerificationReport;
pub use zoo::{make_surface, SurfaceSpec, ZooEntry};
