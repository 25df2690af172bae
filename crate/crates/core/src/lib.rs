//! Second-order correlations and ghost imaging with bosonic, fermionic and
//! classical statistics.
//!
//! The crate covers the whole pipeline: a lattice of chaotic point emitters,
//! Fresnel propagation to two detection planes, Monte Carlo and closed-form
//! g² estimators, ghost-image reconstruction through a transmission mask, and
//! profile fitting of the resulting correlation maps.

pub mod correlators;
pub mod error;
pub mod fitting;
pub mod ghost;
pub mod kernels;
pub mod mask;
pub mod model;
pub mod numeric;
pub mod optimize;
pub mod parallel;
pub mod propagation;
pub mod special;
pub mod speckle;

pub use correlators::{g2_from_amplitude_pair, hbt_scan, synthesize_fermion, Estimator, HbtScanConfig};
pub use error::{Error, Result};
pub use fitting::{dip_separation, extract_section, fit_profile, fwhm, FitOptions, FitResult, ModelKind, ProfileModel};
pub use ghost::{bucket_signal, run_ghost_imaging, snr_estimate, GhostConfig, GhostImages, SnrReport};
pub use kernels::{g2_analytic, ghost_image_analytic, ghost_image_delta_limit, Dimensionality, KernelParams};
pub use mask::{make_double_pinhole_mask, make_mask_from_bitmap, TransmissionMask};
pub use model::{
    AmplitudePair, ComplexField, CorrelationMap, DetectorGrid, Emitter, Geometry, GhostImage, GridValues, SourceShape,
    SourceSpec, Statistics, Vec2,
};
pub use parallel::Executor;
pub use propagation::{propagate, propagator_amplitude, FieldKernel, PlaneTarget, PropagationPlan};
pub use special::{bessel_j1, sinc, somb};
pub use speckle::{derive_seed, sample_amplitudes, sample_realization, AmplitudeMode, SeedSpec, SourceRealization};
