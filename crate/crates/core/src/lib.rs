//! Sliced Latin hypercube designs with arbitrarily chosen slice run sizes.
//!
//! A sliced Latin hypercube design (SLHD) is an `n x p` Latin hypercube whose
//! rows split into `t` contiguous slices of sizes `n_1, ..., n_t`, each of which
//! is itself a Latin hypercube at its own coarser resolution `n_j`.
//!
//! The crate is organised bottom-up:
//!
//! - [`types`]: slice sizes, level partitions, designs, seedable RNG streams and
//!   exact integer ceiling helpers.
//! - [`partition`]: the greedy assignment of fine levels `1..=n` to slices.
//! - [`generate`]: sliced designs plus the baseline LHD generators.
//! - [`decorrelate`]: the residualize / rank-restore sweep that lowers
//!   column correlations without breaking the sliced structure.
//! - [`validate`]: stratification checks and validation reports.
//! - [`experiment`]: the numerical-integration study comparing design methods.
//! - [`io`]: design and trace file formats.
//!
//! ```
//! use slhd::{generate_sliced_lhd, validate_sliced, RngStream, SliceSizes};
//!
//! let sizes = SliceSizes::new(vec![2, 5, 10]).unwrap();
//! let design = generate_sliced_lhd(&sizes, 3, &RngStream::new(7));
//! assert!(validate_sliced(&design).all_pass());
//! ```

pub mod decorrelate;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod io;
pub mod partition;
pub mod quadrature;
pub mod types;
pub mod validate;

pub use decorrelate::{
    rank_restore, reduce_correlations, reduce_correlations_with, residualize, rms_correlation,
    ResponseBasis, SweepOptions, SweepState, SweepTrace,
};
pub use error::{Error, Result};
pub use experiment::{
    run_experiment, ExperimentConfig, F1Variant, Integrand, Method, RmseCell, RmseReport, Scenario,
};
pub use generate::{
    assemble_sliced_design, generate_independent_lhds, generate_midpoint_lhd,
    generate_randomized_lhd, generate_sliced_lhd,
};
pub use partition::{delta_sequence, partition_levels, DeltaSequence};
pub use types::{
    ceil_div, coarse_bin, midpoint, uniform_permutation, Design, LevelPartition, RngStream,
    SliceSizes,
};
pub use validate::{is_lhd_column, validate_sliced, ValidationReport};
