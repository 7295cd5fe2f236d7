//! Random-walk engine: paths and fluctuation markers, time reversal, the
//! Vervaat transform, the couplings `Z^(n)` and `vecZ^(n)`, exact small-`n`
//! oracles and Monte Carlo fluctuation estimates.

pub mod coupling;
pub mod exact;
pub mod fluct;
mod path;
mod vervaat;

pub use coupling::{build_vecz_n, sample_vecz_start, VecZRun, VecZStart, VecZStrategy};
pub use path::{ladder_epochs_by_records, ladder_epochs_chained, sample_walk, time_reverse, Markers, WalkPath};
pub use vervaat::{build_z_n, first_argmin, vervaat, ZnSample};
