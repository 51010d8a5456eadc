//! foamck-core: nets of smooth functions over right-directed index
//! posets, asymptotic-vanishing ideals with replayable membership
//! verdicts, singularity-set machinery, multivariate truncated power
//! series with the Cauchy-Kovalevskaya coefficient recursion, and the
//! global solution constructor that glues local analytic solutions over
//! a compact exhaustion with an explicit nowhere dense singularity set.

pub mod expr;
pub mod series;
pub mod gck;
pub mod geom;
pub mod nets;
pub mod poset;
pub mod sets;
pub mod rng;

pub use geom::{BoxN, DomainBox, MultiIndex};
