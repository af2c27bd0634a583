//! File formats, raster IO and command implementations on top of
//! [`crowdped_core`].
//!
//! The `crowdped` binary is a thin dispatcher over [`cli`]; every subcommand is
//! also callable as a library function so results can be compared against
//! direct core calls.

pub mod cli;
pub mod error;
pub mod formats;
pub mod raster;

pub use crowdped_core as core;
pub use error::{Error, Result};
