#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod calibration;
pub mod error;
pub mod frobenius;
pub mod genus;
pub mod hierarchy;
pub mod inversion;
pub mod io;
pub mod report;
pub mod symmetry;
pub mod verify;
pub mod virasoro;
pub mod catalog;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/solutions.md")]
    mod solutions {}
    #[doc = include_str!("../../../book/src/inversion.md")]
    mod inversion {}
    #[doc = include_str!("../../../book/src/calibrations.md")]
    mod calibrations {}
    #[doc = include_str!("../../../book/src/tau.md")]
    mod tau {}
    #[doc = include_str!("../../../book/src/virasoro.md")]
    mod virasoro {}
    #[doc = include_str!("../../../book/src/genus.md")]
    mod genus {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
