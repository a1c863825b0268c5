pub mod circuit;
pub mod data;
pub mod error;
pub mod harness;
pub mod hash;
pub mod hwcompare;
pub mod kern;
pub mod prep;
pub mod qkt;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod svm;

pub use error::{Error, Result};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    pub mod circuits {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    pub mod kernels {}
    #[doc = include_str!("../../../book/src/svm.md")]
    pub mod svm {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    pub mod alignment {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    pub mod statistics {}
    #[doc = include_str!("../../../book/src/hardware.md")]
    pub mod hardware {}
    #[doc = include_str!("../../../book/src/campaigns.md")]
    pub mod campaigns {}
}
