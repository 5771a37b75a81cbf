//! Runs the Rust snippets of the guide in `book/src` as doc-tests.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/debiasing.md")]
mod debiasing {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/initial-posteriors.md")]
mod initial_posteriors {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/precision.md")]
mod precision {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/simulation.md")]
mod simulation {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
