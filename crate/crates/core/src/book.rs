//! Doctest shims for the guide: every fenced Rust block under `book/src/`
//! compiles and runs with `cargo test --doc`, keeping the book and the
//! library in lockstep.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/costs.md")]
pub mod costs {}

#[doc = include_str!("../../../book/src/laws.md")]
pub mod laws {}

#[doc = include_str!("../../../book/src/transport.md")]
pub mod transport {}

#[doc = include_str!("../../../book/src/couplings.md")]
pub mod couplings {}

#[doc = include_str!("../../../book/src/tails.md")]
pub mod tails {}

#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}

#[doc = include_str!("../../../book/src/asymptotics.md")]
pub mod asymptotics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
