//! Doc-test shim for the guide.
//!
//! mdBook renders `book/` but does not run its code blocks against the
//! workspace, so each chapter is included here as module documentation and
//! `cargo test --doc -p kolab-book` executes every fenced Rust snippet. One
//! module per chapter keeps failures attributable to a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/bit-strings.md")]
pub mod bit_strings {}

#[doc = include_str!("../../../book/src/machine.md")]
pub mod machine {}

#[doc = include_str!("../../../book/src/complexity.md")]
pub mod complexity {}

#[doc = include_str!("../../../book/src/hashing.md")]
pub mod hashing {}

#[doc = include_str!("../../../book/src/decompressor.md")]
pub mod decompressor {}

#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}

#[doc = include_str!("../../../book/src/reduction.md")]
pub mod reduction {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
