//! Frontend pieces of the `whiter` binary, split out as a library so the
//! config handling and the expression language can be tested directly.

pub mod cli_io;
pub mod expr;
