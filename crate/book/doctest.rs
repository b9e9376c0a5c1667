// The book's code listings are compiled and run as doctests by including
// each chapter as the docs of an empty module.

#[doc = include_str!("src/intro.md")]
pub mod intro {}

#[doc = include_str!("src/paths.md")]
pub mod paths {}

#[doc = include_str!("src/cocycles.md")]
pub mod cocycles {}

#[doc = include_str!("src/engine.md")]
pub mod engine {}

#[doc = include_str!("src/rde.md")]
pub mod rde {}

#[doc = include_str!("src/experiments.md")]
pub mod experiments {}
