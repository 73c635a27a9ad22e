//! The `pricing-lab` guide, compiled so that every snippet in `book/` runs as a
//! doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/noise.md")]
pub mod noise {}

#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}

#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}

#[doc = include_str!("../../../book/src/grid.md")]
pub mod grid {}

#[doc = include_str!("../../../book/src/cmrup.md")]
pub mod cmrup {}

#[doc = include_str!("../../../book/src/exp4.md")]
pub mod exp4 {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
