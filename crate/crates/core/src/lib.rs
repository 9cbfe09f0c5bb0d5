//! Exact Graev ultrametrics (and their metric twins) on free groups, amalgamated free
//! products and HNN extensions of finite groups with two-sided invariant ultrametrics.

pub mod amalgam;
pub mod error;
pub mod forest;
pub mod fpair;
pub mod free;
pub mod group;
pub mod hnn;
pub mod morphism;
pub mod product;
pub mod rational;
pub mod report;
pub mod scale;
pub mod scaled;
pub mod selftest;
pub mod space;

pub use error::{Error, Result};
pub use rational::Rational;
pub use report::Report;
