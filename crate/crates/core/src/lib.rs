//! Pseudospectral solver for the forced subcritical SQG equation on the
//! periodic square, with Littlewood-Paley diagnostics, closed-form bounds and
//! determining-modes experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod checkpoint;
pub mod error;
pub mod experiments;
pub mod littlewood_paley;
pub mod operators;
pub mod spectral;
pub mod timestepper;
pub mod validation;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/spectral.md")]
mod book_spectral {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/littlewood_paley.md")]
mod book_littlewood_paley {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/time_stepping.md")]
mod book_time_stepping {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/bounds.md")]
mod book_bounds {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
mod book_experiments {}
