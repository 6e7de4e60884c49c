//! A finite-scale workbench for positive model theory.
//!
//! Finite structures and homomorphisms, positive formulas, posets with their
//! upset lattices and (prime) filters, ordered systems over finite forests,
//! filter and prime products, and executable checks of the Positive Łoś
//! theorem, h-inductive persistence, pec models and cores.

pub mod cli;
pub mod error;
pub mod io;
pub mod logic;
pub mod poset;
pub mod products;
pub mod structure;
pub mod systems;
pub mod verify;

mod ser;

pub use error::{Error, Result};
