//! Fair many-to-one matching between participants and teams under weak
//! preferences on both sides.
//!
//! The main entry point is [`engines::main_algorithm`]; [`relations`]
//! holds the property verifiers and [`oracle`] the brute-force ground
//! truth used to test them.

pub mod engines;
pub mod error;
pub mod extended;
pub mod fixtures;
pub mod io;
pub mod matching;
pub mod model;
pub mod oracle;
pub mod relations;

pub use error::{Error, ParseError, Result};
