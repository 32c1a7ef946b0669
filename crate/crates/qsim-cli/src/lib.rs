//! Library surface of the command-line front end: specification-file
//! parsing and trace emission, shared with the integration tests.

pub mod emit;
pub mod spec;
