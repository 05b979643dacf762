//! Spreading of stabilizer Rényi entropy from local magic under brickwork
//! random Clifford circuits.

pub mod circuit;
pub mod cli;
pub mod clifford;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod magic_state;
pub mod oracle;
pub mod pauli;
pub mod sre;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/pauli.md")]
    pub mod pauli {}
    #[doc = include_str!("../../../book/src/clifford.md")]
    pub mod clifford {}
    #[doc = include_str!("../../../book/src/magic.md")]
    pub mod magic {}
    #[doc = include_str!("../../../book/src/circuit.md")]
    pub mod circuit {}
    #[doc = include_str!("../../../book/src/experiment.md")]
    pub mod experiment {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    pub mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
