//! State-dependent averaging: bounded confidence with truth seekers, and signed averaging.

pub mod altafini;
pub mod hk;

pub use altafini::{
    modulus_consensus_verdict, recover_structural_balance, run_altafini, AltafiniRun, BalanceReport, ModulusVerdict,
    SignedMatrix, SignedMatrixSequence,
};
pub use hk::{hk_weights, run_hk, ClusterReport, HkConfig, HkRun};
