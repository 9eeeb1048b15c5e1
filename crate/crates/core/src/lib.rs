//! Desk-scale, deterministic simulator for a multi-channel semi-quantum
//! currency: unclonable subspace-coset token states, non-destructive
//! verification, certified-destruction transfer signatures bound to
//! destination token ids, and a simulated oracle-registry/escrow ledger,
//! plus a scenario engine for honest flows and double-spend attacks.

pub mod f2linalg;
pub mod ledger;
pub mod par;
pub mod protocol;
pub mod qfhe;
pub mod qsim;
pub mod scenario;
pub mod token;
