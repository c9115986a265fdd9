//! Portable Kyber/Dilithium engines behind the NIST PQC interface, known-answer
//! test tooling, and a processing-element model for accelerator overhead
//! studies.

pub mod dilithium;
pub mod bench;
pub mod device;
pub mod drbg;
pub mod error;
pub mod kat;
pub mod keccak;
pub mod kyber;
pub mod nist_api;
mod pack;
pub mod par;
pub mod report;
