//! AES-256 CTR DRBG as used by the NIST PQC submission harness (`rng.c`).
//!
//! No derivation function, no prediction resistance, null personalization.
//! Every KAT byte in this crate flows through this generator; nothing reads
//! host entropy.

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes256;

use crate::error::CryptoError;

pub const ENTROPY_LEN: usize = 48;
pub const SEED_LEN: usize = 48;

/// Single-block AES-256 encryption (FIPS-197).
pub fn aes256_ecb_block(key: &[u8], block: &[u8]) -> Result<[u8; 16], CryptoError> {
    let key: &[u8; 32] = key
        .try_into()
        .map_err(|_| CryptoError::invalid("aes key", 32, key.len()))?;
    let block: &[u8; 16] = block
        .try_into()
        .map_err(|_| CryptoError::invalid("aes block", 16, block.len()))?;
    Ok(encrypt(key, block))
}

fn encrypt(key: &[u8; 32], block: &[u8; 16]) -> [u8; 16] {
    let cipher = Aes256::new(key.into());
    let mut out = (*block).into();
    cipher.encrypt_block(&mut out);
    out.into()
}

fn increment_be(v: &mut [u8; 16]) {
    for byte in v.iter_mut().rev() {
        let (next, overflow) = byte.overflowing_add(1);
        *byte = next;
        if !overflow {
            break;
        }
    }
}

/// Generator state: key, counter block and reseed counter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrbgState {
    key: [u8; 32],
    v: [u8; 16],
    reseed_counter: u64,
}

impl DrbgState {
    /// `randombytes_init(entropy, NULL, 256)`.
    pub fn new(entropy: &[u8]) -> Result<Self, CryptoError> {
        let seed: &[u8; ENTROPY_LEN] = entropy
            .try_into()
            .map_err(|_| CryptoError::invalid("drbg entropy", ENTROPY_LEN, entropy.len()))?;
        let mut st = Self {
            key: [0; 32],
            v: [0; 16],
            reseed_counter: 0,
        };
        st.update(Some(seed));
        st.reseed_counter = 1;
        Ok(st)
    }

    fn update(&mut self, provided: Option<&[u8; 48]>) {
        let mut temp = [0u8; 48];
        for chunk in temp.chunks_exact_mut(16) {
            increment_be(&mut self.v);
            chunk.copy_from_slice(&encrypt(&self.key, &self.v));
        }
        if let Some(p) = provided {
            temp.iter_mut().zip(p).for_each(|(t, p)| *t ^= p);
        }
        self.key.copy_from_slice(&temp[..32]);
        self.v.copy_from_slice(&temp[32..]);
    }

    /// `randombytes(out, out.len())`. A zero-length request still runs the
    /// trailing state update, as the reference harness does.
    pub fn fill(&mut self, out: &mut [u8]) {
        for chunk in out.chunks_mut(16) {
            increment_be(&mut self.v);
            let block = encrypt(&self.key, &self.v);
            chunk.copy_from_slice(&block[..chunk.len()]);
        }
        self.update(None);
        self.reseed_counter += 1;
    }

    pub fn generate(&mut self, n: usize) -> Vec<u8> {
        let mut out = vec![0u8; n];
        self.fill(&mut out);
        out
    }

    pub fn generate_array<const N: usize>(&mut self) -> [u8; N] {
        let mut out = [0u8; N];
        self.fill(&mut out);
        out
    }

    pub fn reseed_counter(&self) -> u64 {
        self.reseed_counter
    }

    pub fn counter_block(&self) -> [u8; 16] {
        self.v
    }
}

/// The entropy input the NIST generator programs use: bytes `0x00..=0x2f`.
pub fn default_kat_entropy() -> [u8; ENTROPY_LEN] {
    std::array::from_fn(|i| i as u8)
}

/// Consecutive 48-byte seeds drawn from one DRBG instance, as the KEM KAT
/// generator does.
pub fn kat_seed_schedule(master_entropy: &[u8], n: usize) -> Result<Vec<[u8; SEED_LEN]>, CryptoError> {
    if n == 0 {
        return Err(CryptoError::InvalidArgument("seed schedule needs n >= 1".into()));
    }
    let mut drbg = DrbgState::new(master_entropy)?;
    Ok((0..n).map(|_| drbg.generate_array()).collect())
}

pub type SignKatInput = ([u8; SEED_LEN], Vec<u8>);

/// Per-case seed and message for signature KATs. The master stream
/// interleaves each 48-byte seed with a `33 * (count + 1)`-byte message.
pub fn kat_sign_schedule(
    master_entropy: &[u8],
    n: usize,
) -> Result<Vec<SignKatInput>, CryptoError> {
    if n == 0 {
        return Err(CryptoError::InvalidArgument("seed schedule needs n >= 1".into()));
    }
    let mut drbg = DrbgState::new(master_entropy)?;
    Ok((0..n)
        .map(|count| {
            let seed = drbg.generate_array();
            let msg = drbg.generate(sign_kat_msg_len(count));
            (seed, msg)
        })
        .collect())
}

/// Message length used by the NIST signature KAT generator.
pub fn sign_kat_msg_len(count: usize) -> usize {
    33 * (count + 1)
}
