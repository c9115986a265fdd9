//! Round-3 CRYSTALS-Kyber (KYBER_K = 2, 3, 4).
//!
//! Encapsulation is exposed in two forms. [`kem_enc_derand`] takes the raw
//! 32-byte buffer that the reference would have filled with `randombytes`
//! (it is hashed internally, as in the reference), which is the interface an
//! accelerator kernel without an RNG needs. [`kem_enc`] draws that buffer from
//! a caller-supplied DRBG.
//!
//! Constant-time behaviour is best effort only: comparison and selection on
//! secret data avoid data-dependent branches, nothing more is claimed.

pub mod poly;

use crate::drbg::DrbgState;
use crate::error::CryptoError;
use crate::keccak::{sha3_256, sha3_512, shake256};
use poly::{basemul_acc, get_noise, inv_ntt, ntt, uniform, KPoly, POLY_BYTES};

pub const SYM_BYTES: usize = 32;
pub const SS_BYTES: usize = 32;

/// Parameter set for one security level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KemParams {
    pub name: &'static str,
    pub kyber_k: usize,
    pub nist_level: u8,
    pub eta1: usize,
    pub eta2: usize,
    pub du: u32,
    pub dv: u32,
    pub pk_len: usize,
    pub sk_len: usize,
    pub ct_len: usize,
    pub ss_len: usize,
    /// Bytes of randomness consumed by encapsulation.
    pub coins_len: usize,
    /// Bytes of randomness consumed by key generation (CPA seed, then z).
    pub keypair_coins_len: usize,
}

const fn params(name: &'static str, k: usize, level: u8, eta1: usize, du: u32, dv: u32) -> KemParams {
    let polyvec_bytes = k * POLY_BYTES;
    let pk_len = polyvec_bytes + SYM_BYTES;
    KemParams {
        name,
        kyber_k: k,
        nist_level: level,
        eta1,
        eta2: 2,
        du,
        dv,
        pk_len,
        sk_len: polyvec_bytes + pk_len + 2 * SYM_BYTES,
        ct_len: k * du as usize * 256 / 8 + dv as usize * 256 / 8,
        ss_len: SS_BYTES,
        coins_len: SYM_BYTES,
        keypair_coins_len: 2 * SYM_BYTES,
    }
}

pub const KYBER512: KemParams = params("Kyber512", 2, 1, 3, 10, 4);
pub const KYBER768: KemParams = params("Kyber768", 3, 3, 2, 10, 4);
pub const KYBER1024: KemParams = params("Kyber1024", 4, 5, 2, 11, 5);

pub const ALL_PARAMS: [&KemParams; 3] = [&KYBER512, &KYBER768, &KYBER1024];

impl KemParams {
    pub fn for_level(level: u8) -> Option<&'static KemParams> {
        ALL_PARAMS.into_iter().find(|p| p.nist_level == level)
    }

    fn polyvec_bytes(&self) -> usize {
        self.kyber_k * POLY_BYTES
    }

    fn polyvec_compressed_bytes(&self) -> usize {
        self.kyber_k * self.du as usize * 32
    }
}

fn check_len(what: &str, expected: usize, got: &[u8]) -> Result<(), CryptoError> {
    if got.len() == expected {
        Ok(())
    } else {
        Err(CryptoError::invalid(what, expected, got.len()))
    }
}

/// `A` (or its transpose) expanded from `rho`; entry `(i, j)` samples
/// `SHAKE128(rho || j || i)` untransposed and `rho || i || j` transposed.
pub fn gen_matrix(rho: &[u8; 32], k: usize, transposed: bool) -> Vec<Vec<KPoly>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if transposed {
                        uniform(rho, i as u8, j as u8)
                    } else {
                        uniform(rho, j as u8, i as u8)
                    }
                })
                .collect()
        })
        .collect()
}

fn polyvec_to_bytes(v: &[KPoly]) -> Vec<u8> {
    let mut out = Vec::with_capacity(v.len() * POLY_BYTES);
    for p in v {
        p.to_bytes(&mut out);
    }
    out
}

fn polyvec_from_bytes(bytes: &[u8]) -> Vec<KPoly> {
    bytes.chunks_exact(POLY_BYTES).map(KPoly::from_bytes).collect()
}

fn indcpa_keypair(p: &KemParams, coins: &[u8; 32]) -> (Vec<u8>, Vec<u8>) {
    let g = sha3_512(coins);
    let rho: [u8; 32] = g[..32].try_into().unwrap();
    let sigma: [u8; 32] = g[32..].try_into().unwrap();

    let a = gen_matrix(&rho, p.kyber_k, false);
    let mut nonce = 0u8;
    let mut noise = |eta| {
        let poly = get_noise(eta, &sigma, nonce);
        nonce += 1;
        poly
    };
    let s: Vec<KPoly> = (0..p.kyber_k).map(|_| ntt(&noise(p.eta1))).collect();
    let e: Vec<KPoly> = (0..p.kyber_k).map(|_| ntt(&noise(p.eta1))).collect();

    let t: Vec<KPoly> = a
        .iter()
        .zip(&e)
        .map(|(row, ei)| basemul_acc(row, &s).add(ei))
        .collect();

    let mut pk = polyvec_to_bytes(&t);
    pk.extend_from_slice(&rho);
    (pk, polyvec_to_bytes(&s))
}

fn indcpa_enc(p: &KemParams, pk: &[u8], msg: &[u8; 32], coins: &[u8; 32]) -> Vec<u8> {
    let t = polyvec_from_bytes(&pk[..p.polyvec_bytes()]);
    let rho: [u8; 32] = pk[p.polyvec_bytes()..].try_into().unwrap();
    let at = gen_matrix(&rho, p.kyber_k, true);

    let mut nonce = 0u8;
    let mut noise = |eta| {
        let poly = get_noise(eta, coins, nonce);
        nonce += 1;
        poly
    };
    let r: Vec<KPoly> = (0..p.kyber_k).map(|_| ntt(&noise(p.eta1))).collect();
    let e1: Vec<KPoly> = (0..p.kyber_k).map(|_| noise(p.eta2)).collect();
    let e2 = noise(p.eta2);

    let u: Vec<KPoly> = at
        .iter()
        .zip(&e1)
        .map(|(row, e)| inv_ntt(&basemul_acc(row, &r)).add(e))
        .collect();
    let v = inv_ntt(&basemul_acc(&t, &r))
        .add(&e2)
        .add(&KPoly::from_msg(msg));

    let mut ct = Vec::with_capacity(p.ct_len);
    for ui in &u {
        ui.compress_to(p.du, &mut ct);
    }
    v.compress_to(p.dv, &mut ct);
    ct
}

fn indcpa_dec(p: &KemParams, sk: &[u8], ct: &[u8]) -> [u8; 32] {
    let split = p.polyvec_compressed_bytes();
    let per_poly = split / p.kyber_k;
    let u: Vec<KPoly> = ct[..split]
        .chunks_exact(per_poly)
        .map(|c| ntt(&KPoly::decompress_from(c, p.du)))
        .collect();
    let v = KPoly::decompress_from(&ct[split..], p.dv);
    let s = polyvec_from_bytes(&sk[..p.polyvec_bytes()]);
    v.sub(&inv_ntt(&basemul_acc(&s, &u))).to_msg()
}

/// Key generation from 64 bytes of coins: the CPA seed followed by the
/// implicit-rejection secret `z`.
pub fn kem_keygen(coins: &[u8], p: &KemParams) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
    check_len("keypair coins", p.keypair_coins_len, coins)?;
    let (pk, cpa_sk) = indcpa_keypair(p, coins[..32].try_into().unwrap());
    let mut sk = cpa_sk;
    sk.extend_from_slice(&pk);
    sk.extend_from_slice(&sha3_256(&pk));
    sk.extend_from_slice(&coins[32..]);
    debug_assert_eq!((pk.len(), sk.len()), (p.pk_len, p.sk_len));
    Ok((pk, sk))
}

/// Key generation drawing the two 32-byte coin buffers from `rng`, in the
/// order the reference calls `randombytes`.
pub fn kem_keygen_rng(rng: &mut DrbgState, p: &KemParams) -> (Vec<u8>, Vec<u8>) {
    let mut coins = [0u8; 64];
    rng.fill(&mut coins[..32]);
    rng.fill(&mut coins[32..]);
    kem_keygen(&coins, p).expect("coins sized from params")
}

/// Encapsulation with the randomness buffer passed in explicitly.
pub fn kem_enc_derand(pk: &[u8], coins: &[u8], p: &KemParams) -> Result<(Vec<u8>, [u8; 32]), CryptoError> {
    check_len("public key", p.pk_len, pk)?;
    check_len("encapsulation coins", p.coins_len, coins)?;
    let m = sha3_256(coins);
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(&m);
    buf[32..].copy_from_slice(&sha3_256(pk));
    let kr = sha3_512(&buf);
    let ct = indcpa_enc(p, pk, &m, kr[32..].try_into().unwrap());

    let mut ss = [0u8; 32];
    shake256(&mut ss, &[&kr[..32], &sha3_256(&ct)]);
    Ok((ct, ss))
}

/// Encapsulation drawing its coins from `rng`.
pub fn kem_enc(pk: &[u8], rng: &mut DrbgState, p: &KemParams) -> Result<(Vec<u8>, [u8; 32]), CryptoError> {
    let coins: [u8; 32] = rng.generate_array();
    kem_enc_derand(pk, &coins, p)
}

/// Decapsulation. Never fails on a well-sized ciphertext: a re-encryption
/// mismatch yields the pseudorandom secret derived from `z`.
pub fn kem_dec(sk: &[u8], ct: &[u8], p: &KemParams) -> Result<[u8; 32], CryptoError> {
    check_len("secret key", p.sk_len, sk)?;
    check_len("ciphertext", p.ct_len, ct)?;
    let pv = p.polyvec_bytes();
    let pk = &sk[pv..pv + p.pk_len];
    let h_pk = &sk[pv + p.pk_len..pv + p.pk_len + 32];
    let z = &sk[p.sk_len - 32..];

    let m = indcpa_dec(p, sk, ct);
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(&m);
    buf[32..].copy_from_slice(h_pk);
    let mut kr = sha3_512(&buf);
    let cmp = indcpa_enc(p, pk, &m, kr[32..].try_into().unwrap());

    let diff = cmp.iter().zip(ct).fold(0u8, |acc, (a, b)| acc | (a ^ b));
    // mask = 0xff when the ciphertexts differ
    let mask = ((u16::from(diff) + 0xff) >> 8) as u8 * 0xff;
    for (k, zb) in kr[..32].iter_mut().zip(z) {
        *k ^= mask & (*k ^ zb);
    }

    let mut ss = [0u8; 32];
    shake256(&mut ss, &[&kr[..32], &sha3_256(ct)]);
    Ok(ss)
}
