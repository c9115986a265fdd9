//! The NIST PQC call interface (`crypto_kem_*`, `crypto_sign*`) over a fixed
//! registry of parameter sets.
//!
//! Accelerator kernels cannot call `randombytes`, so KEM encapsulation takes
//! the random buffer as an explicit argument (the coins extension). Entries
//! carry a flag for it so a scheme that keeps internal randomness still fits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dilithium::{self, Rejection, SigParams};
use crate::drbg::DrbgState;
use crate::error::CryptoError;
use crate::kyber::{self, KemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Kyber,
    Dilithium,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Kyber => "kyber",
            Family::Dilithium => "dilithium",
        }
    }

    /// Name used in the calibration tables (`Kyber`, `Dilithium`).
    pub fn table_name(self) -> &'static str {
        match self {
            Family::Kyber => "Kyber",
            Family::Dilithium => "Dilithium",
        }
    }

    fn code(self) -> u32 {
        match self {
            Family::Kyber => 1,
            Family::Dilithium => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kyber" => Ok(Family::Kyber),
            "dilithium" => Ok(Family::Dilithium),
            _ => Err(CryptoError::NotFound(format!("algorithm family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Keypair,
    Encapsulate,
    Decapsulate,
    Sign,
    Verify,
}

impl Operation {
    pub const ALL: [Operation; 5] = [
        Operation::Keypair,
        Operation::Encapsulate,
        Operation::Decapsulate,
        Operation::Sign,
        Operation::Verify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Keypair => "keypair",
            Operation::Encapsulate => "encapsulate",
            Operation::Decapsulate => "decapsulate",
            Operation::Sign => "sign",
            Operation::Verify => "verify",
        }
    }

    /// Suffix of the kernel name, e.g. `enc` in `kyber2_enc`.
    pub fn kernel_suffix(self) -> &'static str {
        match self {
            Operation::Keypair => "keypair",
            Operation::Encapsulate => "enc",
            Operation::Decapsulate => "dec",
            Operation::Sign => "sign",
            Operation::Verify => "verify",
        }
    }

    /// Name used in the calibration tables.
    pub fn table_name(self) -> &'static str {
        match self {
            Operation::Keypair => "Keypair",
            Operation::Encapsulate => "Encapsulate",
            Operation::Decapsulate => "Decapsulate",
            Operation::Sign => "Sign",
            Operation::Verify => "Verify",
        }
    }

    fn code(self) -> u32 {
        match self {
            Operation::Keypair => 0,
            Operation::Encapsulate => 1,
            Operation::Decapsulate => 2,
            Operation::Sign => 3,
            Operation::Verify => 4,
        }
    }

    /// Key generation stays on the host; only these run on a device.
    pub fn is_device_op(self) -> bool {
        self != Operation::Keypair
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Operation {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "keypair" | "keygen" => Ok(Operation::Keypair),
            "enc" | "encaps" | "encapsulate" => Ok(Operation::Encapsulate),
            "dec" | "decaps" | "decapsulate" => Ok(Operation::Decapsulate),
            "sign" => Ok(Operation::Sign),
            "verify" | "open" => Ok(Operation::Verify),
            _ => Err(CryptoError::NotFound(format!("operation `{s}`"))),
        }
    }
}

/// Algorithm, security level and operation: the unit a kernel implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AlgorithmId {
    pub family: Family,
    pub nist_level: u8,
    pub operation: Operation,
}

impl AlgorithmId {
    /// Validates the combination against the registry.
    pub fn new(family: Family, nist_level: u8, operation: Operation) -> Result<Self, CryptoError> {
        let entry = registry_lookup(family, nist_level)?;
        if !entry.operations().contains(&operation) {
            return Err(CryptoError::NotFound(format!(
                "{family} has no {operation} operation"
            )));
        }
        Ok(Self {
            family,
            nist_level,
            operation,
        })
    }

    pub fn entry(&self) -> &'static SchemeEntry {
        registry_lookup(self.family, self.nist_level).expect("validated on construction")
    }

    /// Kernel name: `kyber{K}_{enc|dec}` or `dilithium{MODE}_{sign|verify}`.
    pub fn kernel_name(&self) -> String {
        format!("{}_{}", self.entry().kernel_prefix(), self.operation.kernel_suffix())
    }

    /// Unique numeric kernel id.
    pub fn kernel_id(&self) -> u32 {
        self.family.code() * 100 + u32::from(self.nist_level) * 10 + self.operation.code()
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.family, self.nist_level, self.operation)
    }
}

/// Signature verification result: recovered message or a rejection value.
pub type OpenResult = Result<Vec<u8>, Rejection>;

/// KEM engine bound to one parameter set.
pub trait KemEngine: Send + Sync {
    fn keypair(&self, coins: &[u8]) -> Result<(Vec<u8>, Vec<u8>), CryptoError>;
    fn encapsulate(&self, pk: &[u8], coins: &[u8]) -> Result<(Vec<u8>, Vec<u8>), CryptoError>;
    fn decapsulate(&self, sk: &[u8], ct: &[u8]) -> Result<Vec<u8>, CryptoError>;
}

/// Signature engine bound to one parameter set.
pub trait SigEngine: Send + Sync {
    fn keypair(&self, seed: &[u8]) -> Result<(Vec<u8>, Vec<u8>), CryptoError>;
    /// Returns `sig || msg` and the number of rejection-loop attempts.
    fn sign(&self, sk: &[u8], msg: &[u8]) -> Result<(Vec<u8>, u32), CryptoError>;
    fn open(&self, pk: &[u8], sm: &[u8]) -> Result<OpenResult, CryptoError>;
}

struct KyberEngine(&'static KemParams);

impl KemEngine for KyberEngine {
    fn keypair(&self, coins: &[u8]) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
        kyber::kem_keygen(coins, self.0)
    }

    fn encapsulate(&self, pk: &[u8], coins: &[u8]) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
        kyber::kem_enc_derand(pk, coins, self.0).map(|(ct, ss)| (ct, ss.to_vec()))
    }

    fn decapsulate(&self, sk: &[u8], ct: &[u8]) -> Result<Vec<u8>, CryptoError> {
        kyber::kem_dec(sk, ct, self.0).map(|ss| ss.to_vec())
    }
}

struct DilithiumEngine(&'static SigParams);

impl SigEngine for DilithiumEngine {
    fn keypair(&self, seed: &[u8]) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
        dilithium::keygen(seed, self.0)
    }

    fn sign(&self, sk: &[u8], msg: &[u8]) -> Result<(Vec<u8>, u32), CryptoError> {
        dilithium::sign_with_attempts(sk, msg, self.0)
    }

    fn open(&self, pk: &[u8], sm: &[u8]) -> Result<OpenResult, CryptoError> {
        dilithium::verify(pk, sm, self.0)
    }
}

pub enum Binding {
    Kem {
        params: &'static KemParams,
        engine: &'static dyn KemEngine,
    },
    Sig {
        params: &'static SigParams,
        engine: &'static dyn SigEngine,
    },
}

/// One registered parameter set.
pub struct SchemeEntry {
    pub family: Family,
    pub nist_level: u8,
    pub binding: Binding,
    /// Encapsulation takes its random buffer as an argument.
    pub coins_extension: bool,
    /// Sizes of the successive `randombytes` calls key generation makes.
    pub keypair_draws: &'static [usize],
}

impl fmt::Debug for SchemeEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchemeEntry")
            .field("name", &self.name())
            .field("nist_level", &self.nist_level)
            .field("coins_extension", &self.coins_extension)
            .finish()
    }
}

impl SchemeEntry {
    pub fn name(&self) -> &'static str {
        match self.binding {
            Binding::Kem { params, .. } => params.name,
            Binding::Sig { params, .. } => params.name,
        }
    }

    pub fn is_kem(&self) -> bool {
        matches!(self.binding, Binding::Kem { .. })
    }

    pub fn kem_params(&self) -> Option<&'static KemParams> {
        match self.binding {
            Binding::Kem { params, .. } => Some(params),
            Binding::Sig { .. } => None,
        }
    }

    pub fn sig_params(&self) -> Option<&'static SigParams> {
        match self.binding {
            Binding::Sig { params, .. } => Some(params),
            Binding::Kem { .. } => None,
        }
    }

    pub fn pk_len(&self) -> usize {
        match self.binding {
            Binding::Kem { params, .. } => params.pk_len,
            Binding::Sig { params, .. } => params.pk_len,
        }
    }

    pub fn sk_len(&self) -> usize {
        match self.binding {
            Binding::Kem { params, .. } => params.sk_len,
            Binding::Sig { params, .. } => params.sk_len,
        }
    }

    /// The parameter that selects the security level at compile time, with
    /// its value: `("KYBER_K", 2)` or `("DILITHIUM_MODE", 3)`.
    pub fn compile_parameter(&self) -> (&'static str, usize) {
        match self.binding {
            Binding::Kem { params, .. } => ("KYBER_K", params.kyber_k),
            Binding::Sig { params, .. } => ("DILITHIUM_MODE", usize::from(params.mode)),
        }
    }

    /// `kyber2`, `dilithium3`, ...
    pub fn kernel_prefix(&self) -> String {
        format!("{}{}", self.family, self.compile_parameter().1)
    }

    pub fn operations(&self) -> &'static [Operation] {
        match self.binding {
            Binding::Kem { .. } => &[Operation::Keypair, Operation::Encapsulate, Operation::Decapsulate],
            Binding::Sig { .. } => &[Operation::Keypair, Operation::Sign, Operation::Verify],
        }
    }

    /// The operation whose output the KAT procedure feeds to `verify_op`.
    pub fn apply_op(&self) -> Operation {
        if self.is_kem() {
            Operation::Encapsulate
        } else {
            Operation::Sign
        }
    }

    pub fn verify_op(&self) -> Operation {
        if self.is_kem() {
            Operation::Decapsulate
        } else {
            Operation::Verify
        }
    }

    pub fn id(&self, operation: Operation) -> Result<AlgorithmId, CryptoError> {
        AlgorithmId::new(self.family, self.nist_level, operation)
    }

    /// NIST response file name, keyed by the secret key length.
    pub fn kat_file_name(&self) -> String {
        let kind = if self.is_kem() { "kem" } else { "sign" };
        format!("PQC{kind}KAT_{}.rsp", self.sk_len())
    }

    /// Key pair from a generator, drawing in the reference order.
    pub fn keypair_from_rng(&self, rng: &mut DrbgState) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
        let mut coins = Vec::new();
        for &n in self.keypair_draws {
            coins.extend(rng.generate(n));
        }
        match self.binding {
            Binding::Kem { engine, .. } => engine.keypair(&coins),
            Binding::Sig { engine, .. } => engine.keypair(&coins),
        }
    }

    /// Encapsulation coins drawn right after key generation, as the KAT
    /// generator does.
    pub fn kem_coins_from_rng(&self, rng: &mut DrbgState) -> Result<Vec<u8>, CryptoError> {
        let params = self
            .kem_params()
            .ok_or_else(|| CryptoError::InvalidArgument(format!("{} is not a KEM", self.name())))?;
        Ok(rng.generate(params.coins_len))
    }
}

static KYBER_ENGINES: [KyberEngine; 3] = [
    KyberEngine(&kyber::KYBER512),
    KyberEngine(&kyber::KYBER768),
    KyberEngine(&kyber::KYBER1024),
];

static DILITHIUM_ENGINES: [DilithiumEngine; 3] = [
    DilithiumEngine(&dilithium::DILITHIUM2),
    DilithiumEngine(&dilithium::DILITHIUM3),
    DilithiumEngine(&dilithium::DILITHIUM5),
];

const KYBER_KEYPAIR_DRAWS: &[usize] = &[kyber::SYM_BYTES, kyber::SYM_BYTES];
const DILITHIUM_KEYPAIR_DRAWS: &[usize] = &[dilithium::SEED_BYTES];

const fn kem_entry(i: usize) -> SchemeEntry {
    SchemeEntry {
        family: Family::Kyber,
        nist_level: KYBER_ENGINES[i].0.nist_level,
        binding: Binding::Kem {
            params: KYBER_ENGINES[i].0,
            engine: &KYBER_ENGINES[i],
        },
        coins_extension: true,
        keypair_draws: KYBER_KEYPAIR_DRAWS,
    }
}

const fn sig_entry(i: usize) -> SchemeEntry {
    SchemeEntry {
        family: Family::Dilithium,
        nist_level: DILITHIUM_ENGINES[i].0.mode,
        binding: Binding::Sig {
            params: DILITHIUM_ENGINES[i].0,
            engine: &DILITHIUM_ENGINES[i],
        },
        coins_extension: false,
        keypair_draws: DILITHIUM_KEYPAIR_DRAWS,
    }
}

static REGISTRY: [SchemeEntry; 6] = [
    kem_entry(0),
    kem_entry(1),
    kem_entry(2),
    sig_entry(0),
    sig_entry(1),
    sig_entry(2),
];

pub fn registry() -> &'static [SchemeEntry] {
    &REGISTRY
}

pub fn registry_lookup(family: Family, nist_level: u8) -> Result<&'static SchemeEntry, CryptoError> {
    REGISTRY
        .iter()
        .find(|e| e.family == family && e.nist_level == nist_level)
        .ok_or_else(|| CryptoError::NotFound(format!("{family} level {nist_level}")))
}

/// Registered (family, level) pairs in registry order.
pub fn registered_combos() -> Vec<(Family, u8)> {
    REGISTRY.iter().map(|e| (e.family, e.nist_level)).collect()
}

fn kem_binding(entry: &SchemeEntry) -> Result<(&'static KemParams, &'static dyn KemEngine), CryptoError> {
    match entry.binding {
        Binding::Kem { params, engine } => Ok((params, engine)),
        Binding::Sig { .. } => Err(CryptoError::InvalidArgument(format!("{} is not a KEM", entry.name()))),
    }
}

fn sig_binding(entry: &SchemeEntry) -> Result<(&'static SigParams, &'static dyn SigEngine), CryptoError> {
    match entry.binding {
        Binding::Sig { params, engine } => Ok((params, engine)),
        Binding::Kem { .. } => Err(CryptoError::InvalidArgument(format!(
            "{} is not a signature scheme",
            entry.name()
        ))),
    }
}

/// `crypto_kem_keypair` with explicit coins.
pub fn kem_keypair(entry: &SchemeEntry, coins: &[u8]) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
    let (_, engine) = kem_binding(entry)?;
    engine.keypair(coins)
}

/// `crypto_kem_enc`. Returns `(ct, ss)`.
pub fn kem_apply(entry: &SchemeEntry, pk: &[u8], coins: Option<&[u8]>) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
    let (params, engine) = kem_binding(entry)?;
    let coins = match coins {
        Some(c) => c,
        None if entry.coins_extension => {
            return Err(CryptoError::InvalidArgument(format!(
                "{} encapsulation needs a {}-byte coins buffer",
                entry.name(),
                params.coins_len
            )))
        }
        None => &[],
    };
    let (ct, ss) = engine.encapsulate(pk, coins)?;
    debug_assert_eq!((ct.len(), ss.len()), (params.ct_len, params.ss_len));
    Ok((ct, ss))
}

/// `crypto_kem_dec`. Returns `ss`.
pub fn kem_verify(entry: &SchemeEntry, sk: &[u8], ct: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let (_, engine) = kem_binding(entry)?;
    engine.decapsulate(sk, ct)
}

/// `crypto_sign_keypair` with an explicit seed.
pub fn sig_keypair(entry: &SchemeEntry, seed: &[u8]) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
    let (_, engine) = sig_binding(entry)?;
    engine.keypair(seed)
}

/// `crypto_sign`. Returns `sm = sig || msg`.
pub fn sig_apply(entry: &SchemeEntry, sk: &[u8], msg: &[u8]) -> Result<Vec<u8>, CryptoError> {
    sig_apply_counted(entry, sk, msg).map(|(sm, _)| sm)
}

/// `crypto_sign` plus the rejection-loop attempt count.
pub fn sig_apply_counted(entry: &SchemeEntry, sk: &[u8], msg: &[u8]) -> Result<(Vec<u8>, u32), CryptoError> {
    let (params, engine) = sig_binding(entry)?;
    let (sm, attempts) = engine.sign(sk, msg)?;
    debug_assert_eq!(sm.len(), params.sig_len + msg.len());
    Ok((sm, attempts))
}

/// `crypto_sign_open`.
pub fn sig_verify(entry: &SchemeEntry, pk: &[u8], sm: &[u8]) -> Result<OpenResult, CryptoError> {
    let (_, engine) = sig_binding(entry)?;
    engine.open(pk, sm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert_eq!(registry_lookup(Family::Kyber, 1).unwrap().sk_len(), 1632);
        assert_eq!(registry_lookup(Family::Dilithium, 3).unwrap().sig_params().unwrap().mode, 3);
        assert!(matches!(registry_lookup(Family::Kyber, 2), Err(CryptoError::NotFound(_))));
        assert!(registry_lookup(Family::Dilithium, 1).is_err());
    }

    #[test]
    fn kernel_names_follow_compile_parameter() {
        let id = AlgorithmId::new(Family::Kyber, 1, Operation::Encapsulate).unwrap();
        assert_eq!(id.kernel_name(), "kyber2_enc");
        let id = AlgorithmId::new(Family::Dilithium, 5, Operation::Verify).unwrap();
        assert_eq!(id.kernel_name(), "dilithium5_verify");
        assert!(AlgorithmId::new(Family::Kyber, 3, Operation::Sign).is_err());
    }

    #[test]
    fn kernel_ids_unique() {
        let mut ids: Vec<u32> = registry()
            .iter()
            .flat_map(|e| e.operations().iter().map(|&op| e.id(op).unwrap().kernel_id()))
            .collect();
        let n = ids.len();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn coins_required() {
        let e = registry_lookup(Family::Kyber, 1).unwrap();
        let (pk, _) = kem_keypair(e, &[0u8; 64]).unwrap();
        assert!(matches!(kem_apply(e, &pk, None), Err(CryptoError::InvalidArgument(_))));
        assert!(matches!(
            kem_apply(e, &pk[1..], Some(&[0; 32])),
            Err(CryptoError::InvalidArgument(_))
        ));
    }
}
