//! Round-3 CRYSTALS-Dilithium (DILITHIUM_MODE = 2, 3, 5), deterministic
//! signing only.

pub mod poly;

use crate::drbg::DrbgState;
use crate::error::CryptoError;
use crate::keccak::KeccakState;
use crate::pack::{pack_bits, unpack_bits};
use poly::{
    centered, d_inv_ntt, d_ntt, decompose, make_hint, pointwise, pointwise_acc, power2round,
    sample_in_ball, uniform, uniform_eta, uniform_gamma1, use_hint, DPoly, D, N, Q,
};

pub const SEED_BYTES: usize = 32;
pub const CRH_BYTES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigParams {
    pub name: &'static str,
    pub mode: u8,
    pub k: usize,
    pub l: usize,
    pub eta: i32,
    pub tau: usize,
    pub beta: i32,
    pub gamma1: i32,
    pub gamma2: i32,
    pub omega: usize,
    pub pk_len: usize,
    pub sk_len: usize,
    pub sig_len: usize,
    /// Bytes of randomness consumed by key generation.
    pub keypair_seed_len: usize,
}

#[allow(clippy::too_many_arguments)]
const fn params(
    name: &'static str,
    mode: u8,
    k: usize,
    l: usize,
    eta: i32,
    tau: usize,
    gamma1: i32,
    gamma2: i32,
    omega: usize,
) -> SigParams {
    let eta_bytes = if eta == 2 { 96 } else { 128 };
    let z_bytes = if gamma1 == 1 << 17 { 576 } else { 640 };
    SigParams {
        name,
        mode,
        k,
        l,
        eta,
        tau,
        beta: tau as i32 * eta,
        gamma1,
        gamma2,
        omega,
        pk_len: SEED_BYTES + k * 320,
        sk_len: 3 * SEED_BYTES + (k + l) * eta_bytes + k * 416,
        sig_len: SEED_BYTES + l * z_bytes + omega + k,
        keypair_seed_len: SEED_BYTES,
    }
}

pub const DILITHIUM2: SigParams = params("Dilithium2", 2, 4, 4, 2, 39, 1 << 17, (Q - 1) / 88, 80);
pub const DILITHIUM3: SigParams = params("Dilithium3", 3, 6, 5, 4, 49, 1 << 19, (Q - 1) / 32, 55);
pub const DILITHIUM5: SigParams = params("Dilithium5", 5, 8, 7, 2, 60, 1 << 19, (Q - 1) / 32, 75);

pub const ALL_PARAMS: [&SigParams; 3] = [&DILITHIUM2, &DILITHIUM3, &DILITHIUM5];

impl SigParams {
    pub fn for_mode(mode: u8) -> Option<&'static SigParams> {
        ALL_PARAMS.into_iter().find(|p| p.mode == mode)
    }

    fn eta_bits(&self) -> u32 {
        if self.eta == 2 {
            3
        } else {
            4
        }
    }

    fn z_bits(&self) -> u32 {
        if self.gamma1 == 1 << 17 {
            18
        } else {
            20
        }
    }

    fn w1_bits(&self) -> u32 {
        if self.gamma2 == (Q - 1) / 88 {
            6
        } else {
            4
        }
    }

    fn eta_poly_bytes(&self) -> usize {
        self.eta_bits() as usize * N / 8
    }

    fn z_poly_bytes(&self) -> usize {
        self.z_bits() as usize * N / 8
    }
}

/// Signature rejected by verification. Not an error: callers receive it as
/// a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    MalformedSignature,
    HintOverflow,
    NormBound,
    ChallengeMismatch,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Rejection::MalformedSignature => "malformed signature encoding",
            Rejection::HintOverflow => "hint weight exceeds omega",
            Rejection::NormBound => "z outside norm bound",
            Rejection::ChallengeMismatch => "challenge mismatch",
        };
        f.write_str(s)
    }
}

type PolyVec = Vec<DPoly>;

fn expand_matrix(rho: &[u8; 32], p: &SigParams) -> Vec<PolyVec> {
    (0..p.k)
        .map(|i| {
            (0..p.l)
                .map(|j| uniform(rho, ((i << 8) + j) as u16))
                .collect()
        })
        .collect()
}

fn mat_vec(mat: &[PolyVec], v_hat: &[DPoly]) -> PolyVec {
    mat.iter()
        .map(|row| d_inv_ntt(&pointwise_acc(row, v_hat)))
        .collect()
}

fn ntt_vec(v: &[DPoly]) -> PolyVec {
    v.iter().map(d_ntt).collect()
}

fn crh(out: &mut [u8], chunks: &[&[u8]]) {
    let mut st = KeccakState::shake256();
    for c in chunks {
        st.absorb(c);
    }
    st.squeeze(out);
}

fn pack_w1_vec(w1: &[[i32; N]], p: &SigParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(p.k * p.w1_bits() as usize * N / 8);
    for w in w1 {
        pack_bits(w.iter().map(|&c| c as u32), p.w1_bits(), &mut out);
    }
    out
}

fn pack_pk(rho: &[u8; 32], t1: &[[i32; N]]) -> Vec<u8> {
    let mut pk = rho.to_vec();
    for t in t1 {
        pack_bits(t.iter().map(|&c| c as u32), 10, &mut pk);
    }
    pk
}

fn unpack_pk(pk: &[u8], p: &SigParams) -> ([u8; 32], PolyVec) {
    let rho: [u8; 32] = pk[..SEED_BYTES].try_into().unwrap();
    let t1 = pk[SEED_BYTES..]
        .chunks_exact(320)
        .take(p.k)
        .map(|c| {
            let v: Vec<i32> = unpack_bits(c, 10, N).into_iter().map(|x| x as i32).collect();
            DPoly::from_coeffs(&v)
        })
        .collect();
    (rho, t1)
}

struct SecretKey {
    rho: [u8; 32],
    key: [u8; 32],
    tr: [u8; 32],
    s1: PolyVec,
    s2: PolyVec,
    t0: PolyVec,
}

fn pack_eta(v: &[DPoly], p: &SigParams, out: &mut Vec<u8>) {
    for poly in v {
        pack_bits(
            poly.coeffs.iter().map(|&c| (p.eta - centered(c)) as u32),
            p.eta_bits(),
            out,
        );
    }
}

fn unpack_eta(bytes: &[u8], count: usize, p: &SigParams) -> PolyVec {
    bytes
        .chunks_exact(p.eta_poly_bytes())
        .take(count)
        .map(|c| {
            let v: Vec<i32> = unpack_bits(c, p.eta_bits(), N)
                .into_iter()
                .map(|x| p.eta - x as i32)
                .collect();
            DPoly::from_coeffs(&v)
        })
        .collect()
}

fn pack_sk(sk: &SecretKey, p: &SigParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(p.sk_len);
    out.extend_from_slice(&sk.rho);
    out.extend_from_slice(&sk.key);
    out.extend_from_slice(&sk.tr);
    pack_eta(&sk.s1, p, &mut out);
    pack_eta(&sk.s2, p, &mut out);
    for t in &sk.t0 {
        pack_bits(
            t.coeffs.iter().map(|&c| ((1 << (D - 1)) - centered(c)) as u32),
            D,
            &mut out,
        );
    }
    out
}

fn unpack_sk(bytes: &[u8], p: &SigParams) -> SecretKey {
    let rho = bytes[..32].try_into().unwrap();
    let key = bytes[32..64].try_into().unwrap();
    let tr = bytes[64..96].try_into().unwrap();
    let mut off = 96;
    let s1 = unpack_eta(&bytes[off..], p.l, p);
    off += p.l * p.eta_poly_bytes();
    let s2 = unpack_eta(&bytes[off..], p.k, p);
    off += p.k * p.eta_poly_bytes();
    let t0 = bytes[off..]
        .chunks_exact(416)
        .take(p.k)
        .map(|c| {
            let v: Vec<i32> = unpack_bits(c, D, N)
                .into_iter()
                .map(|x| (1 << (D - 1)) - x as i32)
                .collect();
            DPoly::from_coeffs(&v)
        })
        .collect();
    SecretKey { rho, key, tr, s1, s2, t0 }
}

fn pack_sig(c: &[u8; 32], z: &[DPoly], hints: &[Vec<usize>], p: &SigParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(p.sig_len);
    out.extend_from_slice(c);
    for poly in z {
        pack_bits(
            poly.coeffs.iter().map(|&x| (p.gamma1 - centered(x)) as u32),
            p.z_bits(),
            &mut out,
        );
    }
    let mut h = vec![0u8; p.omega + p.k];
    let mut k = 0;
    for (i, positions) in hints.iter().enumerate() {
        for &j in positions {
            h[k] = j as u8;
            k += 1;
        }
        h[p.omega + i] = k as u8;
    }
    out.extend_from_slice(&h);
    out
}

/// Challenge seed, response vector and per-polynomial hint bits.
type UnpackedSig = ([u8; 32], PolyVec, Vec<[bool; N]>);

fn unpack_sig(sig: &[u8], p: &SigParams) -> Result<UnpackedSig, Rejection> {
    let c: [u8; 32] = sig[..32].try_into().unwrap();
    let z_end = 32 + p.l * p.z_poly_bytes();
    let z = sig[32..z_end]
        .chunks_exact(p.z_poly_bytes())
        .map(|ch| {
            let v: Vec<i32> = unpack_bits(ch, p.z_bits(), N)
                .into_iter()
                .map(|x| p.gamma1 - x as i32)
                .collect();
            DPoly::from_coeffs(&v)
        })
        .collect();

    let hb = &sig[z_end..];
    let mut h = vec![[false; N]; p.k];
    let mut k = 0usize;
    for (i, hi) in h.iter_mut().enumerate() {
        let end = usize::from(hb[p.omega + i]);
        if end > p.omega {
            return Err(Rejection::HintOverflow);
        }
        if end < k {
            return Err(Rejection::MalformedSignature);
        }
        for j in k..end {
            // positions must be strictly increasing within a polynomial
            if j > k && hb[j] <= hb[j - 1] {
                return Err(Rejection::MalformedSignature);
            }
            hi[usize::from(hb[j])] = true;
        }
        k = end;
    }
    if hb[k..p.omega].iter().any(|&b| b != 0) {
        return Err(Rejection::MalformedSignature);
    }
    Ok((c, z, h))
}

/// Deterministic key generation from a 32-byte seed.
pub fn keygen(seed: &[u8], p: &SigParams) -> Result<(Vec<u8>, Vec<u8>), CryptoError> {
    if seed.len() != SEED_BYTES {
        return Err(CryptoError::invalid("keygen seed", SEED_BYTES, seed.len()));
    }
    let mut seedbuf = [0u8; 2 * SEED_BYTES + CRH_BYTES];
    crh(&mut seedbuf, &[seed]);
    let rho: [u8; 32] = seedbuf[..32].try_into().unwrap();
    let rhoprime: [u8; 64] = seedbuf[32..96].try_into().unwrap();
    let key: [u8; 32] = seedbuf[96..].try_into().unwrap();

    let mat = expand_matrix(&rho, p);
    let s1: PolyVec = (0..p.l).map(|i| uniform_eta(&rhoprime, i as u16, p.eta)).collect();
    let s2: PolyVec = (0..p.k)
        .map(|i| uniform_eta(&rhoprime, (p.l + i) as u16, p.eta))
        .collect();

    let t = mat_vec(&mat, &ntt_vec(&s1));
    let mut t1 = vec![[0i32; N]; p.k];
    let mut t0 = Vec::with_capacity(p.k);
    for (i, (ti, s2i)) in t.iter().zip(&s2).enumerate() {
        let full = ti.add(s2i);
        let mut low = [0i32; N];
        for j in 0..N {
            let (hi, lo) = power2round(full.coeffs[j]);
            t1[i][j] = hi;
            low[j] = lo;
        }
        t0.push(DPoly::from_coeffs(&low));
    }

    let pk = pack_pk(&rho, &t1);
    let mut tr = [0u8; 32];
    crh(&mut tr, &[&pk]);
    let sk = pack_sk(&SecretKey { rho, key, tr, s1, s2, t0 }, p);
    debug_assert_eq!((pk.len(), sk.len()), (p.pk_len, p.sk_len));
    Ok((pk, sk))
}

/// Key generation drawing the seed from `rng`.
pub fn keygen_rng(rng: &mut DrbgState, p: &SigParams) -> (Vec<u8>, Vec<u8>) {
    let seed: [u8; SEED_BYTES] = rng.generate_array();
    keygen(&seed, p).expect("seed sized")
}

/// Detached signature plus the number of rejection-loop iterations it took.
pub fn sign_detached(sk: &[u8], msg: &[u8], p: &SigParams) -> Result<(Vec<u8>, u32), CryptoError> {
    if sk.len() != p.sk_len {
        return Err(CryptoError::invalid("secret key", p.sk_len, sk.len()));
    }
    let sk = unpack_sk(sk, p);
    let mut mu = [0u8; CRH_BYTES];
    crh(&mut mu, &[&sk.tr, msg]);
    let mut rhoprime = [0u8; CRH_BYTES];
    crh(&mut rhoprime, &[&sk.key, &mu]);

    let mat = expand_matrix(&sk.rho, p);
    let s1_hat = ntt_vec(&sk.s1);
    let s2_hat = ntt_vec(&sk.s2);
    let t0_hat = ntt_vec(&sk.t0);

    let mut nonce: u16 = 0;
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        let y: PolyVec = (0..p.l)
            .map(|i| uniform_gamma1(&rhoprime, (p.l as u16) * nonce + i as u16, p.gamma1))
            .collect();
        nonce = nonce.wrapping_add(1);

        let w = mat_vec(&mat, &ntt_vec(&y));
        let mut w1 = vec![[0i32; N]; p.k];
        let mut w0 = vec![[0i32; N]; p.k];
        for i in 0..p.k {
            for j in 0..N {
                let (hi, lo) = decompose(w[i].coeffs[j], p.gamma2);
                w1[i][j] = hi;
                w0[i][j] = lo;
            }
        }

        let mut c_tilde = [0u8; SEED_BYTES];
        crh(&mut c_tilde, &[&mu, &pack_w1_vec(&w1, p)]);
        let c_hat = d_ntt(&sample_in_ball(&c_tilde, p.tau));

        let z: PolyVec = s1_hat
            .iter()
            .zip(&y)
            .map(|(s, yi)| d_inv_ntt(&pointwise(&c_hat, s)).add(yi))
            .collect();
        if z.iter().any(|zi| zi.exceeds(p.gamma1 - p.beta)) {
            continue;
        }

        // r0 = lowbits(w - c s2) must stay below gamma2 - beta
        let cs2: PolyVec = s2_hat.iter().map(|s| d_inv_ntt(&pointwise(&c_hat, s))).collect();
        let mut r0 = vec![[0i32; N]; p.k];
        let mut reject = false;
        for i in 0..p.k {
            for j in 0..N {
                let v = w0[i][j] - centered(cs2[i].coeffs[j]);
                if v.abs() >= p.gamma2 - p.beta {
                    reject = true;
                }
                r0[i][j] = v;
            }
        }
        if reject {
            continue;
        }

        let ct0: PolyVec = t0_hat.iter().map(|t| d_inv_ntt(&pointwise(&c_hat, t))).collect();
        if ct0.iter().any(|t| t.exceeds(p.gamma2)) {
            continue;
        }

        let mut hints: Vec<Vec<usize>> = vec![Vec::new(); p.k];
        for i in 0..p.k {
            for j in 0..N {
                let low = r0[i][j] + centered(ct0[i].coeffs[j]);
                if make_hint(low, w1[i][j], p.gamma2) {
                    hints[i].push(j);
                }
            }
        }
        if hints.iter().map(Vec::len).sum::<usize>() > p.omega {
            continue;
        }

        assert!(
            z.iter().all(|zi| !zi.exceeds(p.gamma1 - p.beta)),
            "released z violates norm bound"
        );
        let sig = pack_sig(&c_tilde, &z, &hints, p);
        debug_assert_eq!(sig.len(), p.sig_len);
        return Ok((sig, attempts));
    }
}

/// `crypto_sign`: returns `signature || msg`.
pub fn sign(sk: &[u8], msg: &[u8], p: &SigParams) -> Result<Vec<u8>, CryptoError> {
    sign_with_attempts(sk, msg, p).map(|(sm, _)| sm)
}

pub fn sign_with_attempts(sk: &[u8], msg: &[u8], p: &SigParams) -> Result<(Vec<u8>, u32), CryptoError> {
    let (mut sm, attempts) = sign_detached(sk, msg, p)?;
    sm.extend_from_slice(msg);
    Ok((sm, attempts))
}

/// Detached verification.
pub fn verify_detached(pk: &[u8], sig: &[u8], msg: &[u8], p: &SigParams) -> Result<(), Rejection> {
    if sig.len() != p.sig_len || pk.len() != p.pk_len {
        return Err(Rejection::MalformedSignature);
    }
    let (rho, t1) = unpack_pk(pk, p);
    let (c_tilde, z, h) = unpack_sig(sig, p)?;
    if z.iter().any(|zi| zi.exceeds(p.gamma1 - p.beta)) {
        return Err(Rejection::NormBound);
    }

    let mut tr = [0u8; 32];
    crh(&mut tr, &[pk]);
    let mut mu = [0u8; CRH_BYTES];
    crh(&mut mu, &[&tr, msg]);

    let c_hat = d_ntt(&sample_in_ball(&c_tilde, p.tau));
    let mat = expand_matrix(&rho, p);
    let az = ntt_vec(&z);
    let mut w1 = vec![[0i32; N]; p.k];
    for i in 0..p.k {
        let t1_hat = d_ntt(&t1[i].shift_left(D));
        let w = d_inv_ntt(&pointwise_acc(&mat[i], &az).sub(&pointwise(&c_hat, &t1_hat)));
        for j in 0..N {
            w1[i][j] = use_hint(w.coeffs[j], h[i][j], p.gamma2);
        }
    }

    let mut c2 = [0u8; SEED_BYTES];
    crh(&mut c2, &[&mu, &pack_w1_vec(&w1, p)]);
    if c2 == c_tilde {
        Ok(())
    } else {
        Err(Rejection::ChallengeMismatch)
    }
}

/// `crypto_sign_open`. Truncated input is a fault; a bad signature is a
/// rejection value.
pub fn verify(pk: &[u8], sm: &[u8], p: &SigParams) -> Result<Result<Vec<u8>, Rejection>, CryptoError> {
    if pk.len() != p.pk_len {
        return Err(CryptoError::invalid("public key", p.pk_len, pk.len()));
    }
    if sm.len() < p.sig_len {
        return Err(CryptoError::MalformedInput(format!(
            "signed message of {} bytes is shorter than the {}-byte signature",
            sm.len(),
            p.sig_len
        )));
    }
    let (sig, msg) = sm.split_at(p.sig_len);
    Ok(verify_detached(pk, sig, msg, p).map(|()| msg.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_lengths() {
        let got: Vec<_> = ALL_PARAMS
            .iter()
            .map(|p| (p.pk_len, p.sk_len, p.sig_len))
            .collect();
        assert_eq!(got, vec![(1312, 2528, 2420), (1952, 4000, 3293), (2592, 4864, 4595)]);
        for p in ALL_PARAMS {
            assert_eq!(p.beta, p.tau as i32 * p.eta);
            assert!(p.gamma2 == (Q - 1) / 88 || p.gamma2 == (Q - 1) / 32);
        }
    }

    #[test]
    fn roundtrip_all_modes() {
        for p in ALL_PARAMS {
            let (pk, sk) = keygen(&[p.mode; 32], p).unwrap();
            let msg = b"attached message";
            let sm = sign(&sk, msg, p).unwrap();
            assert_eq!(sm.len(), p.sig_len + msg.len());
            assert_eq!(verify(&pk, &sm, p).unwrap().unwrap(), msg.to_vec());
        }
    }

    #[test]
    fn empty_message() {
        let p = &DILITHIUM2;
        let (pk, sk) = keygen(&[0u8; 32], p).unwrap();
        let sm = sign(&sk, b"", p).unwrap();
        assert_eq!(sm.len(), p.sig_len);
        assert_eq!(verify(&pk, &sm, p).unwrap().unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn truncated_is_malformed_input() {
        let p = &DILITHIUM3;
        let (pk, _) = keygen(&[1u8; 32], p).unwrap();
        assert!(matches!(
            verify(&pk, &vec![0u8; p.sig_len - 1], p),
            Err(CryptoError::MalformedInput(_))
        ));
    }

    #[test]
    fn deterministic_signing() {
        let p = &DILITHIUM5;
        let (_, sk) = keygen(&[2u8; 32], p).unwrap();
        assert_eq!(sign(&sk, b"m", p).unwrap(), sign(&sk, b"m", p).unwrap());
    }

    #[test]
    fn hint_overflow_count_rejected() {
        let p = &DILITHIUM2;
        let (pk, sk) = keygen(&[4u8; 32], p).unwrap();
        let mut sm = sign(&sk, b"x", p).unwrap();
        let hint_start = p.sig_len - p.omega - p.k;
        // claim more hint positions than omega allows
        sm[hint_start + p.omega] = (p.omega + 1) as u8;
        assert_eq!(verify(&pk, &sm, p).unwrap(), Err(Rejection::HintOverflow));
    }
}
