//! Arithmetic in R_q = Z_3329[X]/(X^256 + 1).
//!
//! Public functions take and return canonical coefficients in `[0, q)`. The
//! transform internals use the reference Montgomery/Barrett reductions and
//! normalise before returning.

use crate::error::CryptoError;
use crate::keccak::{KeccakState, SHAKE128_RATE};
use crate::pack::{pack_bits, unpack_bits};

pub const N: usize = 256;
pub const Q: i16 = 3329;
const Q32: i32 = Q as i32;
/// q^-1 mod 2^16, signed.
const QINV: i16 = -3327;
/// 2^32 mod q.
const MONT_SQ: i16 = 1353;
/// 2^16 / 128 mod q; scales the inverse transform to an exact inverse.
const INV_NTT_SCALE: i16 = 512;
pub const POLY_BYTES: usize = 384;

const fn pow_mod(base: i64, mut exp: u32, m: i64) -> i64 {
    let mut acc = 1i64;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc
}

const fn brv7(x: usize) -> u32 {
    let mut r = 0u32;
    let mut i = 0;
    while i < 7 {
        r |= (((x >> i) & 1) as u32) << (6 - i);
        i += 1;
    }
    r
}

/// Powers of the primitive 256th root 17 in bit-reversed order, Montgomery
/// form, centred.
const ZETAS: [i16; 128] = {
    let mut z = [0i16; 128];
    let mut i = 0;
    while i < 128 {
        let v = pow_mod(17, brv7(i), Q as i64) * 65536 % (Q as i64);
        z[i] = if v > (Q as i64) / 2 { (v - Q as i64) as i16 } else { v as i16 };
        i += 1;
    }
    z
};

#[inline]
fn montgomery_reduce(a: i32) -> i16 {
    let t = (a as i16).wrapping_mul(QINV);
    ((a - i32::from(t) * Q32) >> 16) as i16
}

#[inline]
fn fqmul(a: i16, b: i16) -> i16 {
    montgomery_reduce(i32::from(a) * i32::from(b))
}

#[inline]
fn barrett_reduce(a: i16) -> i16 {
    const V: i32 = ((1 << 26) + Q32 / 2) / Q32;
    let t = ((V * i32::from(a) + (1 << 25)) >> 26) as i16;
    a - t * Q
}

#[inline]
fn canonical(a: i16) -> i16 {
    let r = barrett_reduce(a);
    r + ((r >> 15) & Q)
}

/// A polynomial with 256 coefficients in `[0, q)`.
#[derive(Clone, PartialEq, Eq)]
pub struct KPoly {
    pub coeffs: [i16; N],
}

impl std::fmt::Debug for KPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KPoly({:?}..)", &self.coeffs[..8])
    }
}

impl Default for KPoly {
    fn default() -> Self {
        Self::zero()
    }
}

impl KPoly {
    pub fn zero() -> Self {
        Self { coeffs: [0; N] }
    }

    /// Builds a polynomial from arbitrary integers, reducing mod q.
    pub fn from_coeffs(c: &[i32]) -> Self {
        assert_eq!(c.len(), N);
        let mut p = Self::zero();
        for (dst, &v) in p.coeffs.iter_mut().zip(c) {
            *dst = v.rem_euclid(Q32) as i16;
        }
        p
    }

    fn normalize(&mut self) {
        for c in self.coeffs.iter_mut() {
            *c = canonical(*c);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (a, b) in r.coeffs.iter_mut().zip(&other.coeffs) {
            *a = canonical(*a + *b);
        }
        r
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (a, b) in r.coeffs.iter_mut().zip(&other.coeffs) {
            *a = canonical(*a - *b);
        }
        r
    }

    /// 12-bit serialisation.
    pub fn to_bytes(&self, out: &mut Vec<u8>) {
        pack_bits(self.coeffs.iter().map(|&c| c as u32), 12, out);
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        debug_assert_eq!(bytes.len(), POLY_BYTES);
        let mut p = Self::zero();
        for (dst, v) in p.coeffs.iter_mut().zip(unpack_bits(bytes, 12, N)) {
            *dst = (v % Q as u32) as i16;
        }
        p
    }

    /// Each message bit becomes 0 or round(q/2).
    pub fn from_msg(msg: &[u8; 32]) -> Self {
        let mut p = Self::zero();
        for (i, c) in p.coeffs.iter_mut().enumerate() {
            let bit = (msg[i / 8] >> (i % 8)) & 1;
            *c = i16::from(bit) * ((Q + 1) / 2);
        }
        p
    }

    pub fn to_msg(&self) -> [u8; 32] {
        let mut msg = [0u8; 32];
        for (i, &c) in self.coeffs.iter().enumerate() {
            msg[i / 8] |= (compress(c, 1) as u8) << (i % 8);
        }
        msg
    }

    pub fn compress_to(&self, d: u32, out: &mut Vec<u8>) {
        pack_bits(self.coeffs.iter().map(|&c| compress(c, d)), d, out);
    }

    pub fn decompress_from(bytes: &[u8], d: u32) -> Self {
        let mut p = Self::zero();
        for (dst, v) in p.coeffs.iter_mut().zip(unpack_bits(bytes, d, N)) {
            *dst = decompress(v, d);
        }
        p
    }
}

/// `round(2^d * x / q) mod 2^d` for `x` in `[0, q)`.
pub fn compress(x: i16, d: u32) -> u32 {
    let x = x as u32;
    (((x << d) + (Q as u32) / 2) / (Q as u32)) & ((1 << d) - 1)
}

/// `round(q * y / 2^d)`.
pub fn decompress(y: u32, d: u32) -> i16 {
    ((y * Q as u32 + (1 << (d - 1))) >> d) as i16
}

/// Forward NTT; output is in bit-reversed order.
pub fn ntt(p: &KPoly) -> KPoly {
    let mut r = p.coeffs;
    let mut k = 1;
    let mut len = 128;
    while len >= 2 {
        for start in (0..N).step_by(2 * len) {
            let zeta = ZETAS[k];
            k += 1;
            for j in start..start + len {
                let t = fqmul(zeta, r[j + len]);
                r[j + len] = r[j] - t;
                r[j] += t;
            }
        }
        len >>= 1;
    }
    let mut out = KPoly { coeffs: r };
    out.normalize();
    out
}

/// Inverse NTT, scaled so that `inv_ntt(ntt(p)) == p`.
pub fn inv_ntt(p: &KPoly) -> KPoly {
    let mut r = p.coeffs;
    let mut k = 127;
    let mut len = 2;
    while len <= 128 {
        for start in (0..N).step_by(2 * len) {
            let zeta = ZETAS[k];
            k -= 1;
            for j in start..start + len {
                let t = r[j];
                r[j] = barrett_reduce(t + r[j + len]);
                r[j + len] = fqmul(zeta, r[j + len] - t);
            }
        }
        len <<= 1;
    }
    for c in r.iter_mut() {
        *c = fqmul(*c, INV_NTT_SCALE);
    }
    let mut out = KPoly { coeffs: r };
    out.normalize();
    out
}

fn basemul_pair(r: &mut [i16], a: &[i16], b: &[i16], zeta: i16) {
    r[0] = fqmul(fqmul(a[1], b[1]), zeta) + fqmul(a[0], b[0]);
    r[1] = fqmul(a[0], b[1]) + fqmul(a[1], b[0]);
}

/// Product of two NTT-domain polynomials (128 degree-one multiplications
/// modulo `X^2 - zeta`).
pub fn basemul(a: &KPoly, b: &KPoly) -> KPoly {
    let mut r = [0i16; N];
    for i in 0..N / 4 {
        let z = ZETAS[64 + i];
        let o = 4 * i;
        basemul_pair(&mut r[o..o + 2], &a.coeffs[o..o + 2], &b.coeffs[o..o + 2], z);
        basemul_pair(&mut r[o + 2..o + 4], &a.coeffs[o + 2..o + 4], &b.coeffs[o + 2..o + 4], -z);
    }
    // Undo the 2^-16 factor carried by fqmul.
    for c in r.iter_mut() {
        *c = fqmul(*c, MONT_SQ);
    }
    let mut out = KPoly { coeffs: r };
    out.normalize();
    out
}

/// Sum of pairwise NTT-domain products.
pub fn basemul_acc(a: &[KPoly], b: &[KPoly]) -> KPoly {
    a.iter()
        .zip(b)
        .fold(KPoly::zero(), |acc, (x, y)| acc.add(&basemul(x, y)))
}

/// Centred binomial sample with parameter `eta` from `64 * eta` bytes.
pub fn cbd(eta: usize, buf: &[u8]) -> Result<KPoly, CryptoError> {
    if buf.len() != 64 * eta {
        return Err(CryptoError::invalid("cbd buffer", 64 * eta, buf.len()));
    }
    let mut r = [0i32; N];
    match eta {
        2 => {
            for (i, chunk) in buf.chunks_exact(4).enumerate() {
                let t = u32::from_le_bytes(chunk.try_into().unwrap());
                let d = (t & 0x5555_5555) + ((t >> 1) & 0x5555_5555);
                for j in 0..8 {
                    let a = (d >> (4 * j)) & 0x3;
                    let b = (d >> (4 * j + 2)) & 0x3;
                    r[8 * i + j] = a as i32 - b as i32;
                }
            }
        }
        3 => {
            for (i, chunk) in buf.chunks_exact(3).enumerate() {
                let t = u32::from(chunk[0]) | u32::from(chunk[1]) << 8 | u32::from(chunk[2]) << 16;
                let d = (t & 0x0024_9249) + ((t >> 1) & 0x0024_9249) + ((t >> 2) & 0x0024_9249);
                for j in 0..4 {
                    let a = (d >> (6 * j)) & 0x7;
                    let b = (d >> (6 * j + 3)) & 0x7;
                    r[4 * i + j] = a as i32 - b as i32;
                }
            }
        }
        _ => return Err(CryptoError::InvalidArgument(format!("unsupported eta {eta}"))),
    }
    Ok(KPoly::from_coeffs(&r))
}

/// Noise polynomial from `PRF(seed, nonce) = SHAKE256(seed || nonce)`.
pub fn get_noise(eta: usize, seed: &[u8; 32], nonce: u8) -> KPoly {
    let mut st = KeccakState::shake256();
    st.absorb(seed);
    st.absorb(&[nonce]);
    let buf = st.squeeze_vec(64 * eta);
    cbd(eta, &buf).expect("buffer sized for eta")
}

/// Uniform polynomial by rejection sampling a SHAKE128 stream over
/// `seed || x || y`.
pub fn uniform(seed: &[u8; 32], x: u8, y: u8) -> KPoly {
    let mut st = KeccakState::shake128();
    st.absorb(seed);
    st.absorb(&[x, y]);
    let mut p = KPoly::zero();
    let mut ctr = 0;
    // Three blocks are enough for almost every seed; continue one block at a time.
    let mut buf = st.squeeze_vec(3 * SHAKE128_RATE);
    loop {
        for chunk in buf.chunks_exact(3) {
            let v0 = (u16::from(chunk[0]) | u16::from(chunk[1]) << 8) & 0xfff;
            let v1 = (u16::from(chunk[1]) >> 4 | u16::from(chunk[2]) << 4) & 0xfff;
            if v0 < Q as u16 {
                p.coeffs[ctr] = v0 as i16;
                ctr += 1;
                if ctr == N {
                    return p;
                }
            }
            if v1 < Q as u16 {
                p.coeffs[ctr] = v1 as i16;
                ctr += 1;
                if ctr == N {
                    return p;
                }
            }
        }
        buf = st.squeeze_vec(SHAKE128_RATE);
    }
}
