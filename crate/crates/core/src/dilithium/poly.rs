//! Arithmetic in Z_8380417[X]/(X^256 + 1), rounding helpers and samplers.

use crate::keccak::{KeccakState, SHAKE128_RATE, SHAKE256_RATE};
use crate::pack::unpack_bits;

pub const N: usize = 256;
pub const Q: i32 = 8_380_417;
pub const D: u32 = 13;
const QINV: i32 = 58_728_449;
/// 2^32 / 256 mod q; makes the inverse transform exact.
const INV_NTT_SCALE: i32 = 16_382;

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

const fn brv8(x: usize) -> u32 {
    let mut r = 0u32;
    let mut i = 0;
    while i < 8 {
        r |= (((x >> i) & 1) as u32) << (7 - i);
        i += 1;
    }
    r
}

/// Powers of the 512th root of unity 1753, bit-reversed, Montgomery form,
/// centred. Entry 0 is unused.
const ZETAS: [i32; N] = {
    let mut z = [0i32; N];
    let r = (1i64 << 32) % (Q as i64);
    let mut i = 1;
    while i < N {
        let v = pow_mod(1753, brv8(i), Q as i64) * r % (Q as i64);
        z[i] = if v > (Q as i64) / 2 { (v - Q as i64) as i32 } else { v as i32 };
        i += 1;
    }
    z
};

#[inline]
fn montgomery_reduce(a: i64) -> i32 {
    let t = (a as i32).wrapping_mul(QINV);
    ((a - i64::from(t) * i64::from(Q)) >> 32) as i32
}

#[inline]
pub fn freeze(a: i64) -> i32 {
    a.rem_euclid(i64::from(Q)) as i32
}

/// Representative of `a` in `(-(q-1)/2, (q-1)/2]`.
#[inline]
pub fn centered(a: i32) -> i32 {
    let a = a.rem_euclid(Q);
    if a > (Q - 1) / 2 {
        a - Q
    } else {
        a
    }
}

/// Polynomial with canonical coefficients in `[0, q)`.
#[derive(Clone, PartialEq, Eq)]
pub struct DPoly {
    pub coeffs: [i32; N],
}

impl std::fmt::Debug for DPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DPoly({:?}..)", &self.coeffs[..8])
    }
}

impl Default for DPoly {
    fn default() -> Self {
        Self::zero()
    }
}

impl DPoly {
    pub fn zero() -> Self {
        Self { coeffs: [0; N] }
    }

    pub fn from_coeffs(c: &[i32]) -> Self {
        assert_eq!(c.len(), N);
        let mut p = Self::zero();
        for (d, &v) in p.coeffs.iter_mut().zip(c) {
            *d = v.rem_euclid(Q);
        }
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (a, b) in r.coeffs.iter_mut().zip(&o.coeffs) {
            *a = freeze(i64::from(*a) + i64::from(*b));
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (a, b) in r.coeffs.iter_mut().zip(&o.coeffs) {
            *a = freeze(i64::from(*a) - i64::from(*b));
        }
        r
    }

    pub fn shift_left(&self, bits: u32) -> Self {
        let mut r = self.clone();
        for a in r.coeffs.iter_mut() {
            *a = freeze(i64::from(*a) << bits);
        }
        r
    }

    /// True if some coefficient has centred absolute value `>= bound`.
    pub fn exceeds(&self, bound: i32) -> bool {
        self.coeffs.iter().any(|&c| centered(c).abs() >= bound)
    }
}

pub fn d_ntt(p: &DPoly) -> DPoly {
    let mut a = p.coeffs;
    let mut k = 0;
    let mut len = 128;
    while len > 0 {
        for start in (0..N).step_by(2 * len) {
            k += 1;
            let zeta = i64::from(ZETAS[k]);
            for j in start..start + len {
                let t = montgomery_reduce(zeta * i64::from(a[j + len]));
                a[j + len] = a[j] - t;
                a[j] += t;
            }
        }
        len >>= 1;
    }
    let mut out = DPoly { coeffs: a };
    for c in out.coeffs.iter_mut() {
        *c = c.rem_euclid(Q);
    }
    out
}

/// Inverse of [`d_ntt`]; `d_inv_ntt(d_ntt(p)) == p`.
pub fn d_inv_ntt(p: &DPoly) -> DPoly {
    let mut a = p.coeffs;
    let mut k = N;
    let mut len = 1;
    while len < N {
        for start in (0..N).step_by(2 * len) {
            k -= 1;
            let zeta = -i64::from(ZETAS[k]);
            for j in start..start + len {
                let t = a[j];
                a[j] = t + a[j + len];
                a[j + len] = montgomery_reduce(zeta * i64::from(t - a[j + len]));
            }
        }
        len <<= 1;
    }
    let mut out = DPoly { coeffs: a };
    for c in out.coeffs.iter_mut() {
        *c = montgomery_reduce(i64::from(INV_NTT_SCALE) * i64::from(*c)).rem_euclid(Q);
    }
    out
}

/// Coefficient-wise product of two NTT-domain polynomials.
pub fn pointwise(a: &DPoly, b: &DPoly) -> DPoly {
    let mut r = DPoly::zero();
    for i in 0..N {
        r.coeffs[i] = freeze(i64::from(a.coeffs[i]) * i64::from(b.coeffs[i]));
    }
    r
}

pub fn pointwise_acc(a: &[DPoly], b: &[DPoly]) -> DPoly {
    let mut acc = [0i64; N];
    for (x, y) in a.iter().zip(b) {
        for ((s, &xi), &yi) in acc.iter_mut().zip(&x.coeffs).zip(&y.coeffs) {
            *s += i64::from(xi) * i64::from(yi);
        }
    }
    let mut r = DPoly::zero();
    for (d, v) in r.coeffs.iter_mut().zip(acc) {
        *d = freeze(v);
    }
    r
}

/// `r = r1 * 2^13 + r0` with `r0` in `(-2^12, 2^12]`.
pub fn power2round(r: i32) -> (i32, i32) {
    let r1 = (r + (1 << (D - 1)) - 1) >> D;
    (r1, r - (r1 << D))
}

/// High and low parts with respect to `2 * gamma2`, including the
/// `q - 1` wrap-around that maps the top bucket to zero.
pub fn decompose(r: i32, gamma2: i32) -> (i32, i32) {
    let mut r1 = (r + 127) >> 7;
    if gamma2 == (Q - 1) / 32 {
        r1 = (r1 * 1025 + (1 << 21)) >> 22;
        r1 &= 15;
    } else {
        debug_assert_eq!(gamma2, (Q - 1) / 88);
        r1 = (r1 * 11275 + (1 << 23)) >> 24;
        r1 ^= ((43 - r1) >> 31) & r1;
    }
    let mut r0 = r - r1 * 2 * gamma2;
    r0 -= (((Q - 1) / 2 - r0) >> 31) & Q;
    (r1, r0)
}

pub fn high_bits(r: i32, gamma2: i32) -> i32 {
    decompose(r, gamma2).0
}

/// Hint bit: set when adding the low part `r0` would change the high part
/// `r1` it was decomposed with.
pub fn make_hint(r0: i32, r1: i32, gamma2: i32) -> bool {
    r0 > gamma2 || r0 < -gamma2 || (r0 == -gamma2 && r1 != 0)
}

pub fn use_hint(r: i32, hint: bool, gamma2: i32) -> i32 {
    let (r1, r0) = decompose(r, gamma2);
    if !hint {
        return r1;
    }
    if gamma2 == (Q - 1) / 32 {
        if r0 > 0 {
            (r1 + 1) & 15
        } else {
            (r1 - 1) & 15
        }
    } else if r0 > 0 {
        if r1 == 43 {
            0
        } else {
            r1 + 1
        }
    } else if r1 == 0 {
        43
    } else {
        r1 - 1
    }
}

/// Uniform polynomial mod q from `SHAKE128(rho || nonce_le16)`.
pub fn uniform(rho: &[u8; 32], nonce: u16) -> DPoly {
    let mut st = KeccakState::shake128();
    st.absorb(rho);
    st.absorb(&nonce.to_le_bytes());
    let mut p = DPoly::zero();
    let mut ctr = 0;
    let mut buf = st.squeeze_vec(5 * SHAKE128_RATE);
    loop {
        for c in buf.chunks_exact(3) {
            let t = (u32::from(c[0]) | u32::from(c[1]) << 8 | u32::from(c[2]) << 16) & 0x7f_ffff;
            if (t as i32) < Q {
                p.coeffs[ctr] = t as i32;
                ctr += 1;
                if ctr == N {
                    return p;
                }
            }
        }
        buf = st.squeeze_vec(SHAKE128_RATE);
    }
}

/// Secret polynomial with coefficients in `[-eta, eta]` from
/// `SHAKE256(seed || nonce_le16)`.
pub fn uniform_eta(seed: &[u8; 64], nonce: u16, eta: i32) -> DPoly {
    let mut st = KeccakState::shake256();
    st.absorb(seed);
    st.absorb(&nonce.to_le_bytes());
    let mut coeffs = [0i32; N];
    let mut ctr = 0;
    let mut push = |t: u32, ctr: &mut usize| {
        if *ctr >= N {
            return;
        }
        match eta {
            2 if t < 15 => {
                let t = t - ((205 * t) >> 10) * 5;
                coeffs[*ctr] = 2 - t as i32;
                *ctr += 1;
            }
            4 if t < 9 => {
                coeffs[*ctr] = 4 - t as i32;
                *ctr += 1;
            }
            _ => {}
        }
    };
    while ctr < N {
        let block = st.squeeze_vec(SHAKE256_RATE);
        for b in block {
            push(u32::from(b & 0x0f), &mut ctr);
            push(u32::from(b >> 4), &mut ctr);
            if ctr == N {
                break;
            }
        }
    }
    DPoly::from_coeffs(&coeffs)
}

/// Masking polynomial with coefficients in `(-gamma1, gamma1]`.
pub fn uniform_gamma1(seed: &[u8; 64], nonce: u16, gamma1: i32) -> DPoly {
    let bits = if gamma1 == 1 << 17 { 18 } else { 20 };
    let mut st = KeccakState::shake256();
    st.absorb(seed);
    st.absorb(&nonce.to_le_bytes());
    let buf = st.squeeze_vec(N * bits as usize / 8);
    let vals: Vec<i32> = unpack_bits(&buf, bits, N)
        .into_iter()
        .map(|v| gamma1 - v as i32)
        .collect();
    DPoly::from_coeffs(&vals)
}

/// Challenge polynomial with exactly `tau` coefficients equal to +-1.
pub fn sample_in_ball(seed: &[u8], tau: usize) -> DPoly {
    let mut st = KeccakState::shake256();
    st.absorb(seed);
    let mut sign_bytes = [0u8; 8];
    st.squeeze(&mut sign_bytes);
    let mut signs = u64::from_le_bytes(sign_bytes);
    let mut c = [0i32; N];
    let mut byte = [0u8; 1];
    for i in N - tau..N {
        let b = loop {
            st.squeeze(&mut byte);
            if usize::from(byte[0]) <= i {
                break usize::from(byte[0]);
            }
        };
        c[i] = c[b];
        c[b] = 1 - 2 * (signs & 1) as i32;
        signs >>= 1;
    }
    DPoly::from_coeffs(&c)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn schoolbook(a: &DPoly, b: &DPoly) -> DPoly {
        let mut acc = [0i128; N];
        for i in 0..N {
            for j in 0..N {
                let prod = i128::from(a.coeffs[i]) * i128::from(b.coeffs[j]);
                if i + j < N {
                    acc[i + j] += prod;
                } else {
                    acc[i + j - N] -= prod;
                }
            }
        }
        let c: Vec<i32> = acc.iter().map(|v| v.rem_euclid(i128::from(Q)) as i32).collect();
        DPoly::from_coeffs(&c)
    }

    #[test]
    fn zeta_table_head() {
        assert_eq!(&ZETAS[..5], &[0, 25847, -2608894, -518909, 237124]);
        assert_eq!(ZETAS[255], 1976782);
    }

    #[test]
    fn zero_poly_fixed() {
        let z = DPoly::zero();
        assert_eq!(d_ntt(&z), z);
        assert_eq!(d_inv_ntt(&z), z);
        assert_eq!(pointwise(&z, &d_ntt(&DPoly::from_coeffs(&[5; N]))), z);
    }

    #[test]
    fn rounding_at_zero() {
        assert_eq!(power2round(0), (0, 0));
        assert_eq!(decompose(0, (Q - 1) / 88), (0, 0));
        assert_eq!(decompose(0, (Q - 1) / 32), (0, 0));
    }

    #[test]
    fn decompose_wraps_top_bucket() {
        for gamma2 in [(Q - 1) / 88, (Q - 1) / 32] {
            let (r1, r0) = decompose(Q - 1, gamma2);
            assert_eq!((r1, r0), (0, -1));
        }
    }

    #[test]
    fn sample_in_ball_counts() {
        for tau in [39usize, 49, 60] {
            let c = sample_in_ball(&[tau as u8; 32], tau);
            let nz: Vec<i32> = c.coeffs.iter().map(|&x| centered(x)).filter(|&x| x != 0).collect();
            assert_eq!(nz.len(), tau);
            assert!(nz.iter().all(|&x| x == 1 || x == -1));
        }
    }

    #[test]
    fn eta_sampler_range() {
        for eta in [2, 4] {
            let p = uniform_eta(&[3u8; 64], 7, eta);
            assert!(p.coeffs.iter().all(|&c| centered(c).abs() <= eta));
        }
    }

    #[test]
    fn gamma1_sampler_range() {
        for g in [1 << 17, 1 << 19] {
            let p = uniform_gamma1(&[9u8; 64], 3, g);
            assert!(p.coeffs.iter().all(|&c| {
                let c = centered(c);
                c > -g && c <= g
            }));
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(64))]
        #[test]
        fn ntt_product_matches_schoolbook(
            a in proptest::collection::vec(0i32..Q, N),
            b in proptest::collection::vec(0i32..Q, N),
        ) {
            let (a, b) = (DPoly::from_coeffs(&a), DPoly::from_coeffs(&b));
            let got = d_inv_ntt(&pointwise(&d_ntt(&a), &d_ntt(&b)));
            let got: Vec<i32> = got.coeffs.iter().map(|&c| freeze(i64::from(c))).collect();
            proptest::prop_assert_eq!(got, schoolbook(&a, &b).coeffs.to_vec());
        }
    }
}
