use pqeval_core::dilithium::poly::{self as dpoly, decompose, high_bits, make_hint, use_hint, DPoly};
use pqeval_core::dilithium;
use pqeval_core::drbg::DrbgState;
use pqeval_core::kyber::poly::{compress, decompress, inv_ntt, ntt, KPoly, Q};
use pqeval_core::kyber::{self, kem_dec, kem_enc_derand, kem_keygen};
use proptest::prelude::*;
use sha3::digest::{ExtendableOutput, Update};
use sha3::{Digest, Sha3_256, Shake256};

const ROUNDTRIPS: usize = 200;
const DQ: i32 = dpoly::Q;
const GAMMA2S: [i32; 2] = [(DQ - 1) / 88, (DQ - 1) / 32];

fn rng(tag: u8) -> DrbgState {
    let mut e = [0u8; 48];
    e[0] = tag;
    DrbgState::new(&e).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kyber_ntt_roundtrip(c in prop::collection::vec(0i32..i32::from(Q), 256)) {
        let p = KPoly::from_coeffs(&c);
        prop_assert_eq!(inv_ntt(&ntt(&p)), p);
    }

    #[test]
    fn dilithium_ntt_roundtrip(c in prop::collection::vec(0i32..DQ, 256)) {
        let p = DPoly::from_coeffs(&c);
        prop_assert_eq!(dpoly::d_inv_ntt(&dpoly::d_ntt(&p)), p);
    }
}

fn centered_kyber(x: i32) -> i32 {
    let q = i32::from(Q);
    let x = x.rem_euclid(q);
    if x > q / 2 {
        x - q
    } else {
        x
    }
}

#[test]
fn compress_error_bound_exhaustive() {
    let q = i32::from(Q);
    for d in [4u32, 5, 10, 11] {
        // ceil(q / 2^(d+1))
        let bound = (q + (1 << (d + 1)) - 1) >> (d + 1);
        for x in 0..Q {
            let y = compress(x, d);
            assert!(y < 1 << d, "d={d} x={x}");
            let back = i32::from(decompress(y, d));
            assert!((0..q).contains(&back));
            let err = centered_kyber(back - i32::from(x)).abs();
            assert!(err <= bound, "d={d} x={x} err={err} bound={bound}");
        }
        for y in 0..1u32 << d {
            assert_eq!(compress(decompress(y, d), d), y, "d={d} y={y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    // MakeHint as the comparison of high parts; UseHint recovers the high
    // part of r + z for any |z| <= gamma2.
    #[test]
    fn hint_recovers_high_bits(r in 0..DQ, z_frac in -1.0f64..=1.0, g in 0usize..2) {
        let gamma2 = GAMMA2S[g];
        let z = (z_frac * f64::from(gamma2)).round() as i32;
        let sum = (r + z).rem_euclid(DQ);
        let hint = high_bits(r, gamma2) != high_bits(sum, gamma2);
        prop_assert_eq!(use_hint(r, hint, gamma2), high_bits(sum, gamma2));
    }

    // The signer's form: the hint is computed from w's high part and the
    // shifted low part, the verifier only sees w - cs2 + ct0.
    #[test]
    fn signer_hint_matches_verifier(
        w in 0..DQ,
        s_frac in -1.0f64..=1.0,
        t_frac in -1.0f64..1.0,
        g in 0usize..2,
    ) {
        let gamma2 = GAMMA2S[g];
        let beta = 196;
        let (w1, w0) = decompose(w, gamma2);
        let cs2 = (s_frac * f64::from(beta)).round() as i32;
        let ct0 = (t_frac * f64::from(gamma2 - 1)).round() as i32;
        let low = w0 - cs2;
        prop_assume!(low.abs() < gamma2 - beta);
        let hint = make_hint(low + ct0, w1, gamma2);
        let seen = (w - cs2 + ct0).rem_euclid(DQ);
        prop_assert_eq!(use_hint(seen, hint, gamma2), w1);
    }

    #[test]
    fn decompose_reassembles(r in 0..DQ, g in 0usize..2) {
        let gamma2 = GAMMA2S[g];
        let (r1, r0) = decompose(r, gamma2);
        prop_assert!(r0 > -gamma2 - 1 && r0 <= gamma2);
        prop_assert_eq!((r1 * 2 * gamma2 + r0).rem_euclid(DQ), r);
    }
}

#[test]
fn kem_roundtrips() {
    for (i, p) in kyber::ALL_PARAMS.iter().enumerate() {
        let mut r = rng(i as u8);
        for _ in 0..ROUNDTRIPS {
            let (pk, sk) = kem_keygen(&r.generate(64), p).unwrap();
            let (ct, ss) = kem_enc_derand(&pk, &r.generate(32), p).unwrap();
            assert_eq!(kem_dec(&sk, &ct, p).unwrap(), ss, "{}", p.name);
        }
    }
}

#[test]
fn dsa_roundtrips() {
    for (i, p) in dilithium::ALL_PARAMS.iter().enumerate() {
        let mut r = rng(10 + i as u8);
        for t in 0..ROUNDTRIPS {
            let (pk, sk) = dilithium::keygen(&r.generate(32), p).unwrap();
            let msg = r.generate(t % 97);
            let sm = dilithium::sign(&sk, &msg, p).unwrap();
            assert_eq!(sm.len(), p.sig_len + msg.len());
            assert_eq!(dilithium::verify(&pk, &sm, p).unwrap(), Ok(msg), "{}", p.name);
        }
    }
}

fn rejection_secret(z: &[u8], ct: &[u8]) -> [u8; 32] {
    let mut x = Shake256::default();
    x.update(z);
    x.update(&Sha3_256::digest(ct));
    let mut out = [0u8; 32];
    x.finalize_xof_into(&mut out);
    out
}

#[test]
fn mutated_ciphertext_gives_implicit_rejection() {
    for (i, p) in kyber::ALL_PARAMS.iter().enumerate() {
        let mut r = rng(20 + i as u8);
        let (pk, sk) = kem_keygen(&r.generate(64), p).unwrap();
        let z = &sk[p.sk_len - 32..];
        for t in 0..50 {
            let (mut ct, ss) = kem_enc_derand(&pk, &r.generate(32), p).unwrap();
            let pos = (t * 131) % ct.len();
            ct[pos] ^= 1 << (t % 8);
            let got = kem_dec(&sk, &ct, p).unwrap();
            assert_ne!(got, ss);
            assert_eq!(got, rejection_secret(z, &ct), "{} pos {pos}", p.name);
        }
    }
}

#[test]
fn mutated_signature_is_rejected() {
    for (i, p) in dilithium::ALL_PARAMS.iter().enumerate() {
        let mut r = rng(30 + i as u8);
        let (pk, sk) = dilithium::keygen(&r.generate(32), p).unwrap();
        let msg = r.generate(33);
        let sm = dilithium::sign(&sk, &msg, p).unwrap();
        for t in 0..60 {
            let mut bad = sm.clone();
            let pos = (t * 977) % bad.len();
            bad[pos] ^= 1 << (t % 8);
            let out = dilithium::verify(&pk, &bad, p).unwrap();
            assert!(out.is_err(), "{} accepted a flip at byte {pos}", p.name);
        }
        let mut other = pk.clone();
        other[40] ^= 1;
        assert!(dilithium::verify(&other, &sm, p).unwrap().is_err());
        assert!(!matches!(dilithium::verify(&pk, &sm[..10], p), Ok(Ok(_))));
    }
}
