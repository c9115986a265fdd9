//! FIPS-202 Keccak-f\[1600\] and the SHA-3 / SHAKE sponge family.
//!
//! The sponge keeps an explicit absorb/squeeze position so callers can feed
//! input in pieces and pull output incrementally. Kyber's matrix expansion and
//! Dilithium's samplers rely on that: they read a SHAKE stream a few bytes at a
//! time until enough candidates pass rejection.

const ROUNDS: usize = 24;

const ROUND_CONSTANTS: [u64; ROUNDS] = [
    0x0000_0000_0000_0001,
    0x0000_0000_0000_8082,
    0x8000_0000_0000_808a,
    0x8000_0000_8000_8000,
    0x0000_0000_0000_808b,
    0x0000_0000_8000_0001,
    0x8000_0000_8000_8081,
    0x8000_0000_0000_8009,
    0x0000_0000_0000_008a,
    0x0000_0000_0000_0088,
    0x0000_0000_8000_8009,
    0x0000_0000_8000_000a,
    0x0000_0000_8000_808b,
    0x8000_0000_0000_008b,
    0x8000_0000_0000_8089,
    0x8000_0000_0000_8003,
    0x8000_0000_0000_8002,
    0x8000_0000_0000_0080,
    0x0000_0000_0000_800a,
    0x8000_0000_8000_000a,
    0x8000_0000_8000_8081,
    0x8000_0000_0000_8080,
    0x0000_0000_8000_0001,
    0x8000_0000_8000_8008,
];

// Rotation offsets and lane order for the combined rho/pi step, walking the
// pi cycle starting from lane 1.
const RHO: [u32; 24] = [
    1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 2, 14, 27, 41, 56, 8, 25, 43, 62, 18, 39, 61, 20, 44,
];
const PI: [usize; 24] = [
    10, 7, 11, 17, 18, 3, 5, 16, 8, 21, 24, 4, 15, 23, 19, 13, 12, 2, 20, 14, 22, 9, 6, 1,
];

/// Rate of SHAKE128 in bytes.
pub const SHAKE128_RATE: usize = 168;
/// Rate of SHAKE256 and SHA3-256 in bytes.
pub const SHAKE256_RATE: usize = 136;
/// Rate of SHA3-384 in bytes.
pub const SHA3_384_RATE: usize = 104;
/// Rate of SHA3-512 in bytes.
pub const SHA3_512_RATE: usize = 72;

const SHA3_SUFFIX: u8 = 0x06;
const SHAKE_SUFFIX: u8 = 0x1f;

/// Applies the 24-round Keccak-f\[1600\] permutation in place.
pub fn keccak_f1600(lanes: &mut [u64; 25]) {
    for rc in ROUND_CONSTANTS {
        // theta
        let mut c = [0u64; 5];
        for x in 0..5 {
            c[x] = lanes[x] ^ lanes[x + 5] ^ lanes[x + 10] ^ lanes[x + 15] ^ lanes[x + 20];
        }
        for x in 0..5 {
            let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
            for y in (0..25).step_by(5) {
                lanes[y + x] ^= d;
            }
        }

        // rho and pi
        let mut carry = lanes[1];
        for (&rot, &dst) in RHO.iter().zip(PI.iter()) {
            let next = lanes[dst];
            lanes[dst] = carry.rotate_left(rot);
            carry = next;
        }

        // chi
        for y in (0..25).step_by(5) {
            let row = [
                lanes[y],
                lanes[y + 1],
                lanes[y + 2],
                lanes[y + 3],
                lanes[y + 4],
            ];
            for x in 0..5 {
                lanes[y + x] = row[x] ^ (!row[(x + 1) % 5] & row[(x + 2) % 5]);
            }
        }

        // iota
        lanes[0] ^= rc;
    }
}

/// Sponge state over Keccak-f\[1600\] with a fixed rate and domain suffix.
#[derive(Clone, Debug)]
pub struct KeccakState {
    lanes: [u64; 25],
    rate_bytes: usize,
    suffix: u8,
    pos: usize,
    squeezing: bool,
}

impl KeccakState {
    fn new(rate_bytes: usize, suffix: u8) -> Self {
        debug_assert!(matches!(
            rate_bytes,
            SHAKE128_RATE | SHAKE256_RATE | SHA3_384_RATE | SHA3_512_RATE
        ));
        Self {
            lanes: [0; 25],
            rate_bytes,
            suffix,
            pos: 0,
            squeezing: false,
        }
    }

    pub fn shake128() -> Self {
        Self::new(SHAKE128_RATE, SHAKE_SUFFIX)
    }

    pub fn shake256() -> Self {
        Self::new(SHAKE256_RATE, SHAKE_SUFFIX)
    }

    pub fn sha3_256() -> Self {
        Self::new(SHAKE256_RATE, SHA3_SUFFIX)
    }

    pub fn sha3_512() -> Self {
        Self::new(SHA3_512_RATE, SHA3_SUFFIX)
    }

    pub fn rate_bytes(&self) -> usize {
        self.rate_bytes
    }

    fn xor_byte(&mut self, index: usize, byte: u8) {
        self.lanes[index / 8] ^= u64::from(byte) << (8 * (index % 8));
    }

    fn byte(&self, index: usize) -> u8 {
        (self.lanes[index / 8] >> (8 * (index % 8))) as u8
    }

    /// Absorbs more input. Panics if called after squeezing has started.
    pub fn absorb(&mut self, data: &[u8]) {
        assert!(!self.squeezing, "absorb after squeeze");
        for &b in data {
            self.xor_byte(self.pos, b);
            self.pos += 1;
            if self.pos == self.rate_bytes {
                keccak_f1600(&mut self.lanes);
                self.pos = 0;
            }
        }
    }

    fn finalize(&mut self) {
        self.xor_byte(self.pos, self.suffix);
        self.xor_byte(self.rate_bytes - 1, 0x80);
        keccak_f1600(&mut self.lanes);
        self.pos = 0;
        self.squeezing = true;
    }

    /// Fills `out` with the next bytes of the output stream, padding the
    /// input on the first call.
    pub fn squeeze(&mut self, out: &mut [u8]) {
        if !self.squeezing {
            self.finalize();
        }
        for o in out.iter_mut() {
            if self.pos == self.rate_bytes {
                keccak_f1600(&mut self.lanes);
                self.pos = 0;
            }
            *o = self.byte(self.pos);
            self.pos += 1;
        }
    }

    /// Convenience wrapper around [`squeeze`](Self::squeeze).
    pub fn squeeze_vec(&mut self, n: usize) -> Vec<u8> {
        let mut out = vec![0u8; n];
        self.squeeze(&mut out);
        out
    }
}

/// Fixed-length SHA-3 digests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DigestKind {
    Sha3_256,
    Sha3_512,
}

/// Extendable-output functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XofKind {
    Shake128,
    Shake256,
}

pub fn digest(kind: DigestKind, msg: &[u8]) -> Vec<u8> {
    let (mut st, len) = match kind {
        DigestKind::Sha3_256 => (KeccakState::sha3_256(), 32),
        DigestKind::Sha3_512 => (KeccakState::sha3_512(), 64),
    };
    st.absorb(msg);
    st.squeeze_vec(len)
}

pub fn xof(kind: XofKind, msg: &[u8], outlen: usize) -> Vec<u8> {
    let mut st = match kind {
        XofKind::Shake128 => KeccakState::shake128(),
        XofKind::Shake256 => KeccakState::shake256(),
    };
    st.absorb(msg);
    st.squeeze_vec(outlen)
}

pub fn sha3_256(msg: &[u8]) -> [u8; 32] {
    let mut st = KeccakState::sha3_256();
    st.absorb(msg);
    let mut out = [0u8; 32];
    st.squeeze(&mut out);
    out
}

pub fn sha3_512(msg: &[u8]) -> [u8; 64] {
    let mut st = KeccakState::sha3_512();
    st.absorb(msg);
    let mut out = [0u8; 64];
    st.squeeze(&mut out);
    out
}

pub fn shake256(out: &mut [u8], chunks: &[&[u8]]) {
    let mut st = KeccakState::shake256();
    for c in chunks {
        st.absorb(c);
    }
    st.squeeze(out);
}
