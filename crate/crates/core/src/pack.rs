//! Little-endian bit-stream packing shared by both lattice engines. Every
//! coefficient codec in Kyber and Dilithium writes values LSB-first into a
//! contiguous bit stream, so one packer covers all of them.

pub(crate) fn pack_bits<I>(values: I, bits: u32, out: &mut Vec<u8>)
where
    I: IntoIterator<Item = u32>,
{
    debug_assert!(bits > 0 && bits <= 24);
    let mask = (1u64 << bits) - 1;
    let mut acc = 0u64;
    let mut filled = 0u32;
    for v in values {
        acc |= (u64::from(v) & mask) << filled;
        filled += bits;
        while filled >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            filled -= 8;
        }
    }
    if filled > 0 {
        out.push(acc as u8);
    }
}

pub(crate) fn unpack_bits(bytes: &[u8], bits: u32, count: usize) -> Vec<u32> {
    debug_assert!(bytes.len() * 8 >= bits as usize * count);
    let mask = (1u64 << bits) - 1;
    let mut out = Vec::with_capacity(count);
    let mut acc = 0u64;
    let mut filled = 0u32;
    let mut iter = bytes.iter();
    while out.len() < count {
        while filled < bits {
            acc |= u64::from(*iter.next().expect("length checked by caller")) << filled;
            filled += 8;
        }
        out.push((acc & mask) as u32);
        acc >>= bits;
        filled -= bits;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn twelve_bit_layout() {
        let mut out = Vec::new();
        pack_bits([0xABC, 0x123], 12, &mut out);
        assert_eq!(out, vec![0xBC, 0x3A, 0x12]);
    }

    proptest! {
        #[test]
        fn roundtrip(bits in 1u32..=23, raw in proptest::collection::vec(any::<u32>(), 0..300)) {
            let vals: Vec<u32> = raw.iter().map(|v| v & ((1 << bits) - 1)).collect();
            let mut out = Vec::new();
            pack_bits(vals.iter().copied(), bits, &mut out);
            prop_assert_eq!(out.len(), (vals.len() * bits as usize).div_ceil(8));
            prop_assert_eq!(unpack_bits(&out, bits, vals.len()), vals);
        }
    }
}
