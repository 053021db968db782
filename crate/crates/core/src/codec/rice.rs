//! Rice coding of signed wavelet coefficients.
//!
//! A coefficient `v` is first folded onto the naturals (`v >= 0 -> 2v`,
//! `v < 0 -> -2v - 1`), then written as the quotient `u >> k` in unary
//! (`1` bits closed by a `0`) followed by the `k` low bits of `u`.

use super::bitio::{BitReader, BitWriter};
use super::CodecError;

pub const MAX_RICE_K: u32 = 15;

#[inline]
pub fn fold(v: i32) -> u64 {
    if v >= 0 {
        2 * v as u64
    } else {
        (-2 * i64::from(v) - 1) as u64
    }
}

#[inline]
pub fn unfold(u: u64) -> i32 {
    if u.is_multiple_of(2) {
        (u / 2) as i32
    } else {
        -(u.div_ceil(2) as i32)
    }
}

/// Number of bits needed to code `values` with parameter `k`.
pub fn coded_bits(values: &[i32], k: u32) -> u64 {
    values
        .iter()
        .map(|&v| (fold(v) >> k) + 1 + u64::from(k))
        .sum()
}

/// Parameter in `0..=15` minimizing the coded size, smallest on ties.
pub fn best_parameter(values: &[i32]) -> u32 {
    (0..=MAX_RICE_K)
        .min_by_key(|&k| (coded_bits(values, k), k))
        .unwrap_or(0)
}

/// Encodes `values` with parameter `k`; returns the bytes (zero padded to
/// a byte boundary) and the exact bit count.
pub fn encode(values: &[i32], k: u32) -> (Vec<u8>, usize) {
    let mut w = BitWriter::new();
    for &v in values {
        let u = fold(v);
        for _ in 0..(u >> k) {
            w.push(true);
        }
        w.push(false);
        w.write_bits(u & ((1u64 << k) - 1), k);
    }
    let bits = w.bit_len();
    (w.into_bytes(), bits)
}

/// Decodes exactly `count` coefficients from the first `bit_len` bits.
pub fn decode(bytes: &[u8], bit_len: usize, k: u32, count: usize) -> Result<Vec<i32>, CodecError> {
    let mut r = BitReader::new(bytes, bit_len);
    let mut out = Vec::with_capacity(count);
    let truncated = || CodecError::Parse("rice payload ends early".into());
    for _ in 0..count {
        let mut q = 0u64;
        while r.read_bit().ok_or_else(truncated)? {
            q += 1;
        }
        let low = r.read_bits(k).ok_or_else(truncated)?;
        let u = (q << k) | low;
        if u > u64::from(u32::MAX) {
            return Err(CodecError::Parse("rice value out of range".into()));
        }
        out.push(unfold(u));
    }
    if r.remaining() != 0 {
        return Err(CodecError::Parse(format!(
            "{} unused bits after rice payload",
            r.remaining()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn folding_interleaves_signs() {
        let folded: Vec<u64> = [0, -1, 1, -2, 2].iter().map(|&v| fold(v)).collect();
        assert_eq!(folded, [0, 1, 2, 3, 4]);
        for v in [-300, -1, 0, 1, 255, i32::MAX / 4] {
            assert_eq!(unfold(fold(v)), v);
        }
    }

    #[test]
    fn known_code_words() {
        // u = 9 with k = 2: quotient 2 -> "110", remainder 01 -> "11001"
        let (bytes, bits) = encode(&[unfold(9)], 2);
        assert_eq!(bits, 5);
        assert_eq!(bytes, vec![0b1100_1000]);
        assert_eq!(decode(&bytes, bits, 2, 1).unwrap(), vec![unfold(9)]);
    }

    #[test]
    fn parameter_choice_is_exhaustive_minimum() {
        let values: Vec<i32> = (0..200).map(|i| (i * 37 % 251) - 120).collect();
        let k = best_parameter(&values);
        let best = coded_bits(&values, k);
        for other in 0..=MAX_RICE_K {
            assert!(coded_bits(&values, other) >= best);
        }
        assert_eq!(best_parameter(&[0, 0, 0]), 0);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let (bytes, bits) = encode(&[5, -3, 8], 1);
        assert!(decode(&bytes, bits - 1, 1, 3).is_err());
        assert!(decode(&bytes, bits, 1, 4).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(values in proptest::collection::vec(-5000i32..5000, 0..300), k in 0u32..=15) {
            let (bytes, bits) = encode(&values, k);
            prop_assert_eq!(bits as u64, coded_bits(&values, k));
            prop_assert_eq!(decode(&bytes, bits, k, values.len()).unwrap(), values);
        }
    }
}
