//! Byte streams to homopolymer-free nucleotide data blocks.
//!
//! A layer stream is cut into [`DataBlock`]s of 30 payload bytes. Each block
//! is serialized as `index (u32 BE) | crc (u16 BE) | payload (30 bytes)`,
//! every 3-byte group is written as 16 base-3 digits, and the digits are
//! mapped to nucleotides with a rotating code: digit `t` selects the `t`-th
//! base of `ACGT` once the previously emitted base is removed. The result is
//! 192 nucleotides with no two equal neighbours.

use crc::{Crc, CRC_16_IBM_3740};
use thiserror::Error;

use crate::dna;

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection).
const CRC16: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub const PAYLOAD_BYTES: usize = 30;
pub const HEADER_BYTES: usize = 6;
pub const BLOCK_BYTES: usize = HEADER_BYTES + PAYLOAD_BYTES;
pub const TRITS_PER_GROUP: usize = 16;
pub const BLOCK_NTS: usize = BLOCK_BYTES / 3 * TRITS_PER_GROUP;
/// Nucleotides covering the serialized header (index and CRC).
pub const HEADER_NTS: usize = HEADER_BYTES / 3 * TRITS_PER_GROUP;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranscodeError {
    #[error("byte length {0} is not a multiple of 3")]
    Padding(usize),
    #[error("trit length {0} is not a multiple of 16")]
    TritLength(usize),
    #[error("trit group {group} has value {value} >= 2^24")]
    Corruption { group: usize, value: u64 },
    #[error("invalid trit {0}")]
    BadTrit(u8),
    #[error("nucleotide {found:?} at position {position} repeats its predecessor")]
    Repeat { position: usize, found: char },
    #[error("invalid nucleotide {found:?} at position {position}")]
    BadNucleotide { position: usize, found: char },
    #[error("expected {expected} nucleotides, got {found}")]
    Length { expected: usize, found: usize },
    #[error("block index {index} is missing")]
    Gap { index: u32 },
    #[error("block {index} failed its CRC check")]
    Integrity { index: u32 },
}

pub fn crc16(data: &[u8]) -> u16 {
    CRC16.checksum(data)
}

/// Each 3-byte big-endian group becomes 16 base-3 digits, most
/// significant first.
pub fn bytes_to_trits(data: &[u8]) -> Result<Vec<u8>, TranscodeError> {
    if !data.len().is_multiple_of(3) {
        return Err(TranscodeError::Padding(data.len()));
    }
    let mut out = Vec::with_capacity(data.len() / 3 * TRITS_PER_GROUP);
    for g in data.chunks_exact(3) {
        let mut v = (u32::from(g[0]) << 16) | (u32::from(g[1]) << 8) | u32::from(g[2]);
        let mut digits = [0u8; TRITS_PER_GROUP];
        for d in digits.iter_mut().rev() {
            *d = (v % 3) as u8;
            v /= 3;
        }
        out.extend_from_slice(&digits);
    }
    Ok(out)
}

pub fn trits_to_bytes(trits: &[u8]) -> Result<Vec<u8>, TranscodeError> {
    if !trits.len().is_multiple_of(TRITS_PER_GROUP) {
        return Err(TranscodeError::TritLength(trits.len()));
    }
    let mut out = Vec::with_capacity(trits.len() / TRITS_PER_GROUP * 3);
    for (group, g) in trits.chunks_exact(TRITS_PER_GROUP).enumerate() {
        let mut v = 0u64;
        for &t in g {
            if t > 2 {
                return Err(TranscodeError::BadTrit(t));
            }
            v = v * 3 + u64::from(t);
        }
        if v >= 1 << 24 {
            return Err(TranscodeError::Corruption { group, value: v });
        }
        out.extend_from_slice(&[(v >> 16) as u8, (v >> 8) as u8, v as u8]);
    }
    Ok(out)
}

/// The three bases that may follow `prev`, in lexicographic order.
#[inline]
fn successors(prev: u8) -> [u8; 3] {
    let mut out = [0u8; 3];
    let mut i = 0;
    for b in dna::ALPHABET {
        if b != prev && i < 3 {
            out[i] = b;
            i += 1;
        }
    }
    out
}

pub fn trits_to_nucleotides(trits: &[u8], prev: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(trits.len());
    let mut last = prev;
    for &t in trits {
        let b = successors(last)[usize::from(t)];
        out.push(b);
        last = b;
    }
    out
}

pub fn nucleotides_to_trits(nts: &[u8], prev: u8) -> Result<Vec<u8>, TranscodeError> {
    let mut out = Vec::with_capacity(nts.len());
    let mut last = prev;
    for (position, &b) in nts.iter().enumerate() {
        if !dna::is_base(b) {
            return Err(TranscodeError::BadNucleotide {
                position,
                found: b as char,
            });
        }
        if b == last {
            return Err(TranscodeError::Repeat {
                position,
                found: b as char,
            });
        }
        let t = successors(last).iter().position(|&s| s == b).unwrap_or(0);
        out.push(t as u8);
        last = b;
    }
    Ok(out)
}

/// One addressed chunk of a layer stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DataBlock {
    pub index: u32,
    pub crc: u16,
    pub payload: [u8; PAYLOAD_BYTES],
}

impl DataBlock {
    pub fn new(index: u32, payload: [u8; PAYLOAD_BYTES]) -> Self {
        Self {
            index,
            crc: Self::checksum(index, &payload),
            payload,
        }
    }

    fn checksum(index: u32, payload: &[u8; PAYLOAD_BYTES]) -> u16 {
        let mut buf = [0u8; 4 + PAYLOAD_BYTES];
        buf[..4].copy_from_slice(&index.to_be_bytes());
        buf[4..].copy_from_slice(payload);
        crc16(&buf)
    }

    pub fn verify(&self) -> bool {
        self.crc == Self::checksum(self.index, &self.payload)
    }

    pub fn to_bytes(&self) -> [u8; BLOCK_BYTES] {
        let mut out = [0u8; BLOCK_BYTES];
        out[..4].copy_from_slice(&self.index.to_be_bytes());
        out[4..6].copy_from_slice(&self.crc.to_be_bytes());
        out[6..].copy_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8; BLOCK_BYTES]) -> Self {
        let mut payload = [0u8; PAYLOAD_BYTES];
        payload.copy_from_slice(&bytes[6..]);
        Self {
            index: u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
            crc: u16::from_be_bytes([bytes[4], bytes[5]]),
            payload,
        }
    }

    /// The 192-nt form, with the rotating code seeded by `prev`.
    pub fn to_nucleotides(&self, prev: u8) -> Vec<u8> {
        let trits = bytes_to_trits(&self.to_bytes()).expect("block length is a multiple of 3");
        trits_to_nucleotides(&trits, prev)
    }

    /// Inverse of [`DataBlock::to_nucleotides`]. The CRC is not checked.
    pub fn from_nucleotides(nts: &[u8], prev: u8) -> Result<Self, TranscodeError> {
        if nts.len() != BLOCK_NTS {
            return Err(TranscodeError::Length {
                expected: BLOCK_NTS,
                found: nts.len(),
            });
        }
        let bytes = trits_to_bytes(&nucleotides_to_trits(nts, prev)?)?;
        let mut arr = [0u8; BLOCK_BYTES];
        arr.copy_from_slice(&bytes);
        Ok(Self::from_bytes(&arr))
    }
}

/// Decodes only the index and CRC from the first [`HEADER_NTS`] bases of a
/// block, so that reads damaged further along can still be grouped.
pub fn header_from_nucleotides(nts: &[u8], prev: u8) -> Result<(u32, u16), TranscodeError> {
    if nts.len() < HEADER_NTS {
        return Err(TranscodeError::Length {
            expected: HEADER_NTS,
            found: nts.len(),
        });
    }
    let b = trits_to_bytes(&nucleotides_to_trits(&nts[..HEADER_NTS], prev)?)?;
    Ok((
        u32::from_be_bytes([b[0], b[1], b[2], b[3]]),
        u16::from_be_bytes([b[4], b[5]]),
    ))
}

/// Cuts a stream into zero-padded 30-byte blocks numbered from 0.
pub fn blocks_from_stream(stream: &[u8]) -> Vec<DataBlock> {
    stream
        .chunks(PAYLOAD_BYTES)
        .enumerate()
        .map(|(i, chunk)| {
            let mut payload = [0u8; PAYLOAD_BYTES];
            payload[..chunk.len()].copy_from_slice(chunk);
            DataBlock::new(i as u32, payload)
        })
        .collect()
}

/// Reassembles blocks in index order. Duplicated indices must carry the
/// same payload; the first one seen is kept.
pub fn stream_from_blocks(blocks: &[DataBlock]) -> Result<Vec<u8>, TranscodeError> {
    let mut sorted: Vec<&DataBlock> = blocks.iter().collect();
    sorted.sort_by_key(|b| b.index);
    sorted.dedup_by_key(|b| b.index);
    let mut out = Vec::with_capacity(sorted.len() * PAYLOAD_BYTES);
    for (expected, b) in sorted.iter().enumerate() {
        if b.index != expected as u32 {
            return Err(TranscodeError::Gap {
                index: expected as u32,
            });
        }
        if !b.verify() {
            return Err(TranscodeError::Integrity { index: b.index });
        }
        out.extend_from_slice(&b.payload);
    }
    Ok(out)
}
