//! Self-contained binary container for one resolution layer.
//!
//! Layout (multi-byte integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PDL1"
//! 4       1     layer index k (0 = thumbnail)
//! 5       1     decomposition levels D
//! 6       1     channels (1 or 3)
//! 7       4     image width
//! 11      4     image height
//! 15      7*n   subband records, channel-major; layer 0 holds LL,
//!               layers k >= 1 hold HL, LH, HH of level D-k+1:
//!                 u16  quantization step
//!                 u8   band id << 4 | rice parameter (u4)
//!                 u32  payload bit length
//! 15+7n   4     payload byte length
//! 19+7n   ...   payload: each subband's bits, padded to a byte boundary
//! ```
//!
//! A subband whose bit length is 0 decodes to all zeros.

use super::CodecError;

pub const MAGIC: &[u8; 4] = b"PDL1";
const FIXED_HEADER: usize = 15;
const RECORD_LEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    LL = 0,
    HL = 1,
    LH = 2,
    HH = 3,
}

impl Band {
    fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Band::LL),
            1 => Some(Band::HL),
            2 => Some(Band::LH),
            3 => Some(Band::HH),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubbandRecord {
    pub band: Band,
    pub delta: u16,
    pub rice_k: u8,
    pub bit_len: u32,
}

impl SubbandRecord {
    pub fn byte_len(&self) -> usize {
        (self.bit_len as usize).div_ceil(8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerContainer {
    pub layer_index: u8,
    pub levels: u8,
    pub channels: u8,
    pub width: u32,
    pub height: u32,
    pub records: Vec<SubbandRecord>,
    pub payload: Vec<u8>,
}

/// Bands stored in layer `k`, in record order within one channel.
pub fn bands_for_layer(layer: u8) -> &'static [Band] {
    if layer == 0 {
        &[Band::LL]
    } else {
        &[Band::HL, Band::LH, Band::HH]
    }
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

impl LayerContainer {
    /// Size of the serialized container in bytes.
    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER + RECORD_LEN * self.records.len() + 4 + self.payload.len()
    }

    /// Payload slices, one per record.
    pub fn subband_payloads(&self) -> Vec<&[u8]> {
        let mut at = 0;
        self.records
            .iter()
            .map(|r| {
                let s = &self.payload[at..at + r.byte_len()];
                at += r.byte_len();
                s
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.push(self.layer_index);
        out.push(self.levels);
        out.push(self.channels);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for r in &self.records {
            out.extend_from_slice(&r.delta.to_le_bytes());
            out.push(((r.band as u8) << 4) | (r.rice_k & 0x0f));
            out.extend_from_slice(&r.bit_len.to_le_bytes());
        }
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses a container from the start of `bytes`; trailing bytes (block
    /// padding) are ignored. Returns the container and its encoded length.
    pub fn parse(bytes: &[u8]) -> Result<(Self, usize), CodecError> {
        let need = |needed: usize| -> Result<(), CodecError> {
            if bytes.len() < needed {
                Err(CodecError::Truncated {
                    needed,
                    available: bytes.len(),
                })
            } else {
                Ok(())
            }
        };
        need(FIXED_HEADER)?;
        if &bytes[..4] != MAGIC {
            return Err(CodecError::Parse("bad magic".into()));
        }
        let layer_index = bytes[4];
        let levels = bytes[5];
        let channels = bytes[6];
        let width = read_u32(bytes, 7);
        let height = read_u32(bytes, 11);
        if channels != 1 && channels != 3 {
            return Err(CodecError::Parse(format!("bad channel count {channels}")));
        }
        if levels == 0 || layer_index > levels {
            return Err(CodecError::Parse(format!(
                "layer {layer_index} out of range for {levels} levels"
            )));
        }
        super::dwt::check_levels(width as usize, height as usize, levels as usize)
            .map_err(|e| CodecError::Parse(e.to_string()))?;

        let bands = bands_for_layer(layer_index);
        let n_records = bands.len() * channels as usize;
        let records_end = FIXED_HEADER + RECORD_LEN * n_records;
        need(records_end + 4)?;
        let mut records = Vec::with_capacity(n_records);
        for i in 0..n_records {
            let at = FIXED_HEADER + RECORD_LEN * i;
            let delta = u16::from_le_bytes([bytes[at], bytes[at + 1]]);
            let packed = bytes[at + 2];
            let band = Band::from_id(packed >> 4)
                .ok_or_else(|| CodecError::Parse(format!("unknown band id {}", packed >> 4)))?;
            if band != bands[i % bands.len()] {
                return Err(CodecError::Parse(format!(
                    "record {i} holds {band:?}, expected {:?}",
                    bands[i % bands.len()]
                )));
            }
            if delta == 0 {
                return Err(CodecError::Parse(format!("record {i} has zero step")));
            }
            records.push(SubbandRecord {
                band,
                delta,
                rice_k: packed & 0x0f,
                bit_len: read_u32(bytes, at + 3),
            });
        }
        let payload_len = read_u32(bytes, records_end) as usize;
        let expected: usize = records.iter().map(SubbandRecord::byte_len).sum();
        if payload_len != expected {
            return Err(CodecError::Parse(format!(
                "payload length {payload_len} disagrees with records ({expected})"
            )));
        }
        let start = records_end + 4;
        need(start + payload_len)?;
        let container = LayerContainer {
            layer_index,
            levels,
            channels,
            width,
            height,
            records,
            payload: bytes[start..start + payload_len].to_vec(),
        };
        Ok((container, start + payload_len))
    }
}
