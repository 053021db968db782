//! Layer encoding and progressive decoding.

use super::container::{bands_for_layer, Band, LayerContainer, SubbandRecord};
use super::dwt::{self, detail_shapes, scaled_dims, DetailBands, Plane};
use super::{rice, CodecError, Image};

/// Ordered per-layer containers of one encoded image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredStream {
    pub layers: Vec<LayerContainer>,
}

impl LayeredStream {
    pub fn num_levels(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_bytes(&self) -> Vec<Vec<u8>> {
        self.layers.iter().map(LayerContainer::to_bytes).collect()
    }

    pub fn total_bytes(&self) -> usize {
        self.layers.iter().map(LayerContainer::encoded_len).sum()
    }
}

fn quantize(v: i32, delta: u16) -> i32 {
    let d = i32::from(delta);
    if d == 1 {
        return v;
    }
    v.signum() * (v.abs() / d)
}

fn dequantize(s: i32, delta: u16) -> i32 {
    if delta == 1 || s == 0 {
        return s;
    }
    let mag = ((f64::from(s.abs()) + 0.5) * f64::from(delta)).round() as i32;
    s.signum() * mag
}

fn code_band(plane: &Plane, band: Band, delta: u16, payload: &mut Vec<u8>) -> SubbandRecord {
    let q: Vec<i32> = plane.data.iter().map(|&v| quantize(v, delta)).collect();
    if q.iter().all(|&v| v == 0) {
        return SubbandRecord {
            band,
            delta,
            rice_k: 0,
            bit_len: 0,
        };
    }
    let k = rice::best_parameter(&q);
    let (bytes, bits) = rice::encode(&q, k);
    payload.extend_from_slice(&bytes);
    SubbandRecord {
        band,
        delta,
        rice_k: k as u8,
        bit_len: bits as u32,
    }
}

/// Encodes `img` into `num_levels` resolution layers (`num_levels - 1`
/// decompositions). The low band keeps step 1; detail bands use step `q`.
pub fn encode_layers(img: &Image, num_levels: usize, q: u16) -> Result<LayeredStream, CodecError> {
    if num_levels < 2 {
        return Err(CodecError::InvalidParameter(format!(
            "need at least 2 resolution levels, got {num_levels}"
        )));
    }
    if num_levels > usize::from(u8::MAX) {
        return Err(CodecError::InvalidParameter(format!(
            "too many resolution levels: {num_levels}"
        )));
    }
    if q == 0 {
        return Err(CodecError::InvalidParameter("quantization step must be >= 1".into()));
    }
    let levels = num_levels - 1;
    let pyr = dwt::dwt_forward(img, levels)?;
    let header = |layer_index: usize, records, payload| LayerContainer {
        layer_index: layer_index as u8,
        levels: levels as u8,
        channels: img.channels() as u8,
        width: img.width() as u32,
        height: img.height() as u32,
        records,
        payload,
    };

    let mut layers = Vec::with_capacity(num_levels);
    let mut payload = Vec::new();
    let records = pyr
        .channels
        .iter()
        .map(|ch| code_band(&ch.ll, Band::LL, 1, &mut payload))
        .collect();
    layers.push(header(0, records, payload));

    for k in 1..=levels {
        let level = levels - k + 1;
        let mut payload = Vec::new();
        let mut records = Vec::with_capacity(3 * img.channels());
        for ch in &pyr.channels {
            let d = &ch.details[level - 1];
            records.push(code_band(&d.hl, Band::HL, q, &mut payload));
            records.push(code_band(&d.lh, Band::LH, q, &mut payload));
            records.push(code_band(&d.hh, Band::HH, q, &mut payload));
        }
        layers.push(header(k, records, payload));
    }
    Ok(LayeredStream { layers })
}

fn decode_band(
    record: &SubbandRecord,
    payload: &[u8],
    width: usize,
    height: usize,
) -> Result<Plane, CodecError> {
    let count = width * height;
    if record.rice_k as u32 > rice::MAX_RICE_K {
        return Err(CodecError::Parse(format!("rice parameter {} too large", record.rice_k)));
    }
    let q = if record.bit_len == 0 {
        vec![0; count]
    } else {
        rice::decode(payload, record.bit_len as usize, u32::from(record.rice_k), count)?
    };
    let data = q.into_iter().map(|s| dequantize(s, record.delta)).collect();
    Plane::from_data(width, height, data)
}

/// Decodes layers `0..=target` into the image at scale `1 / 2^(D - target)`.
///
/// `layers` may be in any order and may hold extra layers; only the first
/// container seen for each index is used.
pub fn decode_layers(layers: &[LayerContainer], target: usize) -> Result<Image, CodecError> {
    let find = |j: usize| layers.iter().find(|c| usize::from(c.layer_index) == j);
    let base = find(0).ok_or(CodecError::MissingLayer(0))?;
    let levels = usize::from(base.levels);
    if target > levels {
        return Err(CodecError::InvalidParameter(format!(
            "target layer {target} exceeds {levels} decomposition levels"
        )));
    }
    let (width, height) = (base.width as usize, base.height as usize);
    let channels = usize::from(base.channels);

    let mut chosen = Vec::with_capacity(target + 1);
    for j in 0..=target {
        let c = find(j).ok_or(CodecError::MissingLayer(j))?;
        if (c.levels, c.channels, c.width, c.height) != (base.levels, base.channels, base.width, base.height) {
            return Err(CodecError::Mismatch(format!(
                "layer {j} header disagrees with layer 0"
            )));
        }
        if c.records.len() != channels * bands_for_layer(c.layer_index).len() {
            return Err(CodecError::Parse(format!("layer {j} has wrong record count")));
        }
        chosen.push(c);
    }

    let (lw, lh) = scaled_dims(width, height, levels);
    let mut samples = Vec::new();
    let mut out_dims = (lw, lh);
    let payloads: Vec<Vec<&[u8]>> = chosen.iter().map(|c| c.subband_payloads()).collect();
    for ch in 0..channels {
        let ll = decode_band(&chosen[0].records[ch], payloads[0][ch], lw, lh)?;
        let mut details = Vec::with_capacity(target);
        for (j, c) in chosen.iter().enumerate().skip(1) {
            let level = levels - j + 1;
            let shapes = detail_shapes(width, height, level);
            let mut bands = (0..3).map(|b| {
                let idx = 3 * ch + b;
                decode_band(&c.records[idx], payloads[j][idx], shapes[b].0, shapes[b].1)
            });
            details.push(DetailBands {
                hl: bands.next().unwrap()?,
                lh: bands.next().unwrap()?,
                hh: bands.next().unwrap()?,
            });
        }
        let refs: Vec<&DetailBands> = details.iter().collect();
        let plane = dwt::inverse_partial(&ll, &refs)?;
        out_dims = (plane.width, plane.height);
        samples.extend(dwt::plane_to_u8(&plane));
    }
    Image::new(out_dims.0, out_dims.1, channels, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize, channels: usize) -> Image {
        let mut s = Vec::with_capacity(w * h * channels);
        for c in 0..channels {
            for y in 0..h {
                for x in 0..w {
                    let v = (x * 7 + y * 3 + c * 50 + (x * y) % 13) % 256;
                    s.push(v as u8);
                }
            }
        }
        Image::new(w, h, channels, s).unwrap()
    }

    #[test]
    fn quantizer_round_trip_rules() {
        assert_eq!(quantize(-7, 4), -1);
        assert_eq!(quantize(7, 4), 1);
        assert_eq!(quantize(3, 4), 0);
        assert_eq!(dequantize(1, 4), 6);
        assert_eq!(dequantize(-2, 4), -10);
        assert_eq!(dequantize(1, 3), 5); // 4.5 rounds away from zero
        assert_eq!(dequantize(0, 8), 0);
        assert_eq!(dequantize(-13, 1), -13);
    }

    #[test]
    fn lossless_at_unit_step() {
        let img = gradient(37, 29, 3);
        let stream = encode_layers(&img, 4, 1).unwrap();
        assert_eq!(stream.num_levels(), 4);
        assert_eq!(decode_layers(&stream.layers, 3).unwrap(), img);
    }

    #[test]
    fn partial_decodes_have_dyadic_sizes() {
        let img = gradient(768, 512, 1);
        let stream = encode_layers(&img, 5, 2).unwrap();
        let expect = [(48, 32), (96, 64), (192, 128), (384, 256), (768, 512)];
        for (k, dims) in expect.iter().enumerate() {
            let out = decode_layers(&stream.layers, k).unwrap();
            assert_eq!((out.width(), out.height()), *dims);
        }
    }

    #[test]
    fn all_zero_image_codes_to_almost_nothing() {
        let img = Image::filled(768, 512, 1, 0).unwrap();
        for q in [1, 4] {
            let stream = encode_layers(&img, 5, q).unwrap();
            let payload: usize = stream.layers.iter().map(|c| c.payload.len()).sum();
            assert!(payload < img.samples().len() / 20);
            assert!(stream.layers.iter().all(|c| c.records.iter().all(|r| r.bit_len == 0)));
            assert_eq!(decode_layers(&stream.layers, 4).unwrap(), img);
        }
    }

    #[test]
    fn missing_and_mismatched_layers() {
        let img = gradient(32, 32, 1);
        let stream = encode_layers(&img, 3, 1).unwrap();
        let without_one = vec![stream.layers[0].clone(), stream.layers[2].clone()];
        assert_eq!(decode_layers(&without_one, 2), Err(CodecError::MissingLayer(1)));
        assert!(decode_layers(&without_one, 0).is_ok());
        assert_eq!(decode_layers(&stream.layers[1..], 1), Err(CodecError::MissingLayer(0)));
        assert!(decode_layers(&stream.layers, 3).is_err());

        let other = encode_layers(&gradient(64, 32, 1), 3, 1).unwrap();
        let mixed = vec![stream.layers[0].clone(), other.layers[1].clone()];
        assert!(matches!(decode_layers(&mixed, 1), Err(CodecError::Mismatch(_))));
    }

    #[test]
    fn bad_parameters() {
        let img = gradient(16, 16, 1);
        assert!(encode_layers(&img, 1, 1).is_err());
        assert!(encode_layers(&img, 3, 0).is_err());
        assert!(matches!(encode_layers(&img, 6, 1), Err(CodecError::Dimension { .. })));
    }

    #[test]
    fn every_container_parses_alone() {
        let img = gradient(40, 40, 3);
        let stream = encode_layers(&img, 3, 5).unwrap();
        for c in &stream.layers {
            let bytes = c.to_bytes();
            let (parsed, used) = LayerContainer::parse(&bytes).unwrap();
            assert_eq!(&parsed, c);
            assert_eq!(used, bytes.len());
        }
    }
}
