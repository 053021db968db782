//! Reversible LeGall 5/3 integer wavelet transform.
//!
//! One dimension is split into an even-indexed low band of `ceil(n/2)`
//! samples and an odd-indexed high band of `floor(n/2)` samples using the
//! two lifting steps
//!
//! ```text
//! high[i] = x[2i+1] - floor((x[2i] + x[2i+2]) / 2)
//! low[i]  = x[2i]   + floor((high[i-1] + high[i] + 2) / 4)
//! ```
//!
//! with whole-sample symmetric extension at both ends (`x[n] = x[n-2]`,
//! `high[-1] = high[0]`). Arithmetic shifts give floor division on
//! negative values, which keeps the transform exactly invertible.

use super::{CodecError, Image};

/// A 2-D array of signed coefficients, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<i32>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<i32>) -> Result<Self, CodecError> {
        if data.len() != width * height {
            return Err(CodecError::Structure(format!(
                "plane {width}x{height} needs {} coefficients, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: i32) {
        self.data[y * self.width + x] = v;
    }

    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Detail bands of one decomposition level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetailBands {
    /// Horizontal high-pass, vertical low-pass.
    pub hl: Plane,
    /// Horizontal low-pass, vertical high-pass.
    pub lh: Plane,
    pub hh: Plane,
}

/// Subbands of one image channel. `details[0]` is level 1 (finest),
/// `details[D-1]` is level `D` (coarsest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelBands {
    pub ll: Plane,
    pub details: Vec<DetailBands>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandPyramid {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub channels: Vec<ChannelBands>,
}

#[inline]
fn low_len(n: usize) -> usize {
    n.div_ceil(2)
}

/// Dimensions of the low-pass image after `level` halvings.
pub fn scaled_dims(width: usize, height: usize, level: usize) -> (usize, usize) {
    let mut w = width;
    let mut h = height;
    for _ in 0..level {
        w = low_len(w);
        h = low_len(h);
    }
    (w, h)
}

/// Shapes `(hl, lh, hh)` as `(width, height)` of the detail bands produced
/// at `level` (1-based) for an image of the given size.
pub fn detail_shapes(width: usize, height: usize, level: usize) -> [(usize, usize); 3] {
    let (w, h) = scaled_dims(width, height, level - 1);
    let (wl, wh) = (low_len(w), w / 2);
    let (hl, hh) = (low_len(h), h / 2);
    [(wh, hl), (wl, hh), (wh, hh)]
}

pub(crate) fn check_levels(width: usize, height: usize, levels: usize) -> Result<(), CodecError> {
    let min = width.min(height);
    let too_small = levels == 0 || levels >= usize::BITS as usize || min < (1usize << levels);
    if too_small {
        return Err(CodecError::Dimension {
            width,
            height,
            levels,
        });
    }
    Ok(())
}

pub fn forward_1d(x: &[i32], low: &mut [i32], high: &mut [i32]) {
    let n = x.len();
    let nh = n / 2;
    let nl = n - nh;
    debug_assert_eq!(low.len(), nl);
    debug_assert_eq!(high.len(), nh);
    if nh == 0 {
        low.copy_from_slice(x);
        return;
    }
    for i in 0..nh {
        let right = if 2 * i + 2 < n { x[2 * i + 2] } else { x[2 * i] };
        high[i] = x[2 * i + 1] - ((x[2 * i] + right) >> 1);
    }
    for i in 0..nl {
        let dl = high[i.saturating_sub(1)];
        let dr = high[i.min(nh - 1)];
        low[i] = x[2 * i] + ((dl + dr + 2) >> 2);
    }
}

pub fn inverse_1d(low: &[i32], high: &[i32], out: &mut [i32]) {
    let nh = high.len();
    let nl = low.len();
    let n = nl + nh;
    debug_assert_eq!(out.len(), n);
    if nh == 0 {
        out.copy_from_slice(low);
        return;
    }
    for i in 0..nl {
        let dl = high[i.saturating_sub(1)];
        let dr = high[i.min(nh - 1)];
        out[2 * i] = low[i] - ((dl + dr + 2) >> 2);
    }
    for i in 0..nh {
        let right = if 2 * i + 2 < n { out[2 * i + 2] } else { out[2 * i] };
        out[2 * i + 1] = high[i] + ((out[2 * i] + right) >> 1);
    }
}

/// One 2-D analysis step: rows, then columns.
fn split_level(src: &Plane) -> (Plane, DetailBands) {
    let (w, h) = src.dims();
    let (wl, wh) = (low_len(w), w / 2);
    let (hl, hh) = (low_len(h), h / 2);

    let mut rows = Plane::zeros(w, h);
    let mut lo = vec![0; wl];
    let mut hi = vec![0; wh];
    for y in 0..h {
        let row = &src.data[y * w..(y + 1) * w];
        forward_1d(row, &mut lo, &mut hi);
        rows.data[y * w..y * w + wl].copy_from_slice(&lo);
        rows.data[y * w + wl..(y + 1) * w].copy_from_slice(&hi);
    }

    let mut col = vec![0; h];
    let mut lo = vec![0; hl];
    let mut hi = vec![0; hh];
    let mut ll = Plane::zeros(wl, hl);
    let mut hl_band = Plane::zeros(wh, hl);
    let mut lh_band = Plane::zeros(wl, hh);
    let mut hh_band = Plane::zeros(wh, hh);
    for x in 0..w {
        for (y, c) in col.iter_mut().enumerate() {
            *c = rows.get(x, y);
        }
        forward_1d(&col, &mut lo, &mut hi);
        if x < wl {
            for (y, &v) in lo.iter().enumerate() {
                ll.set(x, y, v);
            }
            for (y, &v) in hi.iter().enumerate() {
                lh_band.set(x, y, v);
            }
        } else {
            for (y, &v) in lo.iter().enumerate() {
                hl_band.set(x - wl, y, v);
            }
            for (y, &v) in hi.iter().enumerate() {
                hh_band.set(x - wl, y, v);
            }
        }
    }
    (
        ll,
        DetailBands {
            hl: hl_band,
            lh: lh_band,
            hh: hh_band,
        },
    )
}

/// One 2-D synthesis step, the exact inverse of [`split_level`].
pub(crate) fn merge_level(ll: &Plane, d: &DetailBands) -> Result<Plane, CodecError> {
    let (wl, hl) = ll.dims();
    let (wh, hh) = d.hh.dims();
    if d.hl.dims() != (wh, hl) || d.lh.dims() != (wl, hh) {
        return Err(CodecError::Structure(format!(
            "detail bands {:?}/{:?}/{:?} do not fit low band {:?}",
            d.hl.dims(),
            d.lh.dims(),
            d.hh.dims(),
            ll.dims()
        )));
    }
    if wh > wl || wl > wh + 1 || hh > hl || hl > hh + 1 {
        return Err(CodecError::Structure(format!(
            "band sizes {wl}/{wh} x {hl}/{hh} are not a valid dyadic split"
        )));
    }
    let w = wl + wh;
    let h = hl + hh;

    let mut rows = Plane::zeros(w, h);
    let mut lo = vec![0; hl];
    let mut hi = vec![0; hh];
    let mut col = vec![0; h];
    for x in 0..w {
        if x < wl {
            for (y, v) in lo.iter_mut().enumerate() {
                *v = ll.get(x, y);
            }
            for (y, v) in hi.iter_mut().enumerate() {
                *v = d.lh.get(x, y);
            }
        } else {
            for (y, v) in lo.iter_mut().enumerate() {
                *v = d.hl.get(x - wl, y);
            }
            for (y, v) in hi.iter_mut().enumerate() {
                *v = d.hh.get(x - wl, y);
            }
        }
        inverse_1d(&lo, &hi, &mut col);
        for (y, &v) in col.iter().enumerate() {
            rows.set(x, y, v);
        }
    }

    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        let row = &rows.data[y * w..(y + 1) * w];
        inverse_1d(&row[..wl], &row[wl..], &mut out.data[y * w..(y + 1) * w]);
    }
    Ok(out)
}

pub(crate) fn forward_plane(plane: Plane, levels: usize) -> ChannelBands {
    let mut current = plane;
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (ll, d) = split_level(&current);
        details.push(d);
        current = ll;
    }
    ChannelBands {
        ll: current,
        details,
    }
}

/// Forward transform of every channel with `levels` decompositions.
pub fn dwt_forward(img: &Image, levels: usize) -> Result<SubbandPyramid, CodecError> {
    check_levels(img.width(), img.height(), levels)?;
    let channels = (0..img.channels())
        .map(|c| {
            let data = img.plane(c).iter().map(|&v| i32::from(v)).collect();
            forward_plane(
                Plane {
                    width: img.width(),
                    height: img.height(),
                    data,
                },
                levels,
            )
        })
        .collect();
    Ok(SubbandPyramid {
        width: img.width(),
        height: img.height(),
        levels,
        channels,
    })
}

/// Reconstructs one channel from its low band and the detail levels
/// `details` ordered coarse to fine.
pub(crate) fn inverse_partial(ll: &Plane, coarse_to_fine: &[&DetailBands]) -> Result<Plane, CodecError> {
    let mut current = ll.clone();
    for d in coarse_to_fine {
        current = merge_level(&current, d)?;
    }
    Ok(current)
}

pub(crate) fn plane_to_u8(p: &Plane) -> Vec<u8> {
    p.data.iter().map(|&v| v.clamp(0, 255) as u8).collect()
}

/// Inverse transform back to an 8-bit image. Coefficients outside
/// `[0, 255]` after synthesis are clamped.
pub fn dwt_inverse(pyr: &SubbandPyramid) -> Result<Image, CodecError> {
    if pyr.channels.is_empty() {
        return Err(CodecError::Structure("pyramid has no channels".into()));
    }
    let mut samples = Vec::with_capacity(pyr.width * pyr.height * pyr.channels.len());
    for ch in &pyr.channels {
        if ch.details.len() != pyr.levels {
            return Err(CodecError::Structure(format!(
                "expected {} detail levels, found {}",
                pyr.levels,
                ch.details.len()
            )));
        }
        let order: Vec<&DetailBands> = ch.details.iter().rev().collect();
        let plane = inverse_partial(&ch.ll, &order)?;
        if plane.dims() != (pyr.width, pyr.height) {
            return Err(CodecError::Structure(format!(
                "synthesized plane is {:?}, expected {}x{}",
                plane.dims(),
                pyr.width,
                pyr.height
            )));
        }
        samples.extend(plane_to_u8(&plane));
    }
    Image::new(pyr.width, pyr.height, pyr.channels.len(), samples)
}
