//! Binary PGM (`P5`) and PPM (`P6`) with maxval 255.

use std::io::{Read, Write};
use std::path::Path;

use super::{CodecError, Image};

fn next_token(data: &[u8], pos: &mut usize) -> Result<String, CodecError> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(CodecError::Pnm("unexpected end of header".into()));
    }
    Ok(String::from_utf8_lossy(&data[start..*pos]).into_owned())
}

fn number(data: &[u8], pos: &mut usize, what: &str) -> Result<usize, CodecError> {
    let tok = next_token(data, pos)?;
    tok.parse()
        .map_err(|_| CodecError::Pnm(format!("bad {what}: {tok:?}")))
}

pub fn decode(data: &[u8]) -> Result<Image, CodecError> {
    let mut pos = 0;
    let channels = match next_token(data, &mut pos)?.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(CodecError::Pnm(format!("unsupported magic {other:?}"))),
    };
    let width = number(data, &mut pos, "width")?;
    let height = number(data, &mut pos, "height")?;
    let maxval = number(data, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(CodecError::Pnm(format!("only maxval 255 is supported, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height * channels;
    if data.len() < pos + n {
        return Err(CodecError::Pnm(format!(
            "raster truncated: need {n} bytes, have {}",
            data.len().saturating_sub(pos)
        )));
    }
    Image::from_interleaved(width, height, channels, &data[pos..pos + n])
}

pub fn encode(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_interleaved());
    out
}

pub fn read(path: &Path) -> Result<Image, CodecError> {
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| CodecError::Pnm(format!("{}: {e}", path.display())))?;
    decode(&data)
}

pub fn write(path: &Path, img: &Image) -> Result<(), CodecError> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&encode(img)))
        .map_err(|e| CodecError::Pnm(format!("{}: {e}", path.display())))
}
