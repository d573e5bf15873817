//! Raster files: 16-bit grayscale PNG for id maps, 8-bit RGB PNG for color,
//! little-endian PFM for depth.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::RenderError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> RenderError {
    RenderError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn check_len(width: u32, height: u32, len: usize, per_pixel: usize) -> Result<(), RenderError> {
    let want = width as usize * height as usize * per_pixel;
    if len != want {
        return Err(RenderError::Format(format!(
            "{width}x{height} raster needs {want} values, got {len}"
        )));
    }
    Ok(())
}

fn write_png(
    path: &Path,
    width: u32,
    height: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    bytes: &[u8],
) -> Result<(), RenderError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width, height);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut writer = enc.write_header().map_err(|e| io_err(path, e))?;
    writer.write_image_data(bytes).map_err(|e| io_err(path, e))?;
    writer.finish().map_err(|e| io_err(path, e))
}

fn read_png(path: &Path, color: png::ColorType, depth: png::BitDepth) -> Result<(u32, u32, Vec<u8>), RenderError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut dec = png::Decoder::new(BufReader::new(file));
    dec.set_transformations(png::Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(|e| io_err(path, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| io_err(path, "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| io_err(path, e))?;
    if info.color_type != color || info.bit_depth != depth {
        return Err(io_err(
            path,
            format!("expected {color:?} {depth:?}, found {:?} {:?}", info.color_type, info.bit_depth),
        ));
    }
    buf.truncate(info.line_size * info.height as usize);
    Ok((info.width, info.height, buf))
}

/// 16-bit single-channel PNG (big-endian samples, as PNG requires).
pub fn write_png_u16(path: impl AsRef<Path>, width: u32, height: u32, data: &[u16]) -> Result<(), RenderError> {
    check_len(width, height, data.len(), 1)?;
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_be_bytes()).collect();
    write_png(path.as_ref(), width, height, png::ColorType::Grayscale, png::BitDepth::Sixteen, &bytes)
}

pub fn read_png_u16(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<u16>), RenderError> {
    let (w, h, bytes) = read_png(path.as_ref(), png::ColorType::Grayscale, png::BitDepth::Sixteen)?;
    Ok((w, h, bytes.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

pub fn write_png_rgb(path: impl AsRef<Path>, width: u32, height: u32, rgb: &[u8]) -> Result<(), RenderError> {
    check_len(width, height, rgb.len(), 3)?;
    write_png(path.as_ref(), width, height, png::ColorType::Rgb, png::BitDepth::Eight, rgb)
}

pub fn read_png_rgb(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<u8>), RenderError> {
    read_png(path.as_ref(), png::ColorType::Rgb, png::BitDepth::Eight)
}

/// Single-channel PFM, little-endian, rows stored bottom to top.
pub fn write_pfm(path: impl AsRef<Path>, width: u32, height: u32, data: &[f32]) -> Result<(), RenderError> {
    let path = path.as_ref();
    check_len(width, height, data.len(), 1)?;
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(data.len() * 4);
    for row in data.chunks_exact(width as usize).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&out).map_err(|e| io_err(path, e))
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<f32>), RenderError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    // three whitespace-terminated header tokens: "Pf", "<w> <h>", "<scale>"
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(io_err(path, "truncated PFM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if tokens[0] != "Pf" {
        return Err(io_err(path, format!("unsupported PFM type '{}'", tokens[0])));
    }
    let parse = |s: &str| s.parse::<u32>().map_err(|_| io_err(path, format!("bad PFM size '{s}'")));
    let (w, h) = (parse(&tokens[1])?, parse(&tokens[2])?);
    let scale: f32 = tokens[3].parse().map_err(|_| io_err(path, "bad PFM scale"))?;
    let n = w as usize * h as usize;
    let body = bytes.get(pos..pos + 4 * n).ok_or_else(|| io_err(path, "truncated PFM data"))?;
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if scale < 0.0 {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let data = values.chunks_exact(w.max(1) as usize).rev().flatten().copied().collect();
    Ok((w, h, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_pfm_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let ids: Vec<u16> = (0..12).map(|i| i * 5000).collect();
        write_png_u16(dir.path().join("ids.png"), 4, 3, &ids).unwrap();
        assert_eq!(read_png_u16(dir.path().join("ids.png")).unwrap(), (4, 3, ids));

        let rgb: Vec<u8> = (0..36).collect();
        write_png_rgb(dir.path().join("rgb.png"), 4, 3, &rgb).unwrap();
        assert_eq!(read_png_rgb(dir.path().join("rgb.png")).unwrap(), (4, 3, rgb));

        let depth = vec![0.5, 1.0, 1e30, 2.25, 3.0, 4.0];
        write_pfm(dir.path().join("d.pfm"), 3, 2, &depth).unwrap();
        assert_eq!(read_pfm(dir.path().join("d.pfm")).unwrap(), (3, 2, depth));
    }

    #[test]
    fn length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_png_u16(dir.path().join("x.png"), 4, 4, &[0; 3]),
            Err(RenderError::Format(_))
        ));
    }
}
