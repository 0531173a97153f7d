use crate::{RenderError, Result};
use std::io::{Read, Write};
use std::path::Path;

/// A row-major RGB image with f64 channels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl ImageRgb {
    pub fn new(width: u32, height: u32) -> Self {
        ImageRgb { width, height, data: vec![0.0; (width * height * 3) as usize] }
    }

    pub fn filled(width: u32, height: u32, color: [f64; 3]) -> Self {
        let mut img = Self::new(width, height);
        for px in 0..(width * height) as usize {
            img.data[px * 3] = color[0];
            img.data[px * 3 + 1] = color[1];
            img.data[px * 3 + 2] = color[2];
        }
        img
    }

    pub fn from_data(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != (width * height * 3) as usize {
            return Err(RenderError::DimensionMismatch {
                expected_w: width,
                expected_h: height,
                got_w: (data.len() / 3) as u32,
                got_h: 1,
            });
        }
        Ok(ImageRgb { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, c: [f64; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.data[i] = c[0];
        self.data[i + 1] = c[1];
        self.data[i + 2] = c[2];
    }

    pub fn same_dims(&self, other: &ImageRgb) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Mean absolute per-channel difference.
    pub fn mean_abs_diff(&self, other: &ImageRgb) -> f64 {
        assert!(self.same_dims(other));
        let n = self.data.len() as f64;
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).sum::<f64>() / n
    }

    /// Grayscale by channel mean.
    pub fn to_gray(&self) -> Vec<f64> {
        self.data
            .chunks_exact(3)
            .map(|c| (c[0] + c[1] + c[2]) / 3.0)
            .collect()
    }

    /// 8-bit PNG with rounding; values are clamped to [0, 1] first.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let buf = image::RgbImage::from_raw(self.width, self.height, bytes)
            .expect("buffer length matches dimensions");
        buf.save(path)?;
        Ok(())
    }

    /// Lossless 32-bit float PFM ("PF", little-endian, bottom-up rows).
    pub fn save_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "PF\n{} {}\n-1.0\n", self.width, self.height)?;
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let c = self.pixel(x, y);
                for ch in c {
                    out.write_all(&(ch as f32).to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn load_pfm(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut contents = Vec::new();
        file.read_to_end(&mut contents)?;

        // Header: three whitespace-terminated tokens, then raw samples.
        let mut pos = 0usize;
        let mut token = || -> Result<String> {
            while pos < contents.len() && contents[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < contents.len() && !contents[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(RenderError::PfmFormat("truncated header".into()));
            }
            // consume the single whitespace after the token
            pos += 1;
            Ok(String::from_utf8_lossy(&contents[start..pos - 1]).into_owned())
        };
        let magic = token()?;
        if magic != "PF" {
            return Err(RenderError::PfmFormat(format!("bad magic {magic:?}")));
        }
        let dims = token()?;
        let mut it = dims.split_whitespace();
        let width: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| RenderError::PfmFormat("bad width".into()))?;
        let height: u32 = match it.next() {
            Some(t) => t.parse().map_err(|_| RenderError::PfmFormat("bad height".into()))?,
            None => token()?.parse().map_err(|_| RenderError::PfmFormat("bad height".into()))?,
        };
        let scale: f64 = token()?.parse().map_err(|_| RenderError::PfmFormat("bad scale".into()))?;
        let little_endian = scale < 0.0;

        let expected = (width * height * 3) as usize * 4;
        let data_bytes = &contents[pos..];
        if data_bytes.len() < expected {
            return Err(RenderError::PfmFormat(format!(
                "expected {expected} sample bytes, found {}",
                data_bytes.len()
            )));
        }
        let mut img = ImageRgb::new(width, height);
        let mut offset = 0usize;
        for y in (0..height).rev() {
            for x in 0..width {
                let mut c = [0.0f64; 3];
                for ch in &mut c {
                    let raw: [u8; 4] = data_bytes[offset..offset + 4].try_into().unwrap();
                    let v = if little_endian {
                        f32::from_le_bytes(raw)
                    } else {
                        f32::from_be_bytes(raw)
                    };
                    *ch = v as f64;
                    offset += 4;
                }
                img.set_pixel(x, y, c);
            }
        }
        Ok(img)
    }
}
