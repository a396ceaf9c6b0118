//! On-disk formats.
//!
//! Volume file (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "SGMVOL\0\0"
//! 8       4     format version (u32, currently 1)
//! 12      4     flags (u32; bit 0 set = k-space rows in centered order)
//! 16      12    dims N, N, T (u32 each)
//! 28      16*p  p = N*N*T complex values as (re, im) f64 pairs, frame-major
//! ```
//!
//! Each volume has a `<file>.meta` sidecar of `key: value` lines.
//!
//! Mask file: a header line `N T n`, then `n` lines `t y` in acquisition
//! order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::{DynamicImage, Line, Mask};

pub const VOLUME_MAGIC: &[u8; 8] = b"SGMVOL\0\0";
pub const VOLUME_VERSION: u32 = 1;
pub const FLAG_CENTERED_KSPACE: u32 = 1;
const HEADER_LEN: usize = 28;

pub fn encode_volume(image: &DynamicImage, flags: u32) -> Vec<u8> {
    let (n, frames) = image.dims();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * image.data().len());
    out.extend_from_slice(VOLUME_MAGIC);
    out.extend_from_slice(&VOLUME_VERSION.to_le_bytes());
    out.extend_from_slice(&flags.to_le_bytes());
    for d in [n, n, frames] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for z in image.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap())
}

fn f64_at(bytes: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap())
}

/// Parses a volume file body; returns the image and the flags word.
pub fn decode_volume(bytes: &[u8]) -> Result<(DynamicImage, u32)> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != VOLUME_MAGIC {
        return Err(Error::Format("not a volume file (bad magic)".into()));
    }
    let version = u32_at(bytes, 8);
    if version != VOLUME_VERSION {
        return Err(Error::Format(format!("unsupported volume version {version}")));
    }
    let flags = u32_at(bytes, 12);
    let (nx, ny, frames) = (u32_at(bytes, 16) as usize, u32_at(bytes, 20) as usize, u32_at(bytes, 24) as usize);
    if nx != ny {
        return Err(Error::Format(format!("non-square frame {nx}x{ny}")));
    }
    let count = nx * ny * frames;
    if bytes.len() != HEADER_LEN + 16 * count {
        return Err(Error::Format(format!(
            "expected {} bytes of data, found {}",
            16 * count,
            bytes.len() - HEADER_LEN
        )));
    }
    let data = (0..count)
        .map(|i| {
            let off = HEADER_LEN + 16 * i;
            Complex64::new(f64_at(bytes, off), f64_at(bytes, off + 8))
        })
        .collect();
    Ok((DynamicImage::new(nx, frames, data)?, flags))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Ordered `key: value` pairs stored next to a volume.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VolumeMeta {
    pub entries: Vec<(String, String)>,
}

impl VolumeMeta {
    pub fn for_image(image: &DynamicImage) -> Self {
        let mut m = Self::default();
        m.set("format", "sgmask-volume");
        m.set("version", VOLUME_VERSION.to_string());
        m.set("n", image.n().to_string());
        m.set("frames", image.frames().to_string());
        m.set("norm_factor", format!("{:e}", image.norm_factor()));
        m
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| Error::Format(format!("sidecar line {}: missing ':'", i + 1)))?;
            m.entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(m)
    }
}

pub fn write_volume(path: &Path, image: &DynamicImage, meta: &VolumeMeta) -> Result<()> {
    fs::write(path, encode_volume(image, 0))?;
    fs::write(sidecar_path(path), meta.render())?;
    Ok(())
}

/// Reads a volume and, if present, its sidecar. The normalization factor
/// recorded in the sidecar is restored onto the image.
pub fn read_volume(path: &Path) -> Result<(DynamicImage, VolumeMeta)> {
    let bytes = fs::read(path)?;
    let (image, _) = decode_volume(&bytes)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        VolumeMeta::parse(&fs::read_to_string(side)?)?
    } else {
        VolumeMeta::default()
    };
    let image = match meta.get("norm_factor").and_then(|v| v.parse::<f64>().ok()) {
        Some(f) => image.with_norm_factor(f),
        None => image,
    };
    Ok((image, meta))
}

pub fn format_mask(mask: &Mask) -> String {
    let mut s = format!("{} {} {}\n", mask.n(), mask.frames(), mask.len());
    for l in mask.lines() {
        let _ = writeln!(s, "{} {}", l.frame, l.row);
    }
    s
}

pub fn parse_mask(text: &str) -> Result<Mask> {
    let mut rows = text.lines().filter(|l| !l.trim().is_empty());
    let header = rows.next().ok_or_else(|| Error::Format("empty mask file".into()))?;
    let nums = parse_ints(header, 3, "header")?;
    let (n, frames, count) = (nums[0], nums[1], nums[2]);
    let mut mask = Mask::empty(n, frames);
    for (i, row) in rows.enumerate() {
        let v = parse_ints(row, 2, &format!("line {}", i + 2))?;
        mask.push(Line::new(v[0], v[1]))?;
    }
    if mask.len() != count {
        return Err(Error::Format(format!(
            "header declares {count} lines, found {}",
            mask.len()
        )));
    }
    Ok(mask)
}

fn parse_ints(row: &str, expect: usize, ctx: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = row
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("{ctx}: {e}")))?;
    if v.len() != expect {
        return Err(Error::Format(format!("{ctx}: expected {expect} integers")));
    }
    Ok(v)
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    fs::write(path, format_mask(mask))?;
    Ok(())
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    parse_mask(&fs::read_to_string(path)?)
}
