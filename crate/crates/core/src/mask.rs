//! Binary masks, their column-major run-length encoding and bounding boxes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("mask has no set pixels")]
    EmptyMask,
    #[error("run lengths sum to {sum}, expected {expected}")]
    BadCounts { sum: u64, expected: u64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Integer pixel box, top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// `[x, y, w, h]` as floats, the COCO layout.
    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x as f64, self.y as f64, self.w as f64, self.h as f64]
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = (self.x + self.w).max(other.x + other.w);
        let y1 = (self.y + self.h).max(other.y + other.h);
        BBox {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }
}

/// Row-major binary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: u32, height: u32) -> Self {
        Bitmap {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Bitmap { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count(&self) -> u64 {
        self.data.iter().filter(|&&b| b).count() as u64
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }
}

/// Column-major run lengths, alternating zeros and ones, starting with a
/// (possibly empty) run of zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstanceMask {
    width: u32,
    height: u32,
    counts: Vec<u32>,
}

impl InstanceMask {
    pub fn new(width: u32, height: u32, counts: Vec<u32>) -> Result<Self, MaskError> {
        let sum: u64 = counts.iter().map(|&c| c as u64).sum();
        let expected = width as u64 * height as u64;
        if sum != expected {
            return Err(MaskError::BadCounts { sum, expected });
        }
        Ok(InstanceMask { width, height, counts })
    }

    /// Encodes the pixels for which `f(x, y)` holds.
    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for x in 0..width {
            for y in 0..height {
                if f(x, y) != current {
                    counts.push(run);
                    run = 0;
                    current = !current;
                }
                run += 1;
            }
        }
        counts.push(run);
        InstanceMask { width, height, counts }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `(start, len)` of every run of ones, in column-major pixel order.
    pub fn runs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.counts.iter().enumerate().filter_map(move |(i, &c)| {
            let start = pos;
            pos += c as u64;
            (i % 2 == 1 && c > 0).then_some((start, c as u64))
        })
    }

    pub fn area(&self) -> u64 {
        self.runs().map(|(_, l)| l).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    /// Tight bounds of the set pixels.
    pub fn bbox(&self) -> Result<BBox, MaskError> {
        let h = self.height as u64;
        let (mut x0, mut y0, mut x1, mut y1) = (u64::MAX, u64::MAX, 0u64, 0u64);
        let mut any = false;
        for (start, len) in self.runs() {
            any = true;
            let end = start + len - 1;
            let (c0, r0) = (start / h, start % h);
            let (c1, r1) = (end / h, end % h);
            x0 = x0.min(c0);
            x1 = x1.max(c1);
            if c0 == c1 {
                y0 = y0.min(r0);
                y1 = y1.max(r1);
            } else {
                y0 = 0;
                y1 = h - 1;
            }
        }
        if !any {
            return Err(MaskError::EmptyMask);
        }
        Ok(BBox {
            x: x0 as u32,
            y: y0 as u32,
            w: (x1 - x0 + 1) as u32,
            h: (y1 - y0 + 1) as u32,
        })
    }

    pub fn to_bitmap(&self) -> Bitmap {
        let mut b = Bitmap::new(self.width, self.height);
        let h = self.height as u64;
        for (start, len) in self.runs() {
            for p in start..start + len {
                b.set((p / h) as u32, (p % h) as u32, true);
            }
        }
        b
    }

    /// Pixels set in both masks.
    pub fn intersection_area(&self, other: &InstanceMask) -> Result<u64, MaskError> {
        self.check_dims(other)?;
        let mut a = self.runs().peekable();
        let mut b = other.runs().peekable();
        let mut total = 0;
        while let (Some(&(sa, la)), Some(&(sb, lb))) = (a.peek(), b.peek()) {
            let (ea, eb) = (sa + la, sb + lb);
            total += ea.min(eb).saturating_sub(sa.max(sb));
            if ea <= eb {
                a.next();
            } else {
                b.next();
            }
        }
        Ok(total)
    }

    /// Pixel-wise OR of two masks.
    pub fn union(&self, other: &InstanceMask) -> Result<InstanceMask, MaskError> {
        self.check_dims(other)?;
        let mut runs: Vec<(u64, u64)> = self.runs().chain(other.runs()).collect();
        runs.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(runs.len());
        for (s, l) in runs {
            match merged.last_mut() {
                Some((ms, ml)) if s <= *ms + *ml => *ml = (*ml).max(s + l - *ms),
                _ => merged.push((s, l)),
            }
        }
        Ok(Self::from_runs(self.width, self.height, &merged))
    }

    /// Builds a mask from sorted, disjoint runs of ones.
    pub fn from_runs(width: u32, height: u32, runs: &[(u64, u64)]) -> InstanceMask {
        let total = width as u64 * height as u64;
        let mut counts = Vec::with_capacity(runs.len() * 2 + 1);
        let mut pos = 0u64;
        for &(s, l) in runs {
            counts.push((s - pos) as u32);
            counts.push(l as u32);
            pos = s + l;
        }
        if pos < total || counts.is_empty() {
            counts.push((total - pos) as u32);
        }
        InstanceMask { width, height, counts }
    }

    fn check_dims(&self, other: &InstanceMask) -> Result<(), MaskError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(MaskError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

pub fn encode_rle(bitmap: &Bitmap) -> InstanceMask {
    InstanceMask::from_fn(bitmap.width, bitmap.height, |x, y| bitmap.get(x, y))
}

pub fn decode_rle(mask: &InstanceMask) -> Bitmap {
    mask.to_bitmap()
}
