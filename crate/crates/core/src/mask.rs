//! Binary instance masks.
//!
//! Pixel `(x, y)` is column `x`, row `y`, sampled at integer coordinates.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidValue(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        let mut mask = Self::new(width, height)?;
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        mask.bits = bits;
        Ok(mask)
    }

    /// Builds a mask with the given `(x, y)` pixels set.
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut mask = Self::new(width, height)?;
        for (x, y) in pixels {
            if x >= width || y >= height {
                return Err(Error::InvalidValue(format!(
                    "pixel ({x}, {y}) outside {width}x{height} mask"
                )));
            }
            mask.set(x, y, true);
        }
        Ok(mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Iterates over set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Tight bounding box `(x_min, y_min, x_max, y_max)`, inclusive.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for (x, y) in self.pixels() {
            bbox = Some(match bbox {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bbox
    }

    fn check_same_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Intersection over union; 0 when both masks are empty.
    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        self.check_same_dims(other)?;
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            return Ok(0.0);
        }
        Ok(inter as f64 / union as f64)
    }

    /// Mean `(x, y)` of the set pixels.
    pub fn centroid(&self) -> Result<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0f64, 0f64, 0usize);
        for (x, y) in self.pixels() {
            sx += x as f64;
            sy += y as f64;
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyMask);
        }
        Ok((sx / n as f64, sy / n as f64))
    }

    /// Erodes by `radius` steps of the 4-neighbourhood; pixels on the canvas
    /// border count as touching background.
    pub fn eroded(&self, radius: usize) -> BinaryMask {
        let mut cur = self.clone();
        let (w, h) = (self.width, self.height);
        for _ in 0..radius {
            let Some((x0, y0, x1, y1)) = cur.bounding_box() else {
                break;
            };
            let mut next = cur.clone();
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if !cur.get(x, y) {
                        continue;
                    }
                    let keep = x > 0
                        && y > 0
                        && x + 1 < w
                        && y + 1 < h
                        && cur.get(x - 1, y)
                        && cur.get(x + 1, y)
                        && cur.get(x, y - 1)
                        && cur.get(x, y + 1);
                    if !keep {
                        next.set(x, y, false);
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Alternating run lengths of 0s and 1s in row-major order, starting
    /// with the count of 0s (which may be zero).
    pub fn to_rle(&self) -> Vec<u64> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut count = 0u64;
        for &b in &self.bits {
            if b == current {
                count += 1;
            } else {
                runs.push(count);
                current = b;
                count = 1;
            }
        }
        runs.push(count);
        runs
    }

    pub fn from_rle(width: usize, height: usize, runs: &[u64]) -> Result<Self> {
        let mut mask = Self::new(width, height)?;
        let total: u64 = runs.iter().sum();
        if total != (width * height) as u64 {
            return Err(Error::Rle(format!(
                "runs cover {total} pixels, mask has {}",
                width * height
            )));
        }
        let mut pos = 0usize;
        for (i, &run) in runs.iter().enumerate() {
            let run = run as usize;
            if i % 2 == 1 {
                mask.bits[pos..pos + run].fill(true);
            }
            pos += run;
        }
        Ok(mask)
    }
}
