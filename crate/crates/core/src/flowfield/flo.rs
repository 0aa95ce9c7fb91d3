//! Middlebury `.flo`: little-endian float magic 202021.25, int32 width,
//! int32 height, then interleaved float32 `(u, v)` in row-major order.
//!
//! Values are narrowed to f32 on write, so a field survives a round trip
//! bit-exactly only if it already holds f32-representable values.

use std::path::Path;

use crate::{Error, FlowField, Result};

pub const FLO_MAGIC: f32 = 202021.25;
const HEADER_LEN: usize = 12;

pub fn write_flo(field: &FlowField) -> Result<Vec<u8>> {
    if field
        .data()
        .iter()
        .flatten()
        .any(|&c| !(c as f32).is_finite())
    {
        return Err(Error::InvalidValue(
            "field has components that are not finite as f32".into(),
        ));
    }
    let width = i32::try_from(field.width())
        .map_err(|_| Error::InvalidValue("width exceeds i32".into()))?;
    let height = i32::try_from(field.height())
        .map_err(|_| Error::InvalidValue("height exceeds i32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + field.data().len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    for [u, v] in field.data() {
        out.extend_from_slice(&(*u as f32).to_le_bytes());
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

fn le4(bytes: &[u8], at: usize) -> [u8; 4] {
    bytes[at..at + 4].try_into().expect("4-byte slice")
}

pub fn read_flo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let magic = f32::from_le_bytes(le4(bytes, 0));
    if magic.to_bits() != FLO_MAGIC.to_bits() {
        return Err(Error::BadMagic(magic));
    }
    let width = i32::from_le_bytes(le4(bytes, 4));
    let height = i32::from_le_bytes(le4(bytes, 8));
    if width <= 0 || height <= 0 {
        return Err(Error::NonPositiveDims { width, height });
    }
    let (w, h) = (width as usize, height as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or(Error::NonPositiveDims { width, height })?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingBytes(bytes.len() - expected));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| {
            [
                f32::from_le_bytes(le4(c, 0)) as f64,
                f32::from_le_bytes(le4(c, 4)) as f64,
            ]
        })
        .collect();
    FlowField::from_vec(w, h, data)
}

pub fn read_flo_file(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_flo(&bytes)
}

pub fn write_flo_file(path: impl AsRef<Path>, field: &FlowField) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_flo(field)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_zero_field() {
        let f = FlowField::zeros(1, 1).unwrap();
        let bytes = write_flo(&f).unwrap();
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(read_flo(&bytes).unwrap(), f);
    }

    #[test]
    fn error_cases_are_distinct() {
        let mut bytes = write_flo(&FlowField::constant(2, 3, 1.5, -2.0).unwrap()).unwrap();
        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(&123.0f32.to_le_bytes());
        assert!(matches!(read_flo(&bad), Err(Error::BadMagic(m)) if m == 123.0));

        assert!(matches!(
            read_flo(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            read_flo(&bytes[..7]),
            Err(Error::Truncated { .. })
        ));

        let mut zero_w = bytes.clone();
        zero_w[4..8].copy_from_slice(&0i32.to_le_bytes());
        assert!(matches!(
            read_flo(&zero_w),
            Err(Error::NonPositiveDims { width: 0, .. })
        ));

        bytes.push(0);
        assert!(matches!(read_flo(&bytes), Err(Error::TrailingBytes(1))));
    }

    #[test]
    fn refuses_nan() {
        let f = FlowField::from_vec(1, 1, vec![[f64::NAN, 0.0]]).unwrap();
        assert!(write_flo(&f).is_err());
    }
}
