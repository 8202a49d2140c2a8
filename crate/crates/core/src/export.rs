//! Deterministic serialization of per-cell scalar fields to PGM and CSV.
//!
//! Rows are written in the order given; callers decide the orientation
//! (the CLI flips grid rows so north ends up at the top of images).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("empty field")]
    Empty,

    #[error("field length {len} does not match {width}x{height}")]
    ShapeMismatch {
        len: usize,
        width: usize,
        height: usize,
    },

    #[error("field contains {0} (only finite values and -inf are exportable)")]
    NonExportable(&'static str),
}

fn check(values: &[f64], width: usize, height: usize) -> Result<(), ExportError> {
    if values.is_empty() || width == 0 || height == 0 {
        return Err(ExportError::Empty);
    }
    if values.len() != width * height {
        return Err(ExportError::ShapeMismatch {
            len: values.len(),
            width,
            height,
        });
    }
    for &v in values {
        if v.is_nan() {
            return Err(ExportError::NonExportable("NaN"));
        }
        if v == f64::INFINITY {
            return Err(ExportError::NonExportable("+inf"));
        }
    }
    Ok(())
}

/// Render a field as an 8-bit P5 PGM, min-max normalized over the finite
/// values. `-inf` renders as 0; a constant field renders as all 255.
pub fn field_to_pgm(values: &[f64], width: usize, height: usize) -> Result<Vec<u8>, ExportError> {
    check(values, width, height)?;
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for &v in values {
        let pixel = if v == f64::NEG_INFINITY {
            0u8
        } else if lo == hi {
            255u8
        } else {
            (((v - lo) / (hi - lo)) * 255.0).round() as u8
        };
        out.push(pixel);
    }
    Ok(out)
}

/// Render a field as CSV, one line per row, `-inf` as a literal token.
pub fn field_to_csv(values: &[f64], width: usize, height: usize) -> Result<Vec<u8>, ExportError> {
    check(values, width, height)?;
    let mut out = String::new();
    for row in 0..height {
        for col in 0..width {
            if col > 0 {
                out.push(',');
            }
            let v = values[row * width + col];
            if v == f64::NEG_INFINITY {
                out.push_str("-inf");
            } else {
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    Ok(out.into_bytes())
}
