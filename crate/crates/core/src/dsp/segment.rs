use crate::error::{Error, Result};

/// Standard deviation below which a row is treated as flat.
pub const FLAT_STD: f64 = 1e-8;

/// Window start indices for windows of `window` samples advancing by `step`.
/// Trailing samples that do not fill a window are dropped.
pub fn segment_starts(len: usize, window: usize, step: usize) -> Result<Vec<usize>> {
    if window == 0 || step == 0 {
        return Err(Error::InvalidSpec("window and step must be positive".into()));
    }
    if len < window {
        return Err(Error::ShorterThanWindow { len, window });
    }
    let count = (len - window) / step + 1;
    Ok((0..count).map(|k| k * step).collect())
}

/// Step for a given fractional overlap, e.g. 0.5 → `window / 2`.
pub fn step_for_overlap(window: usize, overlap: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidSpec(format!("overlap {overlap} must be in [0, 1)")));
    }
    Ok(((window as f64 * (1.0 - overlap)).round() as usize).max(1))
}

pub fn segment<T: Copy>(x: &[T], window: usize, overlap: f64) -> Result<Vec<Vec<T>>> {
    let step = step_for_overlap(window, overlap)?;
    Ok(segment_starts(x.len(), window, step)?
        .into_iter()
        .map(|s| x[s..s + window].to_vec())
        .collect())
}

/// In-place per-row z-score of a row-major matrix with rows of `row_len`.
/// Uses the population standard deviation; flat rows become zeros.
pub fn zscore_rows(data: &mut [f64], row_len: usize) -> Result<()> {
    if row_len == 0 || data.len() % row_len != 0 {
        return Err(Error::Shape(format!("{} values do not form rows of {row_len}", data.len())));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("z-score input".into()));
    }
    for row in data.chunks_exact_mut(row_len) {
        let n = row_len as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std < FLAT_STD {
            row.iter_mut().for_each(|v| *v = 0.0);
        } else {
            row.iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
    }
    Ok(())
}

/// Z-scores each row of a `[C × L]` matrix.
pub fn zscore(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let l = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != l) {
        return Err(Error::Shape("ragged rows".into()));
    }
    let mut flat = rows.concat();
    zscore_rows(&mut flat, l)?;
    Ok(flat.chunks_exact(l).map(<[f64]>::to_vec).collect())
}
