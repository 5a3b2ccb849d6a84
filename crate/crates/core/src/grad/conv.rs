//! Grouped, dilated 1-D convolution with "same" zero padding (cross-correlation
//! form, as in the usual deep-learning convention).

use crate::error::{Error, Result};

use super::real::gemm;
use super::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub groups: usize,
}

impl ConvGeom {
    pub fn new(c_in: usize, c_out: usize, kernel: usize, dilation: usize, groups: usize) -> Result<Self> {
        let g = ConvGeom { c_in, c_out, kernel, dilation, groups };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.c_in % self.groups != 0 || self.c_out % self.groups != 0 {
            return Err(Error::Shape(format!(
                "channels {}→{} not divisible into {} groups",
                self.c_in, self.c_out, self.groups
            )));
        }
        if self.kernel % 2 == 0 || self.dilation == 0 {
            return Err(Error::Shape(format!("kernel {} must be odd and dilation {} ≥ 1", self.kernel, self.dilation)));
        }
        Ok(())
    }

    pub fn pad(&self) -> usize {
        self.dilation * (self.kernel - 1) / 2
    }

    pub fn cin_per_group(&self) -> usize {
        self.c_in / self.groups
    }

    pub fn cout_per_group(&self) -> usize {
        self.c_out / self.groups
    }

    pub fn weight_shape(&self) -> [usize; 3] {
        [self.c_out, self.cin_per_group(), self.kernel]
    }

    pub fn weight_len(&self) -> usize {
        self.c_out * self.cin_per_group() * self.kernel
    }

    fn depthwise(&self) -> bool {
        self.cin_per_group() == 1 && self.cout_per_group() == 1
    }
}

/// Valid output range `[lo, hi)` for tap offset `off`.
fn tap_range(off: isize, l: usize) -> (usize, usize) {
    let lo = (-off).max(0) as usize;
    let hi = (l as isize - off).clamp(0, l as isize) as usize;
    (lo.min(hi), hi)
}

fn tap_offset(k: usize, g: &ConvGeom) -> isize {
    (k * g.dilation) as isize - g.pad() as isize
}

fn im2col<T: Real>(x: &[T], cols: &mut [T], cig: usize, l: usize, g: &ConvGeom) {
    for ci in 0..cig {
        let row = &x[ci * l..(ci + 1) * l];
        for k in 0..g.kernel {
            let off = tap_offset(k, g);
            let (lo, hi) = tap_range(off, l);
            let dst = &mut cols[(ci * g.kernel + k) * l..(ci * g.kernel + k + 1) * l];
            dst[..lo].fill(T::zero());
            dst[hi..].fill(T::zero());
            for t in lo..hi {
                dst[t] = row[(t as isize + off) as usize];
            }
        }
    }
}

fn col2im_add<T: Real>(cols: &[T], dx: &mut [T], cig: usize, l: usize, g: &ConvGeom) {
    for ci in 0..cig {
        for k in 0..g.kernel {
            let off = tap_offset(k, g);
            let (lo, hi) = tap_range(off, l);
            let src = &cols[(ci * g.kernel + k) * l..(ci * g.kernel + k + 1) * l];
            for t in lo..hi {
                dx[ci * l + (t as isize + off) as usize] += src[t];
            }
        }
    }
}

/// `x: [B×C_in×L]`, `w: [C_out×C_in/groups×K]` → `[B×C_out×L]`.
pub fn conv1d_forward<T: Real>(x: &[T], w: &[T], bias: Option<&[T]>, b: usize, l: usize, g: &ConvGeom) -> Vec<T> {
    let (cig, cog, kk) = (g.cin_per_group(), g.cout_per_group(), g.kernel);
    let mut y = vec![T::zero(); b * g.c_out * l];
    if g.depthwise() {
        for bi in 0..b {
            for c in 0..g.c_in {
                let xr = &x[(bi * g.c_in + c) * l..(bi * g.c_in + c + 1) * l];
                let yr = &mut y[(bi * g.c_out + c) * l..(bi * g.c_out + c + 1) * l];
                for k in 0..kk {
                    let wv = w[c * kk + k];
                    let off = tap_offset(k, g);
                    let (lo, hi) = tap_range(off, l);
                    for t in lo..hi {
                        yr[t] += wv * xr[(t as isize + off) as usize];
                    }
                }
            }
        }
    } else {
        let mut cols = if kk == 1 { Vec::new() } else { vec![T::zero(); cig * kk * l] };
        for bi in 0..b {
            for gi in 0..g.groups {
                let xg = &x[(bi * g.c_in + gi * cig) * l..(bi * g.c_in + (gi + 1) * cig) * l];
                let wg = &w[gi * cog * cig * kk..(gi + 1) * cog * cig * kk];
                let yg = &mut y[(bi * g.c_out + gi * cog) * l..(bi * g.c_out + (gi + 1) * cog) * l];
                let src = if kk == 1 {
                    xg
                } else {
                    im2col(xg, &mut cols, cig, l, g);
                    &cols[..]
                };
                gemm(false, false, cog, l, cig * kk, T::one(), wg, src, T::zero(), yg);
            }
        }
    }
    if let Some(bias) = bias {
        for (row, v) in y.chunks_exact_mut(l).enumerate() {
            let bv = bias[row % g.c_out];
            v.iter_mut().for_each(|y| *y += bv);
        }
    }
    y
}

/// Accumulates (`+=`) the requested gradients of a forward pass.
#[allow(clippy::too_many_arguments)]
pub fn conv1d_backward<T: Real>(
    dy: &[T],
    x: &[T],
    w: &[T],
    b: usize,
    l: usize,
    g: &ConvGeom,
    dx: Option<&mut [T]>,
    dw: Option<&mut [T]>,
    db: Option<&mut [T]>,
) {
    let (cig, cog, kk) = (g.cin_per_group(), g.cout_per_group(), g.kernel);
    if let Some(db) = db {
        for (row, v) in dy.chunks_exact(l).enumerate() {
            db[row % g.c_out] += v.iter().copied().sum::<T>();
        }
    }
    if g.depthwise() {
        let mut dx = dx;
        let mut dw = dw;
        for bi in 0..b {
            for c in 0..g.c_in {
                let base = (bi * g.c_in + c) * l;
                let dyr = &dy[(bi * g.c_out + c) * l..(bi * g.c_out + c + 1) * l];
                for k in 0..kk {
                    let off = tap_offset(k, g);
                    let (lo, hi) = tap_range(off, l);
                    if let Some(dw) = dw.as_deref_mut() {
                        let mut acc = T::zero();
                        for t in lo..hi {
                            acc += dyr[t] * x[base + (t as isize + off) as usize];
                        }
                        dw[c * kk + k] += acc;
                    }
                    if let Some(dx) = dx.as_deref_mut() {
                        let wv = w[c * kk + k];
                        for t in lo..hi {
                            dx[base + (t as isize + off) as usize] += wv * dyr[t];
                        }
                    }
                }
            }
        }
        return;
    }
    let mut cols = if kk == 1 { Vec::new() } else { vec![T::zero(); cig * kk * l] };
    let mut dcols = if kk == 1 { Vec::new() } else { vec![T::zero(); cig * kk * l] };
    let mut dx = dx;
    let mut dw = dw;
    for bi in 0..b {
        for gi in 0..g.groups {
            let xg = &x[(bi * g.c_in + gi * cig) * l..(bi * g.c_in + (gi + 1) * cig) * l];
            let wg = &w[gi * cog * cig * kk..(gi + 1) * cog * cig * kk];
            let dyg = &dy[(bi * g.c_out + gi * cog) * l..(bi * g.c_out + (gi + 1) * cog) * l];
            if let Some(dw) = dw.as_deref_mut() {
                let src = if kk == 1 {
                    xg
                } else {
                    im2col(xg, &mut cols, cig, l, g);
                    &cols[..]
                };
                let dwg = &mut dw[gi * cog * cig * kk..(gi + 1) * cog * cig * kk];
                gemm(false, true, cog, cig * kk, l, T::one(), dyg, src, T::one(), dwg);
            }
            if let Some(dx) = dx.as_deref_mut() {
                let dxg = &mut dx[(bi * g.c_in + gi * cig) * l..(bi * g.c_in + (gi + 1) * cig) * l];
                if kk == 1 {
                    gemm(true, false, cig, l, cog, T::one(), wg, dyg, T::one(), dxg);
                } else {
                    gemm(true, false, cig * kk, l, cog, T::one(), wg, dyg, T::zero(), &mut dcols);
                    col2im_add(&dcols, dxg, cig, l, g);
                }
            }
        }
    }
}
