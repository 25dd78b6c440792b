//! Patch unfolding shared by convolution and transposed convolution.
//!
//! For a convolution mapping a `(B, C, ih, iw)` image to `(oh, ow)` output
//! positions, `im2col` builds the `[C·K·K, B·oh·ow]` patch matrix and `col2im`
//! is its adjoint (scatter-add back into the image).

use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Geometry {
    pub channels: usize,
    pub ih: usize,
    pub iw: usize,
    pub oh: usize,
    pub ow: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub dilation: usize,
}

impl Geometry {
    pub fn rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    pub fn positions(&self) -> usize {
        self.oh * self.ow
    }

    /// Input coordinate hit by output `o` and kernel tap `k`, if inside.
    #[inline]
    fn source(&self, o: usize, k: usize, limit: usize) -> Option<usize> {
        let v = (o * self.stride + k * self.dilation) as isize - self.padding as isize;
        (v >= 0 && (v as usize) < limit).then_some(v as usize)
    }
}

pub(crate) fn im2col<T: Real>(x: &[T], batch: usize, g: &Geometry) -> Vec<T> {
    let p = g.positions();
    let cols_n = batch * p;
    let mut cols = vec![T::zero(); g.rows() * cols_n];
    let img = g.ih * g.iw;
    for c in 0..g.channels {
        for kh in 0..g.kernel {
            for kw in 0..g.kernel {
                let row = (c * g.kernel + kh) * g.kernel + kw;
                let dst = &mut cols[row * cols_n..(row + 1) * cols_n];
                for b in 0..batch {
                    let src = &x[(b * g.channels + c) * img..(b * g.channels + c + 1) * img];
                    for oy in 0..g.oh {
                        let Some(iy) = g.source(oy, kh, g.ih) else { continue };
                        let base = b * p + oy * g.ow;
                        for ox in 0..g.ow {
                            if let Some(ix) = g.source(ox, kw, g.iw) {
                                dst[base + ox] = src[iy * g.iw + ix];
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

pub(crate) fn col2im<T: Real>(cols: &[T], batch: usize, g: &Geometry) -> Vec<T> {
    let p = g.positions();
    let cols_n = batch * p;
    let img = g.ih * g.iw;
    let mut x = vec![T::zero(); batch * g.channels * img];
    for c in 0..g.channels {
        for kh in 0..g.kernel {
            for kw in 0..g.kernel {
                let row = (c * g.kernel + kh) * g.kernel + kw;
                let src = &cols[row * cols_n..(row + 1) * cols_n];
                for b in 0..batch {
                    let dst = &mut x[(b * g.channels + c) * img..(b * g.channels + c + 1) * img];
                    for oy in 0..g.oh {
                        let Some(iy) = g.source(oy, kh, g.ih) else { continue };
                        let base = b * p + oy * g.ow;
                        for ox in 0..g.ow {
                            if let Some(ix) = g.source(ox, kw, g.iw) {
                                dst[iy * g.iw + ix] += src[base + ox];
                            }
                        }
                    }
                }
            }
        }
    }
    x
}

/// `(B, C, P)` → `[C, B·P]`.
pub(crate) fn to_channel_major<T: Real>(x: &[T], batch: usize, channels: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    for b in 0..batch {
        for c in 0..channels {
            out[c * batch * p + b * p..c * batch * p + (b + 1) * p]
                .copy_from_slice(&x[(b * channels + c) * p..(b * channels + c + 1) * p]);
        }
    }
    out
}

/// `[C, B·P]` → `(B, C, P)`.
pub(crate) fn from_channel_major<T: Real>(x: &[T], batch: usize, channels: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    for b in 0..batch {
        for c in 0..channels {
            out[(b * channels + c) * p..(b * channels + c + 1) * p]
                .copy_from_slice(&x[c * batch * p + b * p..c * batch * p + (b + 1) * p]);
        }
    }
    out
}
