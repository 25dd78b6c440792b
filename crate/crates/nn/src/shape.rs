//! Output-size arithmetic for convolution, transposed convolution and pooling.
//!
//! ```text
//! conv:  out = ⌊(in + 2P − D(K−1) − 1)/S⌋ + 1
//! tconv: out = (in − 1)S − 2P + D(K−1) + P_out + 1
//! ```

use crate::error::{NnError, Result};

/// Geometry of a convolution or transposed convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub dilation: usize,
    /// Extra rows/columns on the far edge; transposed convolutions only.
    pub output_padding: usize,
}

impl ConvSpec {
    /// Dilation 1, no output padding.
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        Self { in_channels, out_channels, kernel, stride, padding, dilation: 1, output_padding: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(NnError::InvalidSpec("channel counts must be positive".into()));
        }
        if self.kernel == 0 || self.stride == 0 || self.dilation == 0 {
            return Err(NnError::InvalidSpec(format!(
                "kernel {}, stride {} and dilation {} must be positive",
                self.kernel, self.stride, self.dilation
            )));
        }
        if self.output_padding >= self.stride.max(self.dilation) {
            return Err(NnError::InvalidSpec(format!(
                "output padding {} must be smaller than stride or dilation",
                self.output_padding
            )));
        }
        Ok(())
    }

    /// Weight count of a convolution (`[Cout, Cin, K, K]`) or transposed
    /// convolution (`[Cin, Cout, K, K]`); the same number either way.
    pub fn weight_len(&self) -> usize {
        self.in_channels * self.out_channels * self.kernel * self.kernel
    }
}

/// Max-pooling window; dilation is always 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PoolSpec {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl PoolSpec {
    pub fn new(kernel: usize, stride: usize, padding: usize) -> Self {
        Self { kernel, stride, padding }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel == 0 || self.stride == 0 {
            return Err(NnError::InvalidSpec("pool kernel and stride must be positive".into()));
        }
        if 2 * self.padding > self.kernel {
            return Err(NnError::InvalidSpec(format!(
                "pool padding {} exceeds half the kernel {}",
                self.padding, self.kernel
            )));
        }
        Ok(())
    }
}

fn windowed(input: usize, kernel: usize, stride: usize, padding: usize, dilation: usize) -> Result<usize> {
    if input == 0 {
        return Err(NnError::InvalidSize { input, size: 0 });
    }
    let span = (input + 2 * padding) as i64 - (dilation * (kernel - 1)) as i64 - 1;
    let size = span.div_euclid(stride as i64) + 1;
    if size < 1 {
        return Err(NnError::InvalidSize { input, size });
    }
    Ok(size as usize)
}

pub fn conv_out_size(input: usize, spec: &ConvSpec) -> Result<usize> {
    spec.validate()?;
    windowed(input, spec.kernel, spec.stride, spec.padding, spec.dilation)
}

pub fn tconv_out_size(input: usize, spec: &ConvSpec) -> Result<usize> {
    spec.validate()?;
    if input == 0 {
        return Err(NnError::InvalidSize { input, size: 0 });
    }
    let size = ((input - 1) * spec.stride) as i64 - 2 * spec.padding as i64
        + (spec.dilation * (spec.kernel - 1)) as i64
        + spec.output_padding as i64
        + 1;
    if size < 1 {
        return Err(NnError::InvalidSize { input, size });
    }
    Ok(size as usize)
}

pub fn pool_out_size(input: usize, spec: &PoolSpec) -> Result<usize> {
    spec.validate()?;
    windowed(input, spec.kernel, spec.stride, spec.padding, 1)
}

/// One size-changing stage of a network, for chain arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Conv(ConvSpec),
    TConv(ConvSpec),
    Pool(PoolSpec),
}

impl Stage {
    pub fn out_size(&self, input: usize) -> Result<usize> {
        match self {
            Stage::Conv(s) => conv_out_size(input, s),
            Stage::TConv(s) => tconv_out_size(input, s),
            Stage::Pool(s) => pool_out_size(input, s),
        }
    }
}

/// Spatial side after each stage, starting with `input` itself.
pub fn chain_sizes(input: usize, stages: &[Stage]) -> Result<Vec<usize>> {
    let mut sizes = Vec::with_capacity(stages.len() + 1);
    sizes.push(input);
    let mut cur = input;
    for s in stages {
        cur = s.out_size(cur)?;
        sizes.push(cur);
    }
    Ok(sizes)
}
