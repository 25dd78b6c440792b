//! Two-channel real encoding of complex matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;

/// A complex `side × side` matrix split into a real channel (0) and an
/// imaginary channel (1), each row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoChannelTensor {
    side: usize,
    /// `2 · side²` values: channel 0 then channel 1.
    data: Vec<f64>,
}

impl TwoChannelTensor {
    pub fn zeros(side: usize) -> Self {
        Self { side, data: vec![0.0; 2 * side * side] }
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.dim() * m.dim();
        let mut data = vec![0.0; 2 * n];
        for (i, z) in m.as_slice().iter().enumerate() {
            data[i] = z.re;
            data[n + i] = z.im;
        }
        Self { side: m.dim(), data }
    }

    /// Wraps channel-major data of length `2 · side²`.
    pub fn from_channels(side: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 2 * side * side {
            return Err(Error::DimensionMismatch { expected: 2 * side * side, found: data.len() });
        }
        Ok(Self { side, data })
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.side * self.side;
        let entries = (0..n).map(|i| Complex64::new(self.data[i], self.data[n + i])).collect();
        CMatrix::from_vec(self.side, entries).expect("length checked at construction")
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn real(&self) -> &[f64] {
        &self.data[..self.side * self.side]
    }

    pub fn imag(&self) -> &[f64] {
        &self.data[self.side * self.side..]
    }

    /// Both channels, channel 0 first.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}
