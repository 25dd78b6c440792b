//! Convolution and transposed convolution via im2col + GEMM.
//!
//! Weight layouts follow the usual convention: `[Cout, Cin, K, K]` for
//! [`Conv2d`] and `[Cin, Cout, K, K]` for [`TConv2d`]. With those layouts a
//! transposed convolution with the same buffer and spec is exactly the adjoint
//! of the convolution.

use rand::Rng;

use crate::error::{NnError, Result};
use crate::im2col::{col2im, from_channel_major, im2col, to_channel_major, Geometry};
use crate::init::uniform_init;
use crate::scalar::{gemm, plain, trans, Real};
use crate::shape::{conv_out_size, tconv_out_size, ConvSpec};
use crate::tensor::Tensor4;

/// Gradients of a convolution-type layer.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor4<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Which gradients a backward pass should produce. Skipped ones come back
/// as empty buffers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Needs {
    pub input: bool,
    pub params: bool,
}

impl Needs {
    pub const ALL: Needs = Needs { input: true, params: true };
}

fn check_params<T>(spec: &ConvSpec, weight: &[T], bias: &[T]) -> Result<()> {
    spec.validate()?;
    if weight.len() != spec.weight_len() {
        return Err(NnError::ShapeMismatch(format!(
            "weight has {} values, spec needs {}",
            weight.len(),
            spec.weight_len()
        )));
    }
    if bias.len() != spec.out_channels {
        return Err(NnError::ShapeMismatch(format!(
            "bias has {} values, spec needs {}",
            bias.len(),
            spec.out_channels
        )));
    }
    Ok(())
}

fn check_input<T: Real>(x: &Tensor4<T>, channels: usize) -> Result<()> {
    if x.channels() != channels {
        return Err(NnError::ShapeMismatch(format!("input has {} channels, layer expects {channels}", x.channels())));
    }
    Ok(())
}

fn check_grad<T: Real>(gy: &Tensor4<T>, expected: [usize; 4]) -> Result<()> {
    if gy.shape() != expected {
        return Err(NnError::ShapeMismatch(format!("output gradient shape {:?}, expected {expected:?}", gy.shape())));
    }
    Ok(())
}

fn conv_geometry(spec: &ConvSpec, h: usize, w: usize) -> Result<Geometry> {
    Ok(Geometry {
        channels: spec.in_channels,
        ih: h,
        iw: w,
        oh: conv_out_size(h, spec)?,
        ow: conv_out_size(w, spec)?,
        kernel: spec.kernel,
        stride: spec.stride,
        padding: spec.padding,
        dilation: spec.dilation,
    })
}

/// The convolution whose adjoint is the transposed convolution `(h, w)` →
/// `(oh, ow)`: it reads the large output and produces the small input.
fn tconv_geometry(spec: &ConvSpec, h: usize, w: usize) -> Result<Geometry> {
    Ok(Geometry {
        channels: spec.out_channels,
        ih: tconv_out_size(h, spec)?,
        iw: tconv_out_size(w, spec)?,
        oh: h,
        ow: w,
        kernel: spec.kernel,
        stride: spec.stride,
        padding: spec.padding,
        dilation: spec.dilation,
    })
}

fn bias_grad<T: Real>(gy: &Tensor4<T>) -> Vec<T> {
    let c = gy.channels();
    let p = gy.height() * gy.width();
    let mut gb = vec![T::zero(); c];
    for b in 0..gy.batch() {
        for (ch, g) in gb.iter_mut().enumerate() {
            let off = (b * c + ch) * p;
            *g += gy.as_slice()[off..off + p].iter().copied().sum::<T>();
        }
    }
    gb
}

pub fn conv2d_forward<T: Real>(x: &Tensor4<T>, weight: &[T], bias: &[T], spec: &ConvSpec) -> Result<Tensor4<T>> {
    check_params(spec, weight, bias)?;
    check_input(x, spec.in_channels)?;
    let batch = x.batch();
    let g = conv_geometry(spec, x.height(), x.width())?;
    let cols = im2col(x.as_slice(), batch, &g);
    let n = batch * g.positions();
    let mut y = vec![T::zero(); spec.out_channels * n];
    for (row, &b) in y.chunks_mut(n.max(1)).zip(bias) {
        row.fill(b);
    }
    gemm(spec.out_channels, g.rows(), n, plain(weight), plain(&cols), T::one(), &mut y);
    Tensor4::from_vec(
        [batch, spec.out_channels, g.oh, g.ow],
        from_channel_major(&y, batch, spec.out_channels, g.positions()),
    )
}

pub fn conv2d_backward<T: Real>(
    x: &Tensor4<T>,
    weight: &[T],
    spec: &ConvSpec,
    grad_out: &Tensor4<T>,
) -> Result<ConvGrads<T>> {
    conv2d_backward_with(x, weight, spec, grad_out, Needs::ALL)
}

pub fn conv2d_backward_with<T: Real>(
    x: &Tensor4<T>,
    weight: &[T],
    spec: &ConvSpec,
    grad_out: &Tensor4<T>,
    needs: Needs,
) -> Result<ConvGrads<T>> {
    spec.validate()?;
    check_input(x, spec.in_channels)?;
    let batch = x.batch();
    let g = conv_geometry(spec, x.height(), x.width())?;
    check_grad(grad_out, [batch, spec.out_channels, g.oh, g.ow])?;
    let n = batch * g.positions();
    let gy = to_channel_major(grad_out.as_slice(), batch, spec.out_channels, g.positions());

    let (mut gw, mut gb) = (Vec::new(), Vec::new());
    if needs.params {
        let cols = im2col(x.as_slice(), batch, &g);
        gw = vec![T::zero(); weight.len()];
        gemm(spec.out_channels, n, g.rows(), plain(&gy), trans(&cols), T::zero(), &mut gw);
        gb = bias_grad(grad_out);
    }
    let input = if needs.input {
        let mut gcols = vec![T::zero(); g.rows() * n];
        gemm(g.rows(), spec.out_channels, n, trans(weight), plain(&gy), T::zero(), &mut gcols);
        Tensor4::from_vec(x.shape(), col2im(&gcols, batch, &g))?
    } else {
        Tensor4::zeros([0, 0, 0, 0])
    };
    Ok(ConvGrads { input, weight: gw, bias: gb })
}

pub fn tconv2d_forward<T: Real>(x: &Tensor4<T>, weight: &[T], bias: &[T], spec: &ConvSpec) -> Result<Tensor4<T>> {
    check_params(spec, weight, bias)?;
    check_input(x, spec.in_channels)?;
    let batch = x.batch();
    let g = tconv_geometry(spec, x.height(), x.width())?;
    let n = batch * g.positions();
    let xm = to_channel_major(x.as_slice(), batch, spec.in_channels, g.positions());
    let mut cols = vec![T::zero(); g.rows() * n];
    gemm(g.rows(), spec.in_channels, n, trans(weight), plain(&xm), T::zero(), &mut cols);
    let mut y = col2im(&cols, batch, &g);
    let p = g.ih * g.iw;
    for b in 0..batch {
        for (c, &bv) in bias.iter().enumerate() {
            let off = (b * spec.out_channels + c) * p;
            y[off..off + p].iter_mut().for_each(|v| *v += bv);
        }
    }
    Tensor4::from_vec([batch, spec.out_channels, g.ih, g.iw], y)
}

pub fn tconv2d_backward<T: Real>(
    x: &Tensor4<T>,
    weight: &[T],
    spec: &ConvSpec,
    grad_out: &Tensor4<T>,
) -> Result<ConvGrads<T>> {
    tconv2d_backward_with(x, weight, spec, grad_out, Needs::ALL)
}

pub fn tconv2d_backward_with<T: Real>(
    x: &Tensor4<T>,
    weight: &[T],
    spec: &ConvSpec,
    grad_out: &Tensor4<T>,
    needs: Needs,
) -> Result<ConvGrads<T>> {
    spec.validate()?;
    check_input(x, spec.in_channels)?;
    let batch = x.batch();
    let g = tconv_geometry(spec, x.height(), x.width())?;
    check_grad(grad_out, [batch, spec.out_channels, g.ih, g.iw])?;
    let n = batch * g.positions();
    let gcols = im2col(grad_out.as_slice(), batch, &g);

    let (mut gw, mut gb) = (Vec::new(), Vec::new());
    if needs.params {
        let xm = to_channel_major(x.as_slice(), batch, spec.in_channels, g.positions());
        gw = vec![T::zero(); weight.len()];
        gemm(spec.in_channels, n, g.rows(), plain(&xm), trans(&gcols), T::zero(), &mut gw);
        gb = bias_grad(grad_out);
    }
    let input = if needs.input {
        let mut gx = vec![T::zero(); spec.in_channels * n];
        gemm(spec.in_channels, g.rows(), n, plain(weight), plain(&gcols), T::zero(), &mut gx);
        Tensor4::from_vec(x.shape(), from_channel_major(&gx, batch, spec.in_channels, g.positions()))?
    } else {
        Tensor4::zeros([0, 0, 0, 0])
    };
    Ok(ConvGrads { input, weight: gw, bias: gb })
}

/// Convolution layer with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d<T> {
    pub spec: ConvSpec,
    /// `[Cout, Cin, K, K]`.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Conv2d<T> {
    /// Uniform `±1/√(Cin·K·K)` weights and biases.
    pub fn new<R: Rng + ?Sized>(spec: ConvSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let fan_in = spec.in_channels * spec.kernel * spec.kernel;
        Ok(Self {
            spec,
            weight: uniform_init(spec.weight_len(), fan_in, rng),
            bias: uniform_init(spec.out_channels, fan_in, rng),
        })
    }

    pub fn forward(&self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        conv2d_forward(x, &self.weight, &self.bias, &self.spec)
    }

    pub fn backward(&self, x: &Tensor4<T>, grad_out: &Tensor4<T>) -> Result<ConvGrads<T>> {
        conv2d_backward(x, &self.weight, &self.spec, grad_out)
    }
}

/// Transposed convolution layer with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TConv2d<T> {
    pub spec: ConvSpec,
    /// `[Cin, Cout, K, K]`.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> TConv2d<T> {
    /// Uniform `±1/√(Cout·K·K)` weights and biases (fan-in seen by each
    /// input through the adjoint).
    pub fn new<R: Rng + ?Sized>(spec: ConvSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let fan_in = spec.out_channels * spec.kernel * spec.kernel;
        Ok(Self {
            spec,
            weight: uniform_init(spec.weight_len(), fan_in, rng),
            bias: uniform_init(spec.out_channels, fan_in, rng),
        })
    }

    pub fn forward(&self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        tconv2d_forward(x, &self.weight, &self.bias, &self.spec)
    }

    pub fn backward(&self, x: &Tensor4<T>, grad_out: &Tensor4<T>) -> Result<ConvGrads<T>> {
        tconv2d_backward(x, &self.weight, &self.spec, grad_out)
    }
}
