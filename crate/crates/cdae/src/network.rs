use rand::Rng;

use qmf_nn::{
    conv2d_backward_with, conv2d_forward, maxpool2d_backward, maxpool2d_forward, tanh_backward, tanh_forward,
    tconv2d_backward_with, tconv2d_forward, uniform_init, Needs, PoolCache, Real, Tensor4,
};

use crate::error::{CdaeError, Result};
use crate::spec::{Layer, NetworkSpec, ParamKind, ParamLayerSpec, NUM_PARAM_LAYERS};

/// Weights and biases of one convolution or transposed convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamLayer<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// The autoencoder with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    spec: NetworkSpec,
    params: Vec<ParamLayer<T>>,
}

/// Activations kept by [`Network::forward_cached`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    /// `acts[i]` is the input of layer `i`; the last entry is the output.
    acts: Vec<Tensor4<T>>,
    pools: Vec<Option<PoolCache>>,
}

impl<T: Real> ForwardCache<T> {
    pub fn output(&self) -> &Tensor4<T> {
        self.acts.last().expect("cache holds the input at least")
    }

    /// Latent representation (encoder output).
    pub fn latent(&self, spec: &NetworkSpec) -> &Tensor4<T> {
        &self.acts[spec.encoder_len()]
    }
}

/// Per-layer parameter gradients; `None` for layers that were not asked for.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Option<ParamLayer<T>>>,
}

impl<T: Real> Network<T> {
    /// Fresh network with uniform `±1/√fan_in` initialization.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let params = spec
            .param_layers()
            .iter()
            .map(|l| {
                let fan_in = match l.kind {
                    ParamKind::Conv => l.conv.in_channels,
                    ParamKind::TConv => l.conv.out_channels,
                } * l.conv.kernel
                    * l.conv.kernel;
                ParamLayer {
                    weight: uniform_init(l.conv.weight_len(), fan_in, rng),
                    bias: uniform_init(l.conv.out_channels, fan_in, rng),
                }
            })
            .collect();
        Ok(Self { spec, params })
    }

    /// Assembles a network from explicit parameters, checking every size.
    pub fn from_params(spec: NetworkSpec, params: Vec<ParamLayer<T>>) -> Result<Self> {
        spec.validate()?;
        let layers = spec.param_layers();
        if params.len() != layers.len() {
            return Err(CdaeError::Mismatch(format!(
                "{} parameter layers given, architecture has {}",
                params.len(),
                layers.len()
            )));
        }
        for (p, l) in params.iter().zip(&layers) {
            if p.weight.len() != l.conv.weight_len() || p.bias.len() != l.conv.out_channels {
                return Err(CdaeError::Mismatch(format!(
                    "{}: got {}+{} values, expected {}+{}",
                    l.name,
                    p.weight.len(),
                    p.bias.len(),
                    l.conv.weight_len(),
                    l.conv.out_channels
                )));
            }
        }
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[ParamLayer<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [ParamLayer<T>] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<ParamLayer<T>> {
        self.params
    }

    /// Same weights on a register of a different size. Layer shapes depend
    /// only on `S`, so this always succeeds for `N ≥ 3`.
    pub fn with_num_qubits(self, num_qubits: usize) -> Result<Self> {
        let spec = NetworkSpec::new(num_qubits, self.spec.scale)?;
        Ok(Self { spec, params: self.params })
    }

    pub fn cast<U: Real>(&self) -> Network<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::of(x.to_f64())).collect();
        Network {
            spec: self.spec,
            params: self.params.iter().map(|p| ParamLayer { weight: conv(&p.weight), bias: conv(&p.bias) }).collect(),
        }
    }

    fn check_input(&self, x: &Tensor4<T>) -> Result<()> {
        let d = self.spec.side();
        let [_, c, h, w] = x.shape();
        if c != 2 || h != d || w != d {
            return Err(CdaeError::Mismatch(format!("input shape {:?} does not match (B, 2, {d}, {d})", x.shape())));
        }
        Ok(())
    }

    fn apply_param(&self, spec: &ParamLayerSpec, p: &ParamLayer<T>, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        Ok(match spec.kind {
            ParamKind::Conv => conv2d_forward(x, &p.weight, &p.bias, &spec.conv)?,
            ParamKind::TConv => tconv2d_forward(x, &p.weight, &p.bias, &spec.conv)?,
        })
    }

    /// `(B, 2, 2^N, 2^N)` → `(B, 2, 2^N, 2^N)`.
    pub fn forward(&self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        self.check_input(x)?;
        let specs = self.spec.param_layers();
        let mut cur = x.clone();
        for layer in self.spec.layers() {
            cur = match layer {
                Layer::Param(i) => self.apply_param(&specs[i], &self.params[i], &cur)?,
                Layer::Tanh => tanh_forward(&cur),
                Layer::Pool(p) => maxpool2d_forward(&cur, &p)?.0,
            };
        }
        Ok(cur)
    }

    pub fn forward_cached(&self, x: &Tensor4<T>) -> Result<ForwardCache<T>> {
        self.check_input(x)?;
        let specs = self.spec.param_layers();
        let layers = self.spec.layers();
        let mut acts = Vec::with_capacity(layers.len() + 1);
        let mut pools = Vec::with_capacity(layers.len());
        acts.push(x.clone());
        for layer in layers {
            let cur = acts.last().expect("non-empty");
            let (next, pool) = match layer {
                Layer::Param(i) => (self.apply_param(&specs[i], &self.params[i], cur)?, None),
                Layer::Tanh => (tanh_forward(cur), None),
                Layer::Pool(p) => {
                    let (y, c) = maxpool2d_forward(cur, &p)?;
                    (y, Some(c))
                }
            };
            acts.push(next);
            pools.push(pool);
        }
        Ok(ForwardCache { acts, pools })
    }

    /// Back-propagates `grad_out` (the loss gradient at the output) and
    /// returns parameter gradients for the layers marked in `wanted`.
    /// Propagation stops at the earliest wanted layer.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_out: &Tensor4<T>, wanted: &[bool]) -> Result<Gradients<T>> {
        if wanted.len() != NUM_PARAM_LAYERS {
            return Err(CdaeError::Mismatch(format!(
                "{} layer flags given, network has {NUM_PARAM_LAYERS} parameterized layers",
                wanted.len()
            )));
        }
        if grad_out.shape() != cache.output().shape() {
            return Err(CdaeError::Mismatch(format!(
                "output gradient shape {:?} vs output {:?}",
                grad_out.shape(),
                cache.output().shape()
            )));
        }
        let specs = self.spec.param_layers();
        let layers = self.spec.layers();
        let mut grads = Gradients { layers: vec![None; NUM_PARAM_LAYERS] };
        let Some(stop) = layers.iter().position(|l| matches!(l, Layer::Param(i) if wanted[*i])) else {
            return Ok(grads);
        };
        let mut g = grad_out.clone();
        for idx in (stop..layers.len()).rev() {
            let x = &cache.acts[idx];
            g = match layers[idx] {
                Layer::Tanh => tanh_backward(&cache.acts[idx + 1], &g)?,
                Layer::Pool(_) => maxpool2d_backward(cache.pools[idx].as_ref().expect("pool cache"), &g)?,
                Layer::Param(i) => {
                    let needs = Needs { input: idx > stop, params: wanted[i] };
                    let p = &self.params[i];
                    let r = match specs[i].kind {
                        ParamKind::Conv => conv2d_backward_with(x, &p.weight, &specs[i].conv, &g, needs)?,
                        ParamKind::TConv => tconv2d_backward_with(x, &p.weight, &specs[i].conv, &g, needs)?,
                    };
                    if wanted[i] {
                        grads.layers[i] = Some(ParamLayer { weight: r.weight, bias: r.bias });
                    }
                    r.input
                }
            };
        }
        Ok(grads)
    }
}
