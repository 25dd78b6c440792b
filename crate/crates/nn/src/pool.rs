use crate::error::{NnError, Result};
use crate::scalar::Real;
use crate::shape::{pool_out_size, PoolSpec};
use crate::tensor::Tensor4;

/// Max pooling that remembers where each maximum came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaxPool2d {
    pub spec: PoolSpec,
}

/// Flat input index of each output's maximum, plus the input shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolCache {
    pub argmax: Vec<usize>,
    pub input_shape: [usize; 4],
}

/// Ties go to the first maximum in row-major window order. Padding cells
/// never win.
pub fn maxpool2d_forward<T: Real>(x: &Tensor4<T>, spec: &PoolSpec) -> Result<(Tensor4<T>, PoolCache)> {
    let [batch, channels, h, w] = x.shape();
    let oh = pool_out_size(h, spec)?;
    let ow = pool_out_size(w, spec)?;
    let mut y = Vec::with_capacity(batch * channels * oh * ow);
    let mut argmax = Vec::with_capacity(y.capacity());
    let data = x.as_slice();
    for plane in 0..batch * channels {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best: Option<(usize, T)> = None;
                for kh in 0..spec.kernel {
                    let iy = (oy * spec.stride + kh) as isize - spec.padding as isize;
                    if iy < 0 || iy as usize >= h {
                        continue;
                    }
                    for kw in 0..spec.kernel {
                        let ix = (ox * spec.stride + kw) as isize - spec.padding as isize;
                        if ix < 0 || ix as usize >= w {
                            continue;
                        }
                        let idx = base + iy as usize * w + ix as usize;
                        let v = data[idx];
                        if best.is_none_or(|(_, b)| v > b) {
                            best = Some((idx, v));
                        }
                    }
                }
                let (idx, v) = best.expect("every window overlaps the input");
                y.push(v);
                argmax.push(idx);
            }
        }
    }
    Ok((Tensor4::from_vec([batch, channels, oh, ow], y)?, PoolCache { argmax, input_shape: x.shape() }))
}

pub fn maxpool2d_backward<T: Real>(cache: &PoolCache, grad_out: &Tensor4<T>) -> Result<Tensor4<T>> {
    if grad_out.len() != cache.argmax.len() {
        return Err(NnError::ShapeMismatch(format!(
            "pool gradient has {} values, forward produced {}",
            grad_out.len(),
            cache.argmax.len()
        )));
    }
    let mut gx = Tensor4::zeros(cache.input_shape);
    let g = gx.as_mut_slice();
    for (&idx, &v) in cache.argmax.iter().zip(grad_out.as_slice()) {
        g[idx] += v;
    }
    Ok(gx)
}

impl MaxPool2d {
    pub fn new(spec: PoolSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn forward<T: Real>(&self, x: &Tensor4<T>) -> Result<(Tensor4<T>, PoolCache)> {
        maxpool2d_forward(x, &self.spec)
    }

    pub fn backward<T: Real>(&self, cache: &PoolCache, grad_out: &Tensor4<T>) -> Result<Tensor4<T>> {
        maxpool2d_backward(cache, grad_out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_max_and_routes_gradient() {
        let x = Tensor4::from_vec([1, 1, 2, 2], vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let (y, cache) = maxpool2d_forward(&x, &PoolSpec::new(2, 2, 0)).unwrap();
        assert_eq!(y.as_slice(), &[4.0]);
        let g = maxpool2d_backward(&cache, &Tensor4::from_vec([1, 1, 1, 1], vec![1.5]).unwrap()).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0, 0.0, 1.5]);
    }

    #[test]
    fn ties_go_to_first_maximum() {
        let x = Tensor4::from_vec([1, 1, 2, 2], vec![0.0f32, 5.0, 5.0, 5.0]).unwrap();
        let (_, cache) = maxpool2d_forward(&x, &PoolSpec::new(2, 2, 0)).unwrap();
        assert_eq!(cache.argmax, vec![1]);
    }

    #[test]
    fn padding_cells_are_ignored() {
        let x = Tensor4::from_vec([1, 1, 2, 2], vec![-1.0f64, -2.0, -3.0, -4.0]).unwrap();
        let (y, _) = maxpool2d_forward(&x, &PoolSpec::new(2, 2, 1)).unwrap();
        assert_eq!(y.as_slice(), &[-1.0, -2.0, -3.0, -4.0]);
    }
}
