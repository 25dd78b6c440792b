use crate::error::{NnError, Result};
use crate::scalar::Real;
use crate::tensor::Tensor4;

pub fn tanh_forward<T: Real>(x: &Tensor4<T>) -> Tensor4<T> {
    let data = x.as_slice().iter().map(|v| v.tanh()).collect();
    Tensor4::from_vec(x.shape(), data).expect("same shape")
}

/// Uses the forward output: `∂/∂x tanh x = 1 − y²`.
pub fn tanh_backward<T: Real>(y: &Tensor4<T>, grad_out: &Tensor4<T>) -> Result<Tensor4<T>> {
    if y.shape() != grad_out.shape() {
        return Err(NnError::ShapeMismatch(format!(
            "tanh gradient shape {:?} vs output {:?}",
            grad_out.shape(),
            y.shape()
        )));
    }
    let data = y.as_slice().iter().zip(grad_out.as_slice()).map(|(&y, &g)| g * (T::one() - y * y)).collect();
    Tensor4::from_vec(y.shape(), data)
}
