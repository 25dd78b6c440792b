use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment buffers for one parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self { step: 0, m: vec![T::zero(); len], v: vec![T::zero(); len] }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>, cfg: &AdamConfig) {
    assert_eq!(params.len(), grads.len(), "adam: gradient length");
    assert_eq!(params.len(), state.m.len(), "adam: state length");
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let (one_b1, one_b2) = (T::of(1.0 - cfg.beta1), T::of(1.0 - cfg.beta2));
    // lr·m̂/(√v̂ + ε) = (lr/c1)·m / (√v/√c2 + ε)
    let step = T::of(cfg.lr / c1);
    let inv_sqrt_c2 = T::of(1.0 / c2.sqrt());
    let eps = T::of(cfg.eps);
    for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        *m = b1 * *m + one_b1 * g;
        *v = b2 * *v + one_b2 * g * g;
        *p -= step * *m / (v.sqrt() * inv_sqrt_c2 + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0f64, -2.0, 3.0];
        let mut s = AdamState::new(3);
        for _ in 0..10 {
            adam_step(&mut p, &[0.0; 3], &mut s, &AdamConfig::default());
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![0.5f64];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut s, &AdamConfig::default());
        let expected = 0.5 - 1e-4 * 1.0 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn converges_on_quadratic_bowl() {
        let centre = [3.0f64, -1.5, 0.25];
        let mut p = vec![0.0f64; 3];
        let mut s = AdamState::new(3);
        let cfg = AdamConfig { lr: 0.05, ..AdamConfig::default() };
        for _ in 0..500 {
            let g: Vec<f64> = p.iter().zip(&centre).map(|(x, c)| 2.0 * (x - c)).collect();
            adam_step(&mut p, &g, &mut s, &cfg);
        }
        for (x, c) in p.iter().zip(&centre) {
            assert!((x - c).abs() < 1e-3, "{x} vs {c}");
        }
    }
}
