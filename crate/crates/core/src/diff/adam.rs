use super::param::ParamStore;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam step over every parameter, then zeroes the
/// gradients. Parameters whose gradient contains a NaN are left untouched
/// (moments and step counter included); the number of such parameters is
/// returned.
pub fn adam_update(store: &mut ParamStore, cfg: &AdamConfig) -> usize {
    let mut skipped = 0;
    for p in store.iter_mut() {
        if p.grad.data().iter().any(|g| g.is_nan()) {
            skipped += 1;
            p.grad.data_mut().fill(0.0);
            continue;
        }
        p.step += 1;
        let bc1 = 1.0 - libm::pow(cfg.beta1, p.step as f64);
        let bc2 = 1.0 - libm::pow(cfg.beta2, p.step as f64);
        let n = p.value.len();
        for i in 0..n {
            let g = p.grad.data()[i];
            let m = cfg.beta1 * p.m.data()[i] + (1.0 - cfg.beta1) * g;
            let v = cfg.beta2 * p.v.data()[i] + (1.0 - cfg.beta2) * g * g;
            p.m.data_mut()[i] = m;
            p.v.data_mut()[i] = v;
            let m_hat = m / bc1;
            let v_hat = v / bc2;
            p.value.data_mut()[i] -= cfg.lr * m_hat / (libm::sqrt(v_hat) + cfg.eps);
        }
        p.grad.data_mut().fill(0.0);
    }
    skipped
}
