use serde::{Deserialize, Serialize};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one entry per parameter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdamMoments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamMoments {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    moments: &mut AdamMoments,
    t: u64,
    cfg: &AdamConfig,
) {
    assert!(t >= 1, "adam step counter starts at 1");
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), moments.m.len());
    let t = t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(moments.m.iter_mut())
        .zip(moments.v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.5, -2.0];
        let mut m = AdamMoments::zeros(2);
        adam_step(&mut p, &[0.0, 0.0], &mut m, 1, &AdamConfig::default());
        assert_eq!(p, vec![1.5, -2.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![0.0];
        let mut m = AdamMoments::zeros(1);
        adam_step(&mut p, &[1.0], &mut m, 1, &AdamConfig::default());
        // m_hat = v_hat = 1 on the first step.
        assert!((p[0] + 0.01).abs() < 1e-9, "{}", p[0]);
    }

    #[test]
    fn matches_reference_formula() {
        let cfg = AdamConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 17;
        let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut moments = AdamMoments::zeros(n);
        let (mut rp, mut rm, mut rv) = (p.clone(), vec![0.0; n], vec![0.0; n]);
        for t in 1..=25u64 {
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            adam_step(&mut p, &g, &mut moments, t, &cfg);
            for i in 0..n {
                rm[i] = 0.9 * rm[i] + 0.1 * g[i];
                rv[i] = 0.999 * rv[i] + 0.001 * g[i] * g[i];
                let mh = rm[i] / (1.0 - 0.9f64.powf(t as f64));
                let vh = rv[i] / (1.0 - 0.999f64.powf(t as f64));
                rp[i] -= 0.01 * mh / (vh.sqrt() + 1e-8);
            }
        }
        for i in 0..n {
            assert!((p[i] - rp[i]).abs() <= 1e-12, "{} vs {}", p[i], rp[i]);
        }
    }
}
