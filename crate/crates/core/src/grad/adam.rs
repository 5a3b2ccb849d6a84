use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam moments for a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        AdamState {
            config,
            t: 0,
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn second_moments(&self) -> &[Vec<T>] {
        &self.v
    }

    /// One update over all `(param, grad)` pairs, in registration order.
    pub fn step<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a mut [T], &'a [T])>,
        T: 'a,
    {
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (one_b1, one_b2) = (T::lit(1.0 - c.beta1), T::lit(1.0 - c.beta2));
        let step = T::lit(c.lr / bc1);
        let inv_bc2 = T::lit(1.0 / bc2);
        let eps = T::lit(c.eps);
        let mut count = 0;
        for (i, (p, g)) in pairs.into_iter().enumerate() {
            let (m, v) = match (self.m.get_mut(i), self.v.get_mut(i)) {
                (Some(m), Some(v)) if m.len() == p.len() && p.len() == g.len() => (m, v),
                _ => return Err(Error::Shape(format!("parameter {i} does not match the optimizer state"))),
            };
            for j in 0..p.len() {
                m[j] = b1 * m[j] + one_b1 * g[j];
                v[j] = b2 * v[j] + one_b2 * g[j] * g[j];
                p[j] -= step * m[j] / ((v[j] * inv_bc2).sqrt() + eps);
            }
            count += 1;
        }
        if count != self.m.len() {
            return Err(Error::Shape(format!("{count} parameters for {} optimizer slots", self.m.len())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_each_coordinate_by_lr() {
        // m̂ = g and v̂ = g² after one step, so the update is lr·g/(|g| + eps).
        let mut p = vec![1.0f64, -2.0, 0.5];
        let g = vec![3.0, -0.01, 1e-3];
        let mut s = AdamState::new(AdamConfig::default(), &[3]);
        let before = p.clone();
        s.step([(&mut p[..], &g[..])]).unwrap();
        for j in 0..3 {
            let expect = 1e-4 * g[j] / (g[j].abs() + 1e-8);
            assert!(((before[j] - p[j]) - expect).abs() < 1e-12);
            assert!(((before[j] - p[j]).abs() - 1e-4).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0f32, 2.0];
        let mut s = AdamState::new(AdamConfig::default(), &[2]);
        s.step([(&mut p[..], &[0.0f32, 0.0][..])]).unwrap();
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(s.t, 1);
        assert!(s.second_moments()[0].iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn descends_on_a_quadratic() {
        let mut w = vec![1.0f64];
        let mut s = AdamState::new(AdamConfig { lr: 0.1, ..AdamConfig::default() }, &[1]);
        let mut f = w[0] * w[0];
        for _ in 0..2 {
            let g = vec![2.0 * w[0]];
            s.step([(&mut w[..], &g[..])]).unwrap();
            assert!(w[0] * w[0] < f);
            f = w[0] * w[0];
        }
    }

    #[test]
    fn mismatched_slots_are_rejected() {
        let mut s = AdamState::<f64>::new(AdamConfig::default(), &[2]);
        let mut p = vec![0.0; 3];
        assert!(s.step([(&mut p[..], &[0.0; 3][..])]).is_err());
    }
}
