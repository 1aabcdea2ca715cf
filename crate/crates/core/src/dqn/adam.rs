use super::network::{Gradients, QNetwork};
use crate::scalar::Scalar;

/// Adaptive moment estimation with bias correction.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    t: i32,
    m: Gradients<T>,
    v: Gradients<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(net: &QNetwork<T>, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr: T::lit(lr),
            beta1: T::lit(beta1),
            beta2: T::lit(beta2),
            eps: T::lit(eps),
            t: 0,
            m: net.zero_gradients(),
            v: net.zero_gradients(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, net: &mut QNetwork<T>, grads: &Gradients<T>) {
        self.t = self.t.saturating_add(1);
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.t);
        let bc2 = one - self.beta2.powi(self.t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let step = self.lr / bc1;
        let bc2_sqrt = bc2.sqrt();
        let blocks = net
            .blocks_mut()
            .zip(grads.blocks())
            .zip(self.m.blocks_mut())
            .zip(self.v.blocks_mut());
        for (((p, g), m), v) in blocks {
            let n = p.len();
            let (g, m, v) = (&g[..n], &mut m[..n], &mut v[..n]);
            for i in 0..n {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                p[i] -= step * m[i] / (v[i].sqrt() / bc2_sqrt + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut net = QNetwork::<f64>::zeros(&[1, 2]);
        let mut g = net.zero_gradients();
        g.biases[0] = vec![3.0, -0.01];
        let mut adam = Adam::new(&net, 0.1, 0.9, 0.999, 1e-8);
        adam.step(&mut net, &g);
        let b = &net.biases()[0];
        assert!((b[0] + 0.1).abs() < 1e-6, "{b:?}");
        assert!((b[1] - 0.1).abs() < 1e-4, "{b:?}");
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut rng = crate::rng::stream(3, 0);
        let mut net = QNetwork::<f32>::he_uniform(&[4, 3, 2], &mut rng);
        let before = net.clone();
        let g = net.zero_gradients();
        let mut adam = Adam::new(&net, 0.0071, 0.9, 0.999, 1e-8);
        adam.step(&mut net, &g);
        assert_eq!(net, before);
    }

    #[test]
    fn minimizes_a_quadratic() {
        // loss = (b - 3)^2 on a single bias
        let mut net = QNetwork::<f64>::zeros(&[1, 1]);
        let mut adam = Adam::new(&net, 0.05, 0.9, 0.999, 1e-8);
        let mut g = net.zero_gradients();
        for _ in 0..2000 {
            g.biases[0][0] = 2.0 * (net.biases()[0][0] - 3.0);
            adam.step(&mut net, &g);
        }
        assert!((net.biases()[0][0] - 3.0).abs() < 1e-3);
    }
}
