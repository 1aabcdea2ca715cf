//! Dense ReLU network with hand-written backpropagation.
//!
//! Weights are stored input-major (`w[i * out + o]` connects input `i` to
//! output `o`) so that both the forward pass and the weight-gradient update
//! run as contiguous `axpy` loops over the output dimension.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork<T> {
    sizes: Vec<usize>,
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
}

/// Parameter-shaped gradient accumulator.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub(crate) weights: Vec<Vec<T>>,
    pub(crate) biases: Vec<Vec<T>>,
}

/// Per-layer outputs of one forward pass; hidden layers are post-ReLU.
#[derive(Clone, Debug, Default)]
pub struct Activations<T> {
    layers: Vec<Vec<T>>,
}

impl<T: Scalar> Activations<T> {
    pub fn output(&self) -> &[T] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    let n = y.len().min(x.len());
    let (x, y) = (&x[..n], &mut y[..n]);
    let mut cy = y.chunks_exact_mut(8);
    let mut cx = x.chunks_exact(8);
    for (ys, xs) in (&mut cy).zip(&mut cx) {
        for k in 0..8 {
            ys[k] += alpha * xs[k];
        }
    }
    for (yi, &xi) in cy.into_remainder().iter_mut().zip(cx.remainder()) {
        *yi += alpha * xi;
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().copied().sum::<T>() + tail
}

fn check_sizes(sizes: &[usize]) {
    assert!(sizes.len() >= 2, "a network needs an input and an output layer");
    assert!(sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
}

impl<T: Scalar> QNetwork<T> {
    /// Every weight and bias zero.
    pub fn zeros(sizes: &[usize]) -> Self {
        check_sizes(sizes);
        let weights = sizes.windows(2).map(|w| vec![T::zero(); w[0] * w[1]]).collect();
        let biases = sizes[1..].iter().map(|&o| vec![T::zero(); o]).collect();
        Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// He-style uniform initialization: weights in `±sqrt(6 / fan_in)`,
    /// biases zero.
    pub fn he_uniform<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for (l, w) in net.weights.iter_mut().enumerate() {
            let limit = (6.0 / sizes[l] as f64).sqrt();
            for x in w.iter_mut() {
                *x = T::lit(rng.random_range(-limit..limit));
            }
        }
        net
    }

    /// Builds a network from per-layer row-major `[out][in]` weight arrays.
    pub fn from_row_major(sizes: &[usize], weights: Vec<Vec<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        let layers = sizes.len() - 1;
        if weights.len() != layers {
            return Err(Error::ShapeMismatch {
                expected: layers,
                got: weights.len(),
            });
        }
        if biases.len() != layers {
            return Err(Error::ShapeMismatch {
                expected: layers,
                got: biases.len(),
            });
        }
        let mut net = Self::zeros(sizes);
        for l in 0..layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            if weights[l].len() != n_in * n_out {
                return Err(Error::ShapeMismatch {
                    expected: n_in * n_out,
                    got: weights[l].len(),
                });
            }
            if biases[l].len() != n_out {
                return Err(Error::ShapeMismatch {
                    expected: n_out,
                    got: biases[l].len(),
                });
            }
            for o in 0..n_out {
                for i in 0..n_in {
                    net.weights[l][i * n_out + o] = weights[l][o * n_in + i];
                }
            }
            net.biases[l].copy_from_slice(&biases[l]);
        }
        Ok(net)
    }

    /// Per-layer weights as row-major `[out][in]` arrays.
    pub fn to_row_major(&self) -> Vec<Vec<T>> {
        (0..self.n_layers())
            .map(|l| {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let mut rm = vec![T::zero(); n_in * n_out];
                for o in 0..n_out {
                    for i in 0..n_in {
                        rm[o * n_in + i] = self.weights[l][i * n_out + o];
                    }
                }
                rm
            })
            .collect()
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.weights.iter().chain(&self.biases).flatten()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).flatten()
    }

    /// Parameter storage as contiguous blocks, weights first.
    pub(crate) fn blocks_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).map(Vec::as_mut_slice)
    }

    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            weights: self.weights.iter().map(|w| vec![T::zero(); w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
        }
    }

    pub fn activations(&self) -> Activations<T> {
        Activations {
            layers: self.sizes[1..].iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    /// Q-values for one state.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut acts = self.activations();
        self.forward_into(x, &mut acts);
        Ok(acts.layers.pop().unwrap_or_default())
    }

    /// Forward pass keeping every layer's output. Panics on a length mismatch.
    pub fn forward_into(&self, x: &[T], acts: &mut Activations<T>) {
        assert_eq!(x.len(), self.input_dim());
        let last = self.n_layers() - 1;
        for l in 0..=last {
            let n_out = self.sizes[l + 1];
            let (prev, rest) = acts.layers.split_at_mut(l);
            let input: &[T] = if l == 0 { x } else { &prev[l - 1] };
            let out = &mut rest[0];
            out.copy_from_slice(&self.biases[l]);
            for (i, &xi) in input.iter().enumerate() {
                if xi != T::zero() {
                    axpy(xi, &self.weights[l][i * n_out..(i + 1) * n_out], out);
                }
            }
            if l != last {
                for v in out.iter_mut() {
                    if *v < T::zero() {
                        *v = T::zero();
                    }
                }
            }
        }
    }

    /// Adds the parameter gradient of `dot(d_output, f(x))` to `grads`,
    /// given `acts` from `forward_into(x)`.
    pub fn backward_into(
        &self,
        x: &[T],
        acts: &Activations<T>,
        d_output: &[T],
        grads: &mut Gradients<T>,
        scratch: &mut BackpropScratch<T>,
    ) {
        let max = *self.sizes.iter().max().expect("non-empty sizes");
        scratch.delta.resize(max, T::zero());
        scratch.next.resize(max, T::zero());
        let n_last = self.output_dim();
        scratch.delta[..n_last].copy_from_slice(d_output);
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input: &[T] = if l == 0 { x } else { &acts.layers[l - 1] };
            let delta = &scratch.delta[..n_out];
            axpy(T::one(), delta, &mut grads.biases[l]);
            let gw = &mut grads.weights[l];
            for (i, &xi) in input.iter().enumerate() {
                if xi != T::zero() {
                    axpy(xi, delta, &mut gw[i * n_out..(i + 1) * n_out]);
                }
            }
            if l > 0 {
                let rows = self.weights[l].chunks_exact(n_out);
                for ((next, &xi), row) in scratch.next[..n_in].iter_mut().zip(input).zip(rows) {
                    // ReLU derivative: outputs are post-activation
                    *next = if xi > T::zero() { dot(row, delta) } else { T::zero() };
                }
                std::mem::swap(&mut scratch.delta, &mut scratch.next);
            }
        }
    }

    pub fn copy_from(&mut self, other: &Self) {
        assert_eq!(self.sizes, other.sizes);
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.copy_from_slice(b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.copy_from_slice(b);
        }
    }

    /// Converts every parameter to another float type.
    pub fn cast<U: Scalar>(&self) -> QNetwork<U> {
        let conv = |v: &Vec<Vec<T>>| -> Vec<Vec<U>> {
            v.iter().map(|l| l.iter().map(|x| U::lit(x.to_f64_lossy())).collect()).collect()
        };
        QNetwork {
            sizes: self.sizes.clone(),
            weights: conv(&self.weights),
            biases: conv(&self.biases),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct BackpropScratch<T> {
    delta: Vec<T>,
    next: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn fill_zero(&mut self) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.fill(T::zero());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.weights.iter().chain(&self.biases).flatten()
    }

    /// Same block order as [`QNetwork::blocks_mut`].
    pub(crate) fn blocks(&self) -> impl Iterator<Item = &[T]> {
        self.weights.iter().chain(&self.biases).map(Vec::as_slice)
    }

    pub(crate) fn blocks_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).map(Vec::as_mut_slice)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).flatten()
    }

    pub fn l2_norm(&self) -> T {
        self.blocks().map(|b| dot(b, b)).sum::<T>().sqrt()
    }

    pub fn scale(&mut self, k: T) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|g| *g *= k);
        }
    }
}

/// Squared TD error averaged over a batch, and its gradient.
///
/// `loss = mean_b (Q(s_b)[a_b] - y_b)^2`; the gradient is added to `grads`.
pub fn td_loss_and_grad<T: Scalar>(
    net: &QNetwork<T>,
    states: &[&[T]],
    actions: &[usize],
    targets: &[T],
    grads: &mut Gradients<T>,
    acts: &mut Activations<T>,
    scratch: &mut BackpropScratch<T>,
) -> T {
    let n = states.len();
    assert!(n > 0 && actions.len() == n && targets.len() == n);
    let scale = T::lit(2.0) / T::lit(n as f64);
    let mut d_out = vec![T::zero(); net.output_dim()];
    let mut loss = T::zero();
    for b in 0..n {
        net.forward_into(states[b], acts);
        let err = acts.output()[actions[b]] - targets[b];
        loss += err * err;
        d_out.fill(T::zero());
        d_out[actions[b]] = scale * err;
        net.backward_into(states[b], acts, &d_out, grads, scratch);
    }
    loss / T::lit(n as f64)
}
