//! Dense layers and their parameterization.

use super::graph::{Graph, NodeId};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Identity,
}

/// Negative-side slope used by every leaky ReLU in the crate.
pub const LEAKY_RELU_SLOPE: f64 = 0.02;

/// Shape of a fully connected stack: one output width and one activation
/// per layer. The input width is supplied when parameters are created.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if layer_widths.is_empty() {
            return Err(Error::config("an MLP needs at least one layer"));
        }
        if layer_widths.len() != activations.len() {
            return Err(Error::config(format!(
                "{} layer widths but {} activations",
                layer_widths.len(),
                activations.len()
            )));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::config("layer widths must be positive"));
        }
        Ok(MlpSpec {
            layer_widths,
            activations,
        })
    }

    /// Hidden stack of `hidden` copies of `width` (ReLU) plus a linear head.
    pub fn relu_stack(hidden: &[usize], out: usize) -> Self {
        let mut widths: Vec<usize> = hidden.to_vec();
        let mut acts = vec![Activation::Relu; hidden.len()];
        widths.push(out);
        acts.push(Activation::Identity);
        MlpSpec {
            layer_widths: widths,
            activations: acts,
        }
    }

    /// Leaky-ReLU stack used by the density-ratio discriminator.
    pub fn leaky_stack(hidden: &[usize], out: usize) -> Self {
        let mut widths: Vec<usize> = hidden.to_vec();
        let mut acts = vec![Activation::LeakyRelu; hidden.len()];
        widths.push(out);
        acts.push(Activation::Identity);
        MlpSpec {
            layer_widths: widths,
            activations: acts,
        }
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().expect("non-empty")
    }

    /// Fresh parameters: weights uniform in ±sqrt(6/(fan_in+fan_out)),
    /// biases zero. Layout: `[W0, b0, W1, b1, ...]`.
    pub fn init_params(&self, input_width: usize, rng: &mut SeededRng) -> Vec<Tensor> {
        let mut params = Vec::with_capacity(2 * self.layer_widths.len());
        let mut fan_in = input_width;
        for &fan_out in &self.layer_widths {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.push(Tensor::uniform(vec![fan_in, fan_out], limit, rng));
            params.push(Tensor::zeros(vec![fan_out]));
            fan_in = fan_out;
        }
        params
    }

    fn check_params(&self, input_width: usize, params: &[Tensor]) -> Result<()> {
        if params.len() != 2 * self.layer_widths.len() {
            return Err(Error::config(format!(
                "expected {} parameter tensors, got {}",
                2 * self.layer_widths.len(),
                params.len()
            )));
        }
        let mut fan_in = input_width;
        for (l, &fan_out) in self.layer_widths.iter().enumerate() {
            let w = &params[2 * l];
            let b = &params[2 * l + 1];
            if w.shape() != [fan_in, fan_out] || b.shape() != [fan_out] {
                return Err(Error::config(format!(
                    "layer {l} parameter shapes {:?}/{:?} do not match {fan_in}->{fan_out}",
                    w.shape(),
                    b.shape()
                )));
            }
            fan_in = fan_out;
        }
        Ok(())
    }

    /// Forward pass on the tape. `input` must be `[batch, input_width]`.
    pub fn apply_graph(
        &self,
        g: &mut Graph,
        params: &[NodeId],
        input: NodeId,
    ) -> Result<NodeId> {
        let in_width = g.value(input).cols();
        let tensors: Vec<Tensor> = params.iter().map(|&p| g.value(p).clone()).collect();
        self.check_params(in_width, &tensors)?;
        let mut h = input;
        for (l, act) in self.activations.iter().enumerate() {
            let z = g.matmul(h, params[2 * l]);
            let z = g.add_row(z, params[2 * l + 1]);
            h = match act {
                Activation::Relu => g.relu(z),
                Activation::LeakyRelu => g.leaky_relu(z, LEAKY_RELU_SLOPE),
                Activation::Identity => z,
            };
        }
        Ok(h)
    }

    /// Plain forward pass without a tape, for inference.
    pub fn apply(&self, params: &[Tensor], input: &Tensor) -> Result<Tensor> {
        if input.rank() != 2 {
            return Err(Error::config(format!(
                "MLP input must be a [batch, width] matrix, got shape {:?}",
                input.shape()
            )));
        }
        self.check_params(input.cols(), params)?;
        let mut h = input.clone();
        for (l, act) in self.activations.iter().enumerate() {
            let w = &params[2 * l];
            let b = &params[2 * l + 1];
            let (m, k, n) = (h.rows(), w.rows(), w.cols());
            let mut out = vec![0.0; m * n];
            for i in 0..m {
                let hrow = h.row(i);
                let orow = &mut out[i * n..(i + 1) * n];
                orow.copy_from_slice(b.data());
                for (l2, &hv) in hrow.iter().enumerate() {
                    let wrow = &w.data()[l2 * n..(l2 + 1) * n];
                    for (o, &wv) in orow.iter_mut().zip(wrow) {
                        *o += hv * wv;
                    }
                }
            }
            debug_assert_eq!(k, h.cols());
            for v in out.iter_mut() {
                *v = match act {
                    Activation::Relu => v.max(0.0),
                    Activation::LeakyRelu => {
                        if *v > 0.0 {
                            *v
                        } else {
                            LEAKY_RELU_SLOPE * *v
                        }
                    }
                    Activation::Identity => *v,
                };
            }
            h = Tensor::new(vec![m, n], out)?;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn zero_params_zero_output() {
        let spec = MlpSpec::relu_stack(&[3], 2);
        let params = vec![
            Tensor::zeros(vec![2, 3]),
            Tensor::zeros(vec![3]),
            Tensor::zeros(vec![3, 2]),
            Tensor::zeros(vec![2]),
        ];
        let x = Tensor::matrix(1, 2, vec![1.5, -0.3]).unwrap();
        let y = spec.apply(&params, &x).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0]);
    }

    #[test]
    fn identity_weight_relu() {
        let spec = MlpSpec::new(vec![2], vec![Activation::Relu]).unwrap();
        let params = vec![
            Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Tensor::zeros(vec![2]),
        ];
        let x = Tensor::matrix(1, 2, vec![-1.0, 2.0]).unwrap();
        let y = spec.apply(&params, &x).unwrap();
        assert_eq!(y.data(), &[0.0, 2.0]);
    }

    #[test]
    fn two_layer_matches_hand_computed_product() {
        // Independent oracle: explicit matrix arithmetic on a 2-vector.
        let mut rng = seeded(11);
        let spec = MlpSpec::new(
            vec![3, 2],
            vec![Activation::Identity, Activation::Identity],
        )
        .unwrap();
        let params = spec.init_params(2, &mut rng);
        let x = [0.7, -1.2];
        let w0 = &params[0];
        let b0 = &params[1];
        let w1 = &params[2];
        let b1 = &params[3];
        let mut h = [0.0f64; 3];
        for j in 0..3 {
            h[j] = b0.data()[j] + x[0] * w0.at(0, j) + x[1] * w0.at(1, j);
        }
        let mut expect = [0.0f64; 2];
        for j in 0..2 {
            expect[j] = b1.data()[j] + h[0] * w1.at(0, j) + h[1] * w1.at(1, j) + h[2] * w1.at(2, j);
        }
        let y = spec
            .apply(&params, &Tensor::matrix(1, 2, x.to_vec()).unwrap())
            .unwrap();
        for j in 0..2 {
            assert!((y.data()[j] - expect[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn width_mismatch_is_config_error() {
        let spec = MlpSpec::relu_stack(&[3], 2);
        let mut rng = seeded(0);
        let params = spec.init_params(4, &mut rng);
        let x = Tensor::matrix(1, 3, vec![0.0; 3]).unwrap();
        assert!(spec.apply(&params, &x).is_err());
    }
}
