//! Fully connected pose regressor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::Scalar;

/// Width of the pose head: 3 position components and 4 quaternion components.
pub const POSE_OUTPUT_DIM: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }

    #[inline]
    fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.relu(),
        }
    }
}

/// Layer widths from input to output. Hidden layers use `activation`; the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    widths: Vec<usize>,
    activation: Activation,
}

/// Placement of one layer inside the flat parameter vector. Weights are
/// stored row-major as `[fan_out][fan_in]`, followed by `fan_out` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerLayout {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub biases: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    values: Vec<f64>,
    layout: Vec<LayerLayout>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self, Error> {
        if widths.len() < 2 {
            return Err(Error::InvalidConfig("an MLP needs at least input and output widths".into()));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        if *widths.last().unwrap() != POSE_OUTPUT_DIM {
            return Err(Error::InvalidConfig(format!(
                "output width must be {POSE_OUTPUT_DIM} (position + quaternion)"
            )));
        }
        Ok(Self { widths, activation })
    }

    /// Four linear layers, about a thousand parameters for seven inputs.
    pub fn default_for_input(input_dim: usize) -> Self {
        Self::new(vec![input_dim, 20, 20, 16, POSE_OUTPUT_DIM], Activation::Tanh)
            .expect("static widths are valid")
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn layout(&self) -> Vec<LayerLayout> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let l = LayerLayout {
                    fan_in: w[0],
                    fan_out: w[1],
                    weights: offset,
                    biases: offset + w[0] * w[1],
                };
                offset += w[0] * w[1] + w[1];
                l
            })
            .collect()
    }

    pub fn zeros(&self) -> Parameters {
        Parameters { values: vec![0.0; self.param_count()], layout: self.layout() }
    }

    /// Uniform weights in `±sqrt(6 / fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Parameters {
        let mut p = self.zeros();
        for l in p.layout.clone() {
            let bound = (6.0 / l.fan_in as f64).sqrt();
            for w in &mut p.values[l.weights..l.biases] {
                *w = rng.random_range(-bound..bound);
            }
        }
        p
    }

    pub fn parameters(&self, values: Vec<f64>) -> Result<Parameters, Error> {
        if values.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.param_count(),
                got: values.len(),
            });
        }
        Ok(Parameters { values, layout: self.layout() })
    }

    /// Forward pass over any scalar type. `theta` must follow [`Self::layout`].
    pub fn forward<S: Scalar>(&self, theta: &[S], x: &[S]) -> Result<Vec<S>, Error> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "sensor vector",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if theta.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.param_count(),
                got: theta.len(),
            });
        }
        let layers = self.layout();
        let last = layers.len() - 1;
        let mut act: Vec<S> = x.to_vec();
        for (li, l) in layers.iter().enumerate() {
            let mut next = Vec::with_capacity(l.fan_out);
            for o in 0..l.fan_out {
                let row = &theta[l.weights + o * l.fan_in..l.weights + (o + 1) * l.fan_in];
                let z = S::affine(theta[l.biases + o], row, &act);
                next.push(if li == last { z } else { self.activation.apply(z) });
            }
            act = next;
        }
        Ok(act)
    }
}

impl Parameters {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &[LayerLayout] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count_formula() {
        let spec = MlpSpec::new(vec![7, 20, 20, 16, 7], Activation::Tanh).unwrap();
        assert_eq!(spec.param_count(), 7 * 20 + 20 + 20 * 20 + 20 + 20 * 16 + 16 + 16 * 7 + 7);
        assert_eq!(spec.param_count(), 1035);
        let layout = spec.layout();
        assert_eq!(layout.last().unwrap().biases + 7, spec.param_count());
    }

    #[test]
    fn rejects_bad_specs_and_inputs() {
        assert!(MlpSpec::new(vec![7], Activation::Tanh).is_err());
        assert!(MlpSpec::new(vec![7, 0, 7], Activation::Tanh).is_err());
        assert!(MlpSpec::new(vec![7, 5, 6], Activation::Tanh).is_err());
        let spec = MlpSpec::new(vec![3, 7], Activation::Relu).unwrap();
        let p = spec.zeros();
        assert!(matches!(
            spec.forward(p.values(), &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let spec = MlpSpec::default_for_input(7);
        let p = spec.zeros();
        let out = spec.forward(p.values(), &[0.3, -1.0, 2.0, 0.0, 5.0, 1.0, -0.5]).unwrap();
        assert_eq!(out, vec![0.0; 7]);
    }

    #[test]
    fn single_linear_layer_passes_input_through() {
        let spec = MlpSpec::new(vec![7, 7], Activation::Tanh).unwrap();
        let mut p = spec.zeros();
        for i in 0..7 {
            p.values_mut()[i * 7 + i] = 1.0;
        }
        let x = [0.1, 0.2, -0.3, 0.4, 5.0, -6.0, 7.0];
        assert_eq!(spec.forward(p.values(), &x).unwrap(), x.to_vec());
    }

    #[test]
    fn graph_forward_equals_plain_forward() {
        let spec = MlpSpec::new(vec![7, 16, 8, 7], Activation::Tanh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = spec.init(&mut rng);
        let x: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let plain = spec.forward(p.values(), &x).unwrap();
        let tape = Tape::new();
        let theta = tape.vars(p.values());
        let xs = tape.vars(&x);
        let graph: Vec<f64> = spec.forward(&theta, &xs).unwrap().iter().map(|v| v.value()).collect();
        assert_eq!(plain, graph);
    }
}
