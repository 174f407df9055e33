use serde::{Deserialize, Serialize};

use super::{Matrix, Rng};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer; `weights` is `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }
}

/// Feedforward network with exactly two hidden layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: [Layer; 3],
    hidden_activation: Activation,
    output_activation: Activation,
}

/// Intermediates of a forward pass, consumed by [`DenseNet::backward`].
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    input: Option<Matrix>,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardCache {
    /// Pre-activation values of each layer, hidden layers first.
    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre
    }
}

/// Parameter gradients laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: [Layer; 3],
}

impl Gradients {
    /// Gradient slices in the order of [`DenseNet::parameters_mut`].
    pub fn slices(&self) -> [&[f64]; 6] {
        let [a, b, c] = &self.layers;
        [
            a.weights.as_slice(),
            &a.bias,
            b.weights.as_slice(),
            &b.bias,
            c.weights.as_slice(),
            &c.bias,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

impl DenseNet {
    /// Xavier-uniform weights and zero biases.
    pub fn new(
        input: usize,
        hidden: usize,
        output: usize,
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        Self::with_widths(
            [input, hidden, hidden, output],
            hidden_activation,
            output_activation,
            rng,
        )
    }

    pub fn with_widths(
        widths: [usize; 4],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut layer = |i: usize| -> Result<Layer> {
            Ok(Layer {
                weights: rng.xavier(widths[i], widths[i + 1])?,
                bias: vec![0.0; widths[i + 1]],
            })
        };
        let layers = [layer(0)?, layer(1)?, layer(2)?];
        Self::from_layers(layers, hidden_activation, output_activation)
    }

    pub fn from_layers(
        layers: [Layer; 3],
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.fan_out() {
                return Err(Error::shape(
                    "DenseNet layer bias",
                    layer.fan_out(),
                    layer.bias.len(),
                ));
            }
            if i > 0 && layers[i - 1].fan_out() != layer.fan_in() {
                return Err(Error::shape(
                    "DenseNet layer chain",
                    layers[i - 1].fan_out(),
                    layer.fan_in(),
                ));
            }
        }
        Ok(Self {
            layers,
            hidden_activation,
            output_activation,
        })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers[2].fan_out()
    }

    pub fn hidden_widths(&self) -> [usize; 2] {
        [self.layers[0].fan_out(), self.layers[1].fan_out()]
    }

    pub fn layers(&self) -> &[Layer; 3] {
        &self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Mutable parameter slices: `W1, b1, W2, b2, W3, b3`.
    pub fn parameters_mut(&mut self) -> [&mut [f64]; 6] {
        let [a, b, c] = &mut self.layers;
        [
            a.weights.as_mut_slice(),
            &mut a.bias,
            b.weights.as_mut_slice(),
            &mut b.bias,
            c.weights.as_mut_slice(),
            &mut c.bias,
        ]
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer == 2 {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Forward pass without keeping intermediates.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut a = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.matmul(&layer.weights)?;
            z.add_row(&layer.bias)?;
            let act = self.activation(i);
            z.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
            a = z;
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("DenseNet::predict"));
        }
        Ok(a)
    }

    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_input(input)?;
        let mut pre = Vec::with_capacity(3);
        let mut post: Vec<Matrix> = Vec::with_capacity(3);
        for (i, layer) in self.layers.iter().enumerate() {
            let prev = post.last().unwrap_or(input);
            let mut z = prev.matmul(&layer.weights)?;
            z.add_row(&layer.bias)?;
            let act = self.activation(i);
            let a = z.map(|v| act.apply(v));
            pre.push(z);
            post.push(a);
        }
        let out = post[2].clone();
        if !out.is_finite() {
            return Err(Error::NonFinite("DenseNet::forward"));
        }
        Ok((
            out,
            ForwardCache {
                input: Some(input.clone()),
                pre,
                post,
            },
        ))
    }

    /// Back-propagates `output_gradient` (dLoss/dOutput). Returns parameter
    /// gradients and dLoss/dInput.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &Matrix,
    ) -> Result<(Gradients, Matrix)> {
        let input = cache.input.as_ref().ok_or(Error::MissingCache)?;
        if cache.pre.len() != 3 || cache.post.len() != 3 {
            return Err(Error::MissingCache);
        }
        if input.cols() != self.input_width() {
            return Err(Error::shape(
                "DenseNet::backward cache",
                self.input_width(),
                input.cols(),
            ));
        }
        cache.post[2].same_shape(output_gradient, "DenseNet::backward output gradient")?;

        let mut delta = output_gradient.clone();
        let mut grads: Vec<Layer> = Vec::with_capacity(3);
        let mut input_grad = Matrix::zeros(0, 0);
        for i in (0..3).rev() {
            let act = self.activation(i);
            for ((d, &z), &a) in delta
                .as_mut_slice()
                .iter_mut()
                .zip(cache.pre[i].as_slice())
                .zip(cache.post[i].as_slice())
            {
                *d *= act.derivative(z, a);
            }
            let layer_input = if i == 0 { input } else { &cache.post[i - 1] };
            let weights = layer_input.t_matmul(&delta)?;
            let bias = delta.sum_rows();
            let upstream = delta.matmul_t(&self.layers[i].weights)?;
            grads.push(Layer { weights, bias });
            if i == 0 {
                input_grad = upstream;
            } else {
                delta = upstream;
            }
        }
        grads.reverse();
        let layers: [Layer; 3] = grads.try_into().expect("three layers");
        let gradients = Gradients { layers };
        if !gradients.is_finite() || !input_grad.is_finite() {
            return Err(Error::NonFinite("DenseNet::backward"));
        }
        Ok((gradients, input_grad))
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_width() {
            return Err(Error::shape(
                "DenseNet input width",
                self.input_width(),
                input.cols(),
            ));
        }
        Ok(())
    }
}
