//! The classifier and the label discriminator as plain feedforward networks.
//!
//! Both networks share one representation, [`MlpParams`]: ReLU hidden layers
//! and a sigmoid output layer. The classifier maps `d` features to `l`
//! per-label probabilities; the discriminator maps an `l`-dimensional label
//! vector (binary ground truth or predicted probabilities) to one score.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::layer::{dense_backward, dense_forward, Activation, LayerCache};
use crate::matrix::Matrix;

const CHECKPOINT_MAGIC: &str = "advsemi-mlp 1";

/// Something that can be turned into a stack of dense layer widths.
pub trait Architecture {
    /// Input width first, output width last.
    fn layer_dims(&self) -> Vec<usize>;
    fn validate(&self) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifierSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub num_labels: usize,
}

impl ClassifierSpec {
    pub fn new(input_dim: usize, num_labels: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: vec![64, 64],
            num_labels,
        }
    }
}

impl Architecture for ClassifierSpec {
    fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.num_labels);
        dims
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("classifier.input_dim", "must be >= 1"));
        }
        if self.num_labels == 0 {
            return Err(Error::config("classifier.num_labels", "must be >= 1"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::config("classifier.hidden_dims", "widths must be >= 1"));
        }
        Ok(())
    }
}

/// Three dense layers: `l -> hidden -> hidden -> 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscriminatorSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl DiscriminatorSpec {
    pub fn new(num_labels: usize) -> Self {
        Self {
            input_dim: num_labels,
            hidden_dim: 32,
        }
    }
}

impl Architecture for DiscriminatorSpec {
    fn layer_dims(&self) -> Vec<usize> {
        vec![self.input_dim, self.hidden_dim, self.hidden_dim, 1]
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("discriminator.input_dim", "must be >= 1"));
        }
        if self.hidden_dim == 0 {
            return Err(Error::config("discriminator.hidden_dim", "must be >= 1"));
        }
        Ok(())
    }
}

/// Weights and biases of a feedforward network, layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

/// Forward state of every layer, consumed by [`MlpParams::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub caches: Vec<LayerCache>,
}

impl MlpParams {
    /// All-zero parameters for the given widths.
    pub fn zeros(layer_dims: &[usize]) -> Self {
        let weights = layer_dims
            .windows(2)
            .map(|w| Matrix::zeros(w[0], w[1]))
            .collect();
        let biases = layer_dims[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Sigmoid,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("at least one layer")
    }

    pub fn num_params(&self) -> usize {
        self.layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Parameters flattened as `[w0, b0, w1, b1, ...]`, weights row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    /// Inverse of [`MlpParams::to_flat`].
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dim("set_flat", (flat.len(), 1), (self.num_params(), 1)));
        }
        let mut off = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.data().len();
            w.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
            let k = b.len();
            b.copy_from_slice(&flat[off..off + k]);
            off += k;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_traced(x)?.0)
    }

    pub fn forward_traced(&self, x: &Matrix) -> Result<(Matrix, ForwardTrace)> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim("mlp forward", x.shape(), (x.rows(), self.input_dim())));
        }
        let mut caches = Vec::with_capacity(self.num_layers());
        let mut h = x.clone();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (out, cache) = dense_forward(&h, w, b, self.activation_of(i))?;
            caches.push(cache);
            h = out;
        }
        Ok((h, ForwardTrace { caches }))
    }

    /// Backpropagates `grad_out` (gradient of a scalar loss with respect to
    /// the network output). Returns the flat parameter gradient in
    /// [`MlpParams::to_flat`] order and the gradient with respect to the input.
    pub fn backward(&self, trace: &ForwardTrace, grad_out: &Matrix) -> Result<(Vec<f64>, Matrix)> {
        let n = self.num_layers();
        if trace.caches.len() != n {
            return Err(Error::dim("mlp backward", (trace.caches.len(), 1), (n, 1)));
        }
        let mut per_layer = Vec::with_capacity(n);
        let mut g = grad_out.clone();
        for i in (0..n).rev() {
            let lg = dense_backward(&trace.caches[i], &self.weights[i], &g)?;
            g = lg.grad_input;
            per_layer.push((lg.grad_weights, lg.grad_bias));
        }
        let mut flat = Vec::with_capacity(self.num_params());
        for (gw, gb) in per_layer.into_iter().rev() {
            flat.extend(gw.into_data());
            flat.extend(gb);
        }
        Ok((flat, g))
    }

    /// Writes the self-describing text checkpoint.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_checkpoint_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_checkpoint_str(&text, path)
    }

    pub fn to_checkpoint_string(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let dims: Vec<String> = self.layer_dims.iter().map(usize::to_string).collect();
        writeln!(s, "{CHECKPOINT_MAGIC}").unwrap();
        writeln!(s, "layer_dims {}", dims.join(" ")).unwrap();
        writeln!(s, "hidden_activation {}", self.hidden_activation.name()).unwrap();
        writeln!(s, "output_activation {}", self.output_activation.name()).unwrap();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            writeln!(s, "weights {i} {} {}", w.rows(), w.cols()).unwrap();
            for row in w.row_iter() {
                writeln!(s, "{}", join(row)).unwrap();
            }
            writeln!(s, "bias {i} {}", b.len()).unwrap();
            writeln!(s, "{}", join(b)).unwrap();
        }
        s
    }

    pub fn from_checkpoint_str(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(path, 0, format!("unexpected end of file, expected {what}")))
        };
        let (ln, magic) = next("header")?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::parse(path, ln, format!("bad header `{magic}`")));
        }
        let (ln, dims_line) = next("layer_dims")?;
        let dims: Vec<usize> = keyed(dims_line, "layer_dims", path, ln)?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(path, ln, format!("bad width `{t}`"))))
            .collect::<Result<_>>()?;
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::parse(path, ln, "need at least two positive widths"));
        }
        let mut params = MlpParams::zeros(&dims);
        for key in ["hidden_activation", "output_activation"] {
            let (ln, line) = next(key)?;
            let name = keyed(line, key, path, ln)?;
            let act = Activation::from_name(name.trim())
                .ok_or_else(|| Error::parse(path, ln, format!("unknown activation `{name}`")))?;
            if key == "hidden_activation" {
                params.hidden_activation = act;
            } else {
                params.output_activation = act;
            }
        }
        for i in 0..params.num_layers() {
            let (fi, fo) = (dims[i], dims[i + 1]);
            let (ln, header) = next("weights header")?;
            if header != format!("weights {i} {fi} {fo}") {
                return Err(Error::parse(path, ln, format!("expected `weights {i} {fi} {fo}`")));
            }
            for r in 0..fi {
                let (ln, line) = next("weight row")?;
                let row = parse_floats(line, fo, path, ln)?;
                params.weights[i].row_mut(r).copy_from_slice(&row);
            }
            let (ln, header) = next("bias header")?;
            if header != format!("bias {i} {fo}") {
                return Err(Error::parse(path, ln, format!("expected `bias {i} {fo}`")));
            }
            let (ln, line) = next("bias row")?;
            params.biases[i] = parse_floats(line, fo, path, ln)?;
        }
        Ok(params)
    }
}

fn keyed<'a>(line: &'a str, key: &str, path: &Path, ln: usize) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::parse(path, ln, format!("expected `{key} ...`")))
}

fn parse_floats(line: &str, expected: usize, path: &Path, ln: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(path, ln, format!("bad value `{t}`"))),
        })
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(Error::parse(
            path,
            ln,
            format!("expected {expected} values, found {}", vals.len()),
        ));
    }
    Ok(vals)
}

/// Zero-mean Gaussian initialization: variance `2 / fan_in` for ReLU layers,
/// `2 / (fan_in + fan_out)` for the sigmoid output layer, zero biases.
pub fn init_params<A: Architecture>(spec: &A, seed: u64) -> Result<MlpParams> {
    spec.validate()?;
    let dims = spec.layer_dims();
    let mut params = MlpParams::zeros(&dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = params.num_layers() - 1;
    for (i, w) in params.weights.iter_mut().enumerate() {
        let (fan_in, fan_out) = (dims[i] as f64, dims[i + 1] as f64);
        let var = if i == last {
            2.0 / (fan_in + fan_out)
        } else {
            2.0 / fan_in
        };
        let normal = Normal::new(0.0, var.sqrt()).expect("positive std");
        for v in w.data_mut() {
            *v = normal.sample(&mut rng);
        }
    }
    Ok(params)
}

/// Per-label probabilities for each row of `x`.
pub fn classifier_forward(params: &MlpParams, x: &Matrix) -> Result<Matrix> {
    params.forward(x)
}

/// Discriminator score for each row of `y`. Rows must lie in `[0, 1]^l`.
pub fn discriminator_forward(params: &MlpParams, y: &Matrix) -> Result<Vec<f64>> {
    check_label_domain(y)?;
    Ok(params.forward(y)?.into_data())
}

pub(crate) fn check_label_domain(y: &Matrix) -> Result<()> {
    match y.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(Error::Domain(format!("discriminator input {v} outside [0, 1]"))),
        None => Ok(()),
    }
}
