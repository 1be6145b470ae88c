//! Random two-variable polynomials, sampled regression datasets, and the
//! exact polynomial network constructor.
//!
//! A polynomial of degree d has one term per monomial x^a y^b with
//! a + b <= d, i.e. (d+1)(d+2)/2 terms. The constructor builds a network
//! computing the polynomial exactly: a dense layer that copies each
//! variable into a per-term window (padding with constant 1), a windowed
//! product that evaluates every monomial, and a dense output layer whose
//! weights are the coefficients.

use crate::data::RegressionDataset;
use crate::error::{Error, Result};
use crate::layers::{DenseLayer, Layer, LayerKind, Network, NetworkSpec, WindowConfig};
use crate::rng::Rng;
use crate::tensor::{Shape, Tensor};

/// One monomial: coefficient * x^x_power * y^y_power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub x_power: usize,
    pub y_power: usize,
    pub coefficient: f64,
}

/// Two-variable polynomial with one term per monomial of total degree <= d.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub degree: usize,
    pub terms: Vec<Term>,
}

impl Polynomial {
    /// Number of monomials of total degree <= d in two variables.
    pub fn term_count(degree: usize) -> usize {
        (degree + 1) * (degree + 2) / 2
    }

    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * x.powi(t.x_power as i32) * y.powi(t.y_power as i32))
            .sum()
    }
}

/// Random polynomial of exactly the given degree structure: every monomial
/// with a + b <= d, coefficients uniform in [-1, 1).
///
/// Terms are enumerated by ascending total degree, and within one total
/// degree by descending x power: 1, x, y, x^2, xy, y^2, ...
pub fn generate_polynomial(degree: usize, rng: &mut Rng) -> Result<Polynomial> {
    if !(1..=10).contains(&degree) {
        return Err(Error::Argument(format!(
            "polynomial degree must be in 1..=10, got {degree}"
        )));
    }
    let mut terms = Vec::with_capacity(Polynomial::term_count(degree));
    for total in 0..=degree {
        for x_power in (0..=total).rev() {
            terms.push(Term {
                x_power,
                y_power: total - x_power,
                coefficient: rng.range(-1.0, 1.0),
            });
        }
    }
    Ok(Polynomial { degree, terms })
}

/// `n` samples with (x, y) uniform in [-1, 1) and the polynomial value as
/// the target.
pub fn sample_polynomial(p: &Polynomial, n: usize, rng: &mut Rng) -> Result<RegressionDataset> {
    if n == 0 {
        return Err(Error::Argument("sample count must be positive".to_string()));
    }
    let mut features = Vec::with_capacity(n * 2);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.range(-1.0, 1.0);
        let y = rng.range(-1.0, 1.0);
        features.push(x);
        features.push(y);
        targets.push(p.evaluate(x, y));
    }
    RegressionDataset::new(Tensor::matrix(n, 2, features)?, Tensor::vector(targets))
}

/// Build a three-layer network that evaluates `p` exactly.
///
/// Layer 1 is dense `[2 -> w*K]` where w is the max total degree and K the
/// term count: the block for term x^a y^b copies x into its first a slots,
/// y into the next b, and fills the remaining w-a-b slots with constant 1
/// (zero weights, bias 1). Layer 2 is a windowed product with window w and
/// stride w, turning each block into its monomial. Layer 3 is dense
/// `[K -> 1]` with the coefficients as weights and zero bias.
pub fn build_exact_network(p: &Polynomial) -> Result<Network> {
    if p.degree < 1 {
        return Err(Error::Argument(
            "exact network needs degree >= 1".to_string(),
        ));
    }
    let w = p.degree;
    let k = p.terms.len();

    let mut copy_weights = vec![0.0; (w * k) * 2];
    let mut copy_biases = vec![0.0; w * k];
    for (term_index, term) in p.terms.iter().enumerate() {
        let base = term_index * w;
        for slot in 0..w {
            if slot < term.x_power {
                copy_weights[(base + slot) * 2] = 1.0; // copy x
            } else if slot < term.x_power + term.y_power {
                copy_weights[(base + slot) * 2 + 1] = 1.0; // copy y
            } else {
                copy_biases[base + slot] = 1.0; // constant 1 filler
            }
        }
    }

    let coefficients: Vec<f64> = p.terms.iter().map(|t| t.coefficient).collect();

    let spec = NetworkSpec::new(
        2,
        vec![
            LayerKind::Dense { width: w * k },
            LayerKind::Window(WindowConfig::product(w, w)),
            LayerKind::Dense { width: 1 },
        ],
    );
    let layers = vec![
        Layer::Dense(DenseLayer::new(
            Tensor::matrix(w * k, 2, copy_weights)?,
            Tensor::vector(copy_biases),
        )?),
        Layer::Window(WindowConfig::product(w, w)),
        Layer::Dense(DenseLayer::new(
            Tensor::matrix(1, k, coefficients)?,
            Tensor::zeros(Shape::Vector(1)),
        )?),
    ];
    Network::from_layers(spec, layers)
}
