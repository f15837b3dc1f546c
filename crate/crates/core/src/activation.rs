use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Nonlinearities available to hidden layers, plus the two output kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Elu,
    /// Output layer of regression models.
    Identity,
    /// Output layer of classification models (logistic for two classes, softmax otherwise).
    Softmax,
}

impl Activation {
    /// The activation choices open to the search for hidden layers.
    pub const HIDDEN: [Activation; 4] = [Activation::Relu, Activation::Sigmoid, Activation::Tanh, Activation::Elu];

    pub fn is_hidden(self) -> bool {
        Self::HIDDEN.contains(&self)
    }

    /// Elementwise application. `Softmax` is not elementwise and must go through [`softmax_rows`].
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    z.exp_m1()
                }
            }
            Activation::Identity => z,
            Activation::Softmax => panic!("softmax is not an elementwise activation"),
        }
    }

    /// Derivative with respect to the pre-activation, given both `z` and `a = apply(z)`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    a + 1.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Softmax => panic!("softmax derivative is fused with cross-entropy"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Elu => "elu",
            Activation::Identity => "identity",
            Activation::Softmax => "softmax",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "elu" => Ok(Activation::Elu),
            "identity" | "linear" => Ok(Activation::Identity),
            "softmax" | "logit" => Ok(Activation::Softmax),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// In-place, numerically stable softmax over consecutive rows of width `width`.
pub fn softmax_rows(values: &mut [f64], width: usize) {
    for row in values.chunks_mut(width) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let mut v = vec![0.0, 0.0];
        softmax_rows(&mut v, 2);
        assert_eq!(v, vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_survives_large_logits() {
        let mut v = vec![1000.0, 0.0, -1000.0];
        softmax_rows(&mut v, 3);
        assert!(v.iter().all(|p| p.is_finite()));
        assert!((v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for act in Activation::HIDDEN {
            for &z in &[-1.3, -0.2, 0.4, 2.1] {
                let fd = (act.apply(z + h) - act.apply(z - h)) / (2.0 * h);
                let an = act.derivative(z, act.apply(z));
                assert!((fd - an).abs() < 1e-6, "{act} at {z}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn parses_names() {
        for act in Activation::HIDDEN {
            assert_eq!(act.name().parse::<Activation>().unwrap(), act);
        }
        assert!("swish".parse::<Activation>().is_err());
    }
}
