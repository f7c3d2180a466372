//! Fixed null densities with exact samplers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::special::{normal_cdf, normal_pdf, normal_quantile};
use crate::stream::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NullDensity {
    /// Uniform on `[0, 1]`.
    Uniform01,
    Gaussian { mean: f64, sd: f64 },
    /// Unit-rate exponential on `[0, inf)`.
    Exponential,
}

impl NullDensity {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(invalid(format!("invalid Gaussian parameters ({mean}, {sd})")));
        }
        Ok(NullDensity::Gaussian { mean, sd })
    }

    pub fn standard_gaussian() -> Self {
        NullDensity::Gaussian { mean: 0.0, sd: 1.0 }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            NullDensity::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            NullDensity::Gaussian { mean, sd } => normal_pdf((x - mean) / sd) / sd,
            NullDensity::Exponential => {
                if x >= 0.0 {
                    (-x).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NullDensity::Uniform01 => x.clamp(0.0, 1.0),
            NullDensity::Gaussian { mean, sd } => normal_cdf((x - mean) / sd),
            NullDensity::Exponential => {
                if x > 0.0 {
                    -(-x).exp_m1()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(invalid(format!("quantile level {u} outside (0, 1)")));
        }
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        match *self {
            NullDensity::Uniform01 => u,
            NullDensity::Gaussian { mean, sd } => mean + sd * normal_quantile(u),
            NullDensity::Exponential => -(-u).ln_1p(),
        }
    }

    /// `||f0||_2^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        match *self {
            NullDensity::Uniform01 => 1.0,
            NullDensity::Gaussian { sd, .. } => 1.0 / (2.0 * sd * PI.sqrt()),
            NullDensity::Exponential => 0.5,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            NullDensity::Uniform01 => (0.0, 1.0),
            NullDensity::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            NullDensity::Exponential => (0.0, f64::INFINITY),
        }
    }

    /// Finite upper end of the support, if any. Piecewise-constant bins clamp
    /// observations sitting exactly on it.
    pub fn upper_edge(&self) -> Option<f64> {
        let (_, hi) = self.support();
        hi.is_finite().then_some(hi)
    }

    /// `n` i.i.d. draws by inverse transform, one stream value per draw.
    pub fn sample(&self, n: usize, stream: &mut RandomStream) -> Vec<f64> {
        (0..n).map(|_| self.draw(stream)).collect()
    }

    pub fn draw(&self, stream: &mut RandomStream) -> f64 {
        match self {
            NullDensity::Uniform01 => stream.uniform(),
            NullDensity::Exponential => -stream.open_uniform().ln(),
            gaussian => gaussian.quantile_unchecked(stream.open_uniform()),
        }
    }

    /// `X_i -> F0(X_i)`.
    pub fn transform_to_uniform(&self, sample: &[f64]) -> Vec<f64> {
        sample.iter().map(|&x| self.cdf(x)).collect()
    }

    pub fn label(&self) -> String {
        match self {
            NullDensity::Uniform01 => "uniform".to_string(),
            NullDensity::Gaussian { mean, sd } => format!("normal:{mean},{sd}"),
            NullDensity::Exponential => "exponential".to_string(),
        }
    }
}

impl std::str::FromStr for NullDensity {
    type Err = crate::error::GofError;

    /// `uniform`, `exponential`, or `normal:MEAN,SD`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" | "uniform01" => Ok(NullDensity::Uniform01),
            "exponential" | "exp" => Ok(NullDensity::Exponential),
            other => {
                let params = other
                    .strip_prefix("normal:")
                    .ok_or_else(|| invalid(format!("unknown null density `{other}`")))?;
                let parts: Vec<f64> = params
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| invalid(format!("bad normal parameters `{params}`: {e}")))?;
                match parts.as_slice() {
                    [mean, sd] => NullDensity::gaussian(*mean, *sd),
                    _ => Err(invalid("normal null needs MEAN,SD")),
                }
            }
        }
    }
}
