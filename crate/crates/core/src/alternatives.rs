//! Alternative densities with exact samplers, addressable by catalog id.
//!
//! Ids: `f:RHO,J`, `g:P,Q,EPS`, `h:RHO,J` on `[0, 1]`; `norm:f:M`,
//! `norm:g:M,VAR`, `norm:h:P` on the line; `exp:g:P`, `exp:h:P`,
//! `exp:k:P,Q,EPS`, `exp:l:P,Q,EPS`, `exp:t`, `exp:v`, `exp:w` on the
//! half-line. Null members are `uniform`, `exponential`, `normal:MEAN,SD`,
//! and `ls:MU,SIGMA:NULL` for a location/scale transform of a null.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bases::{legendre_values, MAX_LEGENDRE_DEGREE};
use crate::error::{invalid, GofError, Result};
use crate::null_models::NullDensity;
use crate::quadrature::integrate_piecewise;
use crate::special::{ln_beta, ln_gamma, normal_pdf};
use crate::stream::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alternative {
    Null { null: NullDensity },
    /// `sigma^-1 f0((x - mu) / sigma)`.
    LocationScale { null: NullDensity, mu: f64, sigma: f64 },
    /// `1 + rho cos(j pi x)` on `[0, 1]`.
    Cosine { rho: f64, j: u32 },
    /// `1 - eps + eps Beta(p, q)` on `[0, 1]`.
    BetaMixture { p: f64, q: f64, eps: f64 },
    /// `1 + rho phi_j(x)` with orthonormal Legendre `phi_j`.
    Legendre { rho: f64, j: u32 },
    /// Uniform on `[-m, m]`.
    UniformSymmetric { m: f64 },
    /// Equal mixture of `N(m, var)` and `N(-m, var)`.
    GaussianPair { m: f64, var: f64 },
    /// `(p/2) exp(-p |x|)`.
    Laplace { p: f64 },
    /// `(exp(-x) + (1 + sin(p pi x)) 1_{(0,1)}) / 2`.
    ExpSine { p: f64 },
    /// `(exp(-x) + (1 + cos(p pi x)) 1_{(0,1)}) / 2`.
    ExpCosine { p: f64 },
    /// `(1 - eps) exp(-x) + eps Beta(p, q)`.
    ExpBeta { p: f64, q: f64, eps: f64 },
    /// `(1 - eps) exp(-x) + eps Gamma(shape p, rate q)`.
    ExpGamma { p: f64, q: f64, eps: f64 },
    /// Standard lognormal.
    LogNormal,
    /// Chi-square with three degrees of freedom.
    ChiSquare3,
    /// Weibull with shape 1.5 and unit scale.
    Weibull15,
}

/// Proposal/acceptance counts of the rejection steps in one sampling call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RejectionStats {
    pub proposals: u64,
    pub accepted: u64,
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(invalid(format!("invalid alternative parameters: {what}")))
    }
}

fn unit_indicator(x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        1.0
    } else {
        0.0
    }
}

fn beta_pdf(p: f64, q: f64, x: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return 0.0;
    }
    ((p - 1.0) * x.ln() + (q - 1.0) * (-x).ln_1p() - ln_beta(p, q)).exp()
}

fn gamma_pdf(shape: f64, rate: f64, x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)).exp()
}

fn exp_pdf(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp()
    } else {
        0.0
    }
}

fn legendre_at(j: u32, x: f64) -> f64 {
    let mut buf = [0.0; MAX_LEGENDRE_DEGREE + 1];
    legendre_values(x, j as usize, &mut buf);
    buf[j as usize]
}

/// Box-Muller, one output per pair of uniforms.
pub fn standard_normal(stream: &mut RandomStream) -> f64 {
    let r = (-2.0 * stream.open_uniform().ln()).sqrt();
    r * (2.0 * PI * stream.uniform()).cos()
}

/// Gamma(shape, 1) by Marsaglia-Tsang; shapes below one use
/// `G(a) = G(a + 1) U^(1/a)`.
pub fn standard_gamma(shape: f64, stream: &mut RandomStream) -> f64 {
    if shape < 1.0 {
        let boost = stream.open_uniform().powf(1.0 / shape);
        return standard_gamma(shape + 1.0, stream) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z = standard_normal(stream);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = stream.open_uniform();
        if u.ln() < 0.5 * z * z + d - d * v + d * v.ln() {
            return d * v;
        }
    }
}

pub fn beta_variate(p: f64, q: f64, stream: &mut RandomStream) -> f64 {
    let a = standard_gamma(p, stream);
    let b = standard_gamma(q, stream);
    a / (a + b)
}

impl Alternative {
    pub fn validate(&self) -> Result<()> {
        use Alternative::*;
        match *self {
            Null { .. } | LogNormal | ChiSquare3 | Weibull15 => Ok(()),
            LocationScale { mu, sigma, .. } => check(mu.is_finite() && sigma > 0.0 && sigma.is_finite(), "mu/sigma"),
            Cosine { rho, j } => check(j >= 1 && rho.abs() <= 1.0, "need j >= 1 and |rho| <= 1"),
            Legendre { rho, j } => check(
                j >= 1 && j as usize <= MAX_LEGENDRE_DEGREE && rho.abs() * (2.0 * j as f64 + 1.0).sqrt() <= 1.0,
                "need 1 <= j <= 20 and |rho| sqrt(2j+1) <= 1",
            ),
            BetaMixture { p, q, eps } | ExpBeta { p, q, eps } | ExpGamma { p, q, eps } => {
                check(p > 0.0 && q > 0.0 && (0.0..=1.0).contains(&eps), "need p, q > 0 and eps in [0, 1]")
            }
            UniformSymmetric { m } => check(m > 0.0 && m.is_finite(), "m > 0"),
            GaussianPair { m, var } => check(m.is_finite() && var > 0.0, "var > 0"),
            Laplace { p } => check(p > 0.0 && p.is_finite(), "p > 0"),
            ExpSine { p } => check(p > 0.0 && p.fract() == 0.0 && (p as i64) % 2 == 0, "p must be a positive even integer"),
            ExpCosine { p } => check(p > 0.0 && p.fract() == 0.0, "p must be a positive integer"),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        use Alternative::*;
        match *self {
            Null { null } => null.pdf(x),
            LocationScale { null, mu, sigma } => null.pdf((x - mu) / sigma) / sigma,
            Cosine { rho, j } => unit_indicator(x) * (1.0 + rho * (j as f64 * PI * x).cos()),
            BetaMixture { p, q, eps } => unit_indicator(x) * (1.0 - eps) + eps * beta_pdf(p, q, x),
            Legendre { rho, j } => {
                if (0.0..=1.0).contains(&x) {
                    1.0 + rho * legendre_at(j, x)
                } else {
                    0.0
                }
            }
            UniformSymmetric { m } => {
                if x.abs() <= m {
                    0.5 / m
                } else {
                    0.0
                }
            }
            GaussianPair { m, var } => {
                let s = var.sqrt();
                0.5 * (normal_pdf((x - m) / s) + normal_pdf((x + m) / s)) / s
            }
            Laplace { p } => 0.5 * p * (-p * x.abs()).exp(),
            ExpSine { p } => 0.5 * (exp_pdf(x) + open_unit(x) * (1.0 + (p * PI * x).sin())),
            ExpCosine { p } => 0.5 * (exp_pdf(x) + open_unit(x) * (1.0 + (p * PI * x).cos())),
            ExpBeta { p, q, eps } => (1.0 - eps) * exp_pdf(x) + eps * beta_pdf(p, q, x),
            ExpGamma { p, q, eps } => (1.0 - eps) * exp_pdf(x) + eps * gamma_pdf(p, q, x),
            LogNormal => {
                if x > 0.0 {
                    normal_pdf(x.ln()) / x
                } else {
                    0.0
                }
            }
            ChiSquare3 => {
                if x >= 0.0 {
                    x.sqrt() * (-x / 2.0).exp() / (2f64.powf(1.5) * ln_gamma(1.5).exp())
                } else {
                    0.0
                }
            }
            Weibull15 => {
                if x >= 0.0 {
                    1.5 * x.sqrt() * (-x.powf(1.5)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Interval outside which less than `1e-8` of the mass lies.
    pub fn effective_support(&self) -> (f64, f64) {
        use Alternative::*;
        match *self {
            Null { null } => null_support(null, 0.0, 1.0),
            LocationScale { null, mu, sigma } => null_support(null, mu, sigma),
            Cosine { .. } | BetaMixture { .. } | Legendre { .. } => (0.0, 1.0),
            UniformSymmetric { m } => (-m, m),
            GaussianPair { m, var } => {
                let w = m.abs() + 8.0 * var.sqrt();
                (-w, w)
            }
            Laplace { p } => (-20.0 / p, 20.0 / p),
            ExpSine { .. } | ExpCosine { .. } | ExpBeta { .. } => (0.0, 20.0),
            ExpGamma { p, q, .. } => (0.0, 20f64.max((p + 12.0 * p.sqrt() + 20.0) / q)),
            LogNormal => (0.0, 310.0),
            ChiSquare3 => (0.0, 60.0),
            Weibull15 => (0.0, 10.0),
        }
    }

    /// Points where the density or its derivative is discontinuous or peaked.
    pub fn breakpoints(&self) -> Vec<f64> {
        use Alternative::*;
        match *self {
            UniformSymmetric { m } => vec![-m, m],
            Laplace { .. } => vec![0.0],
            GaussianPair { m, .. } => vec![-m, m],
            ExpSine { p } | ExpCosine { p } => (0..=(p as usize)).map(|k| k as f64 / p).collect(),
            ExpBeta { .. } => vec![0.0, 1.0],
            ExpGamma { p, q, .. } => vec![0.0, ((p - 1.0) / q).max(0.0), 2.0 * p / q],
            LogNormal => vec![(-1f64).exp(), 1.0, 10.0],
            Cosine { j, .. } => (0..=j).map(|k| k as f64 / j as f64).collect(),
            _ => Vec::new(),
        }
    }

    pub fn draw(&self, stream: &mut RandomStream, stats: &mut RejectionStats) -> f64 {
        use Alternative::*;
        match *self {
            Null { null } => null.draw(stream),
            LocationScale { null, mu, sigma } => mu + sigma * null.draw(stream),
            Cosine { rho, j } => reject_on_unit(stream, stats, 1.0 + rho.abs(), |x| 1.0 + rho * (j as f64 * PI * x).cos()),
            BetaMixture { p, q, eps } => {
                if stream.uniform() < eps {
                    beta_variate(p, q, stream)
                } else {
                    stream.uniform()
                }
            }
            Legendre { rho, j } => {
                let envelope = 1.0 + rho.abs() * (2.0 * j as f64 + 1.0).sqrt();
                reject_on_unit(stream, stats, envelope, |x| 1.0 + rho * legendre_at(j, x))
            }
            UniformSymmetric { m } => m * (2.0 * stream.uniform() - 1.0),
            GaussianPair { m, var } => {
                let sign = if stream.uniform() < 0.5 { -1.0 } else { 1.0 };
                sign * m + var.sqrt() * standard_normal(stream)
            }
            Laplace { p } => {
                let e = -stream.open_uniform().ln() / p;
                if stream.uniform() < 0.5 {
                    -e
                } else {
                    e
                }
            }
            ExpSine { p } => exp_or_unit(stream, stats, |x| 1.0 + (p * PI * x).sin()),
            ExpCosine { p } => exp_or_unit(stream, stats, |x| 1.0 + (p * PI * x).cos()),
            ExpBeta { p, q, eps } => {
                if stream.uniform() < eps {
                    beta_variate(p, q, stream)
                } else {
                    -stream.open_uniform().ln()
                }
            }
            ExpGamma { p, q, eps } => {
                if stream.uniform() < eps {
                    standard_gamma(p, stream) / q
                } else {
                    -stream.open_uniform().ln()
                }
            }
            LogNormal => standard_normal(stream).exp(),
            ChiSquare3 => 2.0 * standard_gamma(1.5, stream),
            Weibull15 => (-stream.open_uniform().ln()).powf(1.0 / 1.5),
        }
    }

    pub fn sample(&self, n: usize, stream: &mut RandomStream) -> Vec<f64> {
        self.sample_with_stats(n, stream).0
    }

    pub fn sample_with_stats(&self, n: usize, stream: &mut RandomStream) -> (Vec<f64>, RejectionStats) {
        let mut stats = RejectionStats::default();
        let x = (0..n).map(|_| self.draw(stream, &mut stats)).collect();
        (x, stats)
    }

    /// Expected acceptance rate of the rejection step, if the sampler has one.
    pub fn acceptance_rate(&self) -> Option<f64> {
        match *self {
            Alternative::Cosine { rho, .. } => Some(1.0 / (1.0 + rho.abs())),
            Alternative::Legendre { rho, j } => Some(1.0 / (1.0 + rho.abs() * (2.0 * j as f64 + 1.0).sqrt())),
            Alternative::ExpSine { .. } | Alternative::ExpCosine { .. } => Some(0.5),
            _ => None,
        }
    }

    fn quadrature_breaks(&self) -> Vec<f64> {
        let (lo, hi) = self.effective_support();
        let mut b = self.breakpoints();
        b.retain(|&x| x > lo && x < hi);
        b
    }

    /// `int f` over the effective support.
    pub fn total_mass(&self) -> f64 {
        let (lo, hi) = self.effective_support();
        integrate_piecewise(|x| self.pdf(x), lo, hi, &self.quadrature_breaks(), 1e-10)
    }

    /// Numeric cdf on an ascending list of points.
    pub fn cdf_at_sorted(&self, points: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.effective_support();
        let breaks = self.quadrature_breaks();
        let mut out = Vec::with_capacity(points.len());
        let mut prev = lo;
        let mut acc = 0.0;
        for &t in points {
            let t = t.clamp(lo, hi);
            if t > prev {
                let inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > prev && b < t).collect();
                acc += integrate_piecewise(|x| self.pdf(x), prev, t, &inner, 1e-12);
                prev = t;
            }
            out.push(acc.min(1.0));
        }
        out
    }

    /// `||f - f0||_2^2` by adaptive quadrature over the union of supports.
    pub fn l2_distance_sq(&self, d: &NullDensity) -> f64 {
        let (a_lo, a_hi) = self.effective_support();
        let (n_lo, n_hi) = null_support(*d, 0.0, 1.0);
        let (lo, hi) = (a_lo.min(n_lo), a_hi.max(n_hi));
        let mut breaks = self.breakpoints();
        breaks.extend([a_lo, a_hi, n_lo, n_hi]);
        if matches!(d, NullDensity::Uniform01 | NullDensity::Exponential) {
            breaks.push(0.0);
        }
        if matches!(d, NullDensity::Uniform01) {
            breaks.push(1.0);
        }
        breaks.retain(|&x| x > lo && x < hi);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        integrate_piecewise(
            |x| {
                let diff = self.pdf(x) - d.pdf(x);
                diff * diff
            },
            lo,
            hi,
            &breaks,
            1e-11,
        )
    }

    pub fn id(&self) -> String {
        self.to_string()
    }
}

fn open_unit(x: f64) -> f64 {
    if x > 0.0 && x < 1.0 {
        1.0
    } else {
        0.0
    }
}

fn null_support(null: NullDensity, mu: f64, sigma: f64) -> (f64, f64) {
    match null {
        NullDensity::Uniform01 => (mu, mu + sigma),
        NullDensity::Exponential => (mu, mu + 20.0 * sigma),
        NullDensity::Gaussian { mean, sd } => {
            let c = mu + sigma * mean;
            (c - 8.0 * sigma * sd, c + 8.0 * sigma * sd)
        }
    }
}

fn reject_on_unit(stream: &mut RandomStream, stats: &mut RejectionStats, envelope: f64, density: impl Fn(f64) -> f64) -> f64 {
    loop {
        let x = stream.uniform();
        stats.proposals += 1;
        if stream.uniform() * envelope <= density(x) {
            stats.accepted += 1;
            return x;
        }
    }
}

/// Half `Exp(1)`, half the density `perturbed` on `(0, 1)` (bounded by 2).
fn exp_or_unit(stream: &mut RandomStream, stats: &mut RejectionStats, perturbed: impl Fn(f64) -> f64) -> f64 {
    if stream.uniform() < 0.5 {
        -stream.open_uniform().ln()
    } else {
        loop {
            let x = stream.open_uniform();
            stats.proposals += 1;
            if 2.0 * stream.uniform() <= perturbed(x) {
                stats.accepted += 1;
                return x;
            }
        }
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Alternative::*;
        let n = fmt_num;
        match *self {
            Null { null } => write!(f, "{}", null.label()),
            LocationScale { null, mu, sigma } => write!(f, "ls:{},{}:{}", n(mu), n(sigma), null.label()),
            Cosine { rho, j } => write!(f, "f:{},{j}", n(rho)),
            BetaMixture { p, q, eps } => write!(f, "g:{},{},{}", n(p), n(q), n(eps)),
            Legendre { rho, j } => write!(f, "h:{},{j}", n(rho)),
            UniformSymmetric { m } => write!(f, "norm:f:{}", n(m)),
            GaussianPair { m, var } => write!(f, "norm:g:{},{}", n(m), n(var)),
            Laplace { p } => write!(f, "norm:h:{}", n(p)),
            ExpSine { p } => write!(f, "exp:g:{}", n(p)),
            ExpCosine { p } => write!(f, "exp:h:{}", n(p)),
            ExpBeta { p, q, eps } => write!(f, "exp:k:{},{},{}", n(p), n(q), n(eps)),
            ExpGamma { p, q, eps } => write!(f, "exp:l:{},{},{}", n(p), n(q), n(eps)),
            LogNormal => write!(f, "exp:t"),
            ChiSquare3 => write!(f, "exp:v"),
            Weibull15 => write!(f, "exp:w"),
        }
    }
}

fn numbers(s: &str, count: usize, id: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| GofError::UnknownAlternative(id.to_string()))?;
    if v.len() != count {
        return Err(GofError::UnknownAlternative(id.to_string()));
    }
    Ok(v)
}

fn index(x: f64, id: &str) -> Result<u32> {
    if x >= 1.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as u32)
    } else {
        Err(GofError::UnknownAlternative(id.to_string()))
    }
}

impl FromStr for Alternative {
    type Err = GofError;

    fn from_str(id: &str) -> Result<Self> {
        use Alternative::*;
        let id = id.trim();
        let unknown = || GofError::UnknownAlternative(id.to_string());
        let alt = if let Some(rest) = id.strip_prefix("ls:") {
            let (params, null) = rest.split_once(':').ok_or_else(unknown)?;
            let v = numbers(params, 2, id)?;
            LocationScale { null: null.parse().map_err(|_| unknown())?, mu: v[0], sigma: v[1] }
        } else if let Some(rest) = id.strip_prefix("norm:") {
            let (kind, params) = rest.split_once(':').ok_or_else(unknown)?;
            match kind {
                "f" => UniformSymmetric { m: numbers(params, 1, id)?[0] },
                "g" => {
                    let v = numbers(params, 2, id)?;
                    GaussianPair { m: v[0], var: v[1] }
                }
                "h" => Laplace { p: numbers(params, 1, id)?[0] },
                _ => return Err(unknown()),
            }
        } else if let Some(rest) = id.strip_prefix("exp:") {
            let (kind, params) = rest.split_once(':').unwrap_or((rest, ""));
            match kind {
                "g" => ExpSine { p: numbers(params, 1, id)?[0] },
                "h" => ExpCosine { p: numbers(params, 1, id)?[0] },
                "k" | "l" => {
                    let v = numbers(params, 3, id)?;
                    if kind == "k" {
                        ExpBeta { p: v[0], q: v[1], eps: v[2] }
                    } else {
                        ExpGamma { p: v[0], q: v[1], eps: v[2] }
                    }
                }
                "t" if params.is_empty() => LogNormal,
                "v" if params.is_empty() => ChiSquare3,
                "w" if params.is_empty() => Weibull15,
                _ => return Err(unknown()),
            }
        } else if let Some(params) = id.strip_prefix("f:") {
            let v = numbers(params, 2, id)?;
            Cosine { rho: v[0], j: index(v[1], id)? }
        } else if let Some(params) = id.strip_prefix("g:") {
            let v = numbers(params, 3, id)?;
            BetaMixture { p: v[0], q: v[1], eps: v[2] }
        } else if let Some(params) = id.strip_prefix("h:") {
            let v = numbers(params, 2, id)?;
            Legendre { rho: v[0], j: index(v[1], id)? }
        } else {
            Null { null: id.parse().map_err(|_| unknown())? }
        };
        alt.validate()?;
        Ok(alt)
    }
}

/// Every alternative appearing in the reference tables plus the nulls.
pub fn catalog() -> Vec<Alternative> {
    let ids = [
        "uniform", "exponential", "normal:0,1", "normal:0,0.1", "ls:0.3,2.5:exponential", "ls:0.2,0.5:uniform",
        "f:0.5,2", "f:0.7,4", "f:0.7,6", "g:3,3,0.5", "g:10,20,0.25", "g:2,2,0.8", "g:2,4,0.5", "h:0.4,2", "h:0.3,5",
        "norm:f:2", "norm:f:1.8", "norm:g:1,1", "norm:g:0.5,2", "norm:g:1,2", "norm:h:1.5",
        "norm:f:0.17", "norm:g:0.1,0.01", "norm:g:0.05,0.015", "norm:h:8",
        "exp:g:4", "exp:h:4", "exp:h:1", "exp:k:10,20,0.25", "exp:l:2,5,0.5", "exp:l:2,5,0.75",
        "exp:t", "exp:v", "exp:w",
    ];
    ids.iter().map(|id| id.parse().expect("catalog id")).collect()
}
