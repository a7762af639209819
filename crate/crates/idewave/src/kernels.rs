//! Dispersal kernels: symmetric probability densities with a moment
//! generating function that is finite for every `lambda >= 0`, plus their
//! grid discretization for convolution.
//!
//! Admissible families are light-tailed (Gaussian) or compactly supported
//! (uniform, triangular, tabulated). Heavy-tailed requests such as Laplace
//! or Cauchy are rejected at construction: the dispersion solvers evaluate
//! the characteristic function at arbitrarily large decay rates.

use crate::numeric::refine_trapezoid;
use statrs::function::erf::{erf, erfc};
use thiserror::Error;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Default hard cap on the truncation radius of [`discretize`].
pub const DEFAULT_RADIUS_CAP: f64 = 1e3;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel parameter {name} must be positive (got {value})")]
    NonPositiveParam { name: &'static str, value: f64 },
    #[error(
        "moment generating function of the {family:?} family is not finite for \
         every lambda >= 0; only light-tailed or compactly supported kernels \
         are admissible"
    )]
    MgfDivergent { family: String },
    #[error("unknown kernel family {0:?}")]
    UnknownFamily(String),
    #[error("kernel family {family:?} is missing parameter {param:?}")]
    MissingParam { family: String, param: &'static str },
    #[error("table kernel must be even-symmetric about its center (mismatch at index {index})")]
    AsymmetricTable { index: usize },
    #[error("table kernel needs an odd number (>= 3) of samples on a uniform grid")]
    BadTable,
    #[error("kernel density must be nonnegative (sample at index {index} is {value})")]
    NegativeDensity { index: usize, value: f64 },
    #[error("discretization requires h > 0 and 0 < mass_tol < 1e-3")]
    BadDiscretization,
    #[error("kernel too heavy-tailed for grid: truncation radius {radius} exceeds cap {cap}")]
    TooHeavyTailed { radius: f64, cap: f64 },
    #[error("kernel mass {mass} deviates from 1 beyond 1e-10")]
    BadMass { mass: f64 },
}

/// A validated dispersal kernel.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    family: Family,
}

#[derive(Debug, Clone)]
enum Family {
    Gaussian { sigma: f64 },
    Uniform { halfwidth: f64 },
    Triangular { halfwidth: f64 },
    /// Piecewise-linear density through `samples` at uniform `spacing`,
    /// centered at the middle sample (odd count), already normalized.
    Table { samples: Vec<f64>, spacing: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self, KernelError> {
        positive("sigma", sigma)?;
        Ok(Self { family: Family::Gaussian { sigma } })
    }

    pub fn uniform(halfwidth: f64) -> Result<Self, KernelError> {
        positive("halfwidth", halfwidth)?;
        Ok(Self { family: Family::Uniform { halfwidth } })
    }

    pub fn triangular(halfwidth: f64) -> Result<Self, KernelError> {
        positive("halfwidth", halfwidth)?;
        Ok(Self { family: Family::Triangular { halfwidth } })
    }

    /// Builds a table kernel from symmetric density samples. The samples are
    /// renormalized so the piecewise-linear density integrates to one.
    pub fn table(samples: Vec<f64>, spacing: f64) -> Result<Self, KernelError> {
        positive("spacing", spacing)?;
        let n = samples.len();
        if n < 3 || n % 2 == 0 {
            return Err(KernelError::BadTable);
        }
        let scale = samples.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        for (i, &v) in samples.iter().enumerate() {
            if v < 0.0 {
                return Err(KernelError::NegativeDensity { index: i, value: v });
            }
            let mirror = samples[n - 1 - i];
            if (v - mirror).abs() > 1e-12 * scale {
                return Err(KernelError::AsymmetricTable { index: i });
            }
        }
        // trapezoid mass of the piecewise-linear density
        let mut mass = 0.5 * (samples[0] + samples[n - 1]);
        for &v in &samples[1..n - 1] {
            mass += v;
        }
        mass *= spacing;
        if mass <= 0.0 {
            return Err(KernelError::BadTable);
        }
        let samples = samples.into_iter().map(|v| v / mass).collect();
        Ok(Self { family: Family::Table { samples, spacing } })
    }

    /// Kernel density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match &self.family {
            Family::Gaussian { sigma } => {
                (-0.5 * (x / sigma).powi(2)).exp() / (sigma * SQRT_2PI)
            }
            Family::Uniform { halfwidth } => {
                if x.abs() <= *halfwidth {
                    0.5 / halfwidth
                } else {
                    0.0
                }
            }
            Family::Triangular { halfwidth } => {
                let a = *halfwidth;
                if x.abs() <= a {
                    (a - x.abs()) / (a * a)
                } else {
                    0.0
                }
            }
            Family::Table { samples, spacing } => {
                let half = (samples.len() - 1) as f64 / 2.0;
                let t = x / spacing + half;
                if t <= 0.0 || t >= (samples.len() - 1) as f64 {
                    return 0.0;
                }
                let i = t.floor() as usize;
                let frac = t - i as f64;
                samples[i] * (1.0 - frac) + samples[i + 1] * frac
            }
        }
    }

    /// Moment generating function `M(lambda) = ∫ e^{lambda y} k(y) dy`.
    /// Closed forms for the analytic families; exact segment integrals for
    /// table kernels. Symmetry makes `M` even, so `lambda.abs()` is used.
    pub fn mgf(&self, lambda: f64) -> f64 {
        let l = lambda.abs();
        match &self.family {
            Family::Gaussian { sigma } => (0.5 * (l * sigma).powi(2)).exp(),
            Family::Uniform { halfwidth } => {
                let la = l * halfwidth;
                if la < 1e-8 {
                    1.0 + la * la / 6.0
                } else {
                    la.sinh() / la
                }
            }
            Family::Triangular { halfwidth } => {
                let la = l * halfwidth;
                if la < 1e-6 {
                    1.0 + la * la / 12.0
                } else {
                    2.0 * (la.cosh() - 1.0) / (la * la)
                }
            }
            Family::Table { samples, spacing } => {
                let half = (samples.len() - 1) as f64 / 2.0;
                let mut total = 0.0;
                for i in 0..samples.len() - 1 {
                    let x0 = (i as f64 - half) * spacing;
                    total += segment_exp_integral(samples[i], samples[i + 1], x0, *spacing, l);
                }
                total
            }
        }
    }

    /// Exact mass `∫_a^b k` for `a <= b`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        debug_assert!(a <= b);
        match &self.family {
            Family::Gaussian { sigma } => {
                0.5 * (erf(b / (sigma * SQRT_2)) - erf(a / (sigma * SQRT_2)))
            }
            Family::Uniform { halfwidth } => {
                let lo = a.max(-halfwidth);
                let hi = b.min(*halfwidth);
                (hi - lo).max(0.0) * 0.5 / halfwidth
            }
            Family::Triangular { halfwidth } => {
                self.triangular_cdf(b, *halfwidth) - self.triangular_cdf(a, *halfwidth)
            }
            Family::Table { samples, spacing } => {
                let half = (samples.len() - 1) as f64 / 2.0;
                let support = half * spacing;
                let lo = a.max(-support);
                let hi = b.min(support);
                if lo >= hi {
                    return 0.0;
                }
                let mut total = 0.0;
                for i in 0..samples.len() - 1 {
                    let x0 = (i as f64 - half) * spacing;
                    let x1 = x0 + spacing;
                    let p = lo.max(x0);
                    let q = hi.min(x1);
                    if p < q {
                        let vp = self.density(p.max(x0 + 0.0));
                        let vq = self.density(q);
                        // density is linear on the segment: exact trapezoid
                        total += 0.5 * (vp + vq) * (q - p);
                    }
                }
                total
            }
        }
    }

    fn triangular_cdf(&self, x: f64, a: f64) -> f64 {
        if x <= -a {
            0.0
        } else if x >= a {
            1.0
        } else if x <= 0.0 {
            (a + x).powi(2) / (2.0 * a * a)
        } else {
            1.0 - (a - x).powi(2) / (2.0 * a * a)
        }
    }

    /// Two-sided tail mass `∫_{|y| > r} k`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        match &self.family {
            Family::Gaussian { sigma } => erfc(r / (sigma * SQRT_2)),
            _ => {
                let s = self.support_radius().unwrap();
                if r >= s {
                    0.0
                } else {
                    1.0 - self.mass(-r, r)
                }
            }
        }
    }

    /// Upper bound on `∫_{|y| > r} e^{kappa |y|} k(y) dy`.
    pub fn weighted_tail(&self, r: f64, kappa: f64) -> f64 {
        match &self.family {
            Family::Gaussian { sigma } => {
                let one_sided = 0.5
                    * (0.5 * (kappa * sigma).powi(2)).exp()
                    * erfc((r - kappa * sigma * sigma) / (sigma * SQRT_2));
                2.0 * one_sided
            }
            _ => {
                let s = self.support_radius().unwrap();
                if r >= s {
                    0.0
                } else {
                    2.0 * (kappa * s).exp() * self.tail_mass(r)
                }
            }
        }
    }

    /// Radius of compact support, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.family {
            Family::Gaussian { .. } => None,
            Family::Uniform { halfwidth } | Family::Triangular { halfwidth } => Some(*halfwidth),
            Family::Table { samples, spacing } => {
                Some((samples.len() - 1) as f64 / 2.0 * spacing)
            }
        }
    }

    /// Characteristic length used for default grid spacing: the standard
    /// deviation of the kernel.
    pub fn scale(&self) -> f64 {
        match &self.family {
            Family::Gaussian { sigma } => *sigma,
            Family::Uniform { halfwidth } => halfwidth / 3f64.sqrt(),
            Family::Triangular { halfwidth } => halfwidth / 6f64.sqrt(),
            Family::Table { .. } => {
                let r = self.support_radius().unwrap();
                let second = refine_trapezoid(|x| x * x * self.density(x), -r, r, 1e-12);
                second.sqrt().max(1e-12)
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Gaussian { .. } => "gaussian",
            Family::Uniform { .. } => "uniform",
            Family::Triangular { .. } => "triangular",
            Family::Table { .. } => "table",
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), KernelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(KernelError::NonPositiveParam { name, value })
    }
}

/// `∫_{x0}^{x0+h} (v0 + (v1-v0) t/h) e^{lambda x} dx`, stable for small
/// `lambda * h`.
fn segment_exp_integral(v0: f64, v1: f64, x0: f64, h: f64, lambda: f64) -> f64 {
    let m = (v1 - v0) / h;
    let lh = lambda * h;
    let base = (lambda * x0).exp();
    if lh.abs() < 1e-5 {
        // series in lambda*h
        let i0 = h * (1.0 + 0.5 * lh + lh * lh / 6.0);
        let i1 = h * h * (0.5 + lh / 3.0 + lh * lh / 8.0);
        base * (v0 * i0 + m * i1)
    } else {
        let e = lh.exp();
        let i0 = (e - 1.0) / lambda;
        let i1 = (e * (lh - 1.0) + 1.0) / (lambda * lambda);
        base * (v0 * i0 + m * i1)
    }
}

/// Config-facing constructor: builds a kernel from a family name and named
/// parameters, rejecting families whose MGF diverges.
pub fn make_kernel(
    family: &str,
    params: &std::collections::BTreeMap<String, f64>,
) -> Result<KernelSpec, KernelError> {
    let get = |key: &'static str| -> Result<f64, KernelError> {
        params.get(key).copied().ok_or(KernelError::MissingParam {
            family: family.to_string(),
            param: key,
        })
    };
    match family {
        "gaussian" => KernelSpec::gaussian(get("sigma")?),
        "uniform" => KernelSpec::uniform(get("halfwidth")?),
        "triangular" => KernelSpec::triangular(get("halfwidth")?),
        "laplace" | "cauchy" | "exponential" | "student_t" => {
            Err(KernelError::MgfDivergent { family: family.to_string() })
        }
        other => Err(KernelError::UnknownFamily(other.to_string())),
    }
}

/// A kernel reduced to symmetric quadrature weights on a uniform grid.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    /// Nonnegative weights summing to one, even-symmetric about the center.
    pub weights: Vec<f64>,
    /// Grid spacing.
    pub h: f64,
    /// Offset of the outermost node from the center.
    pub radius: f64,
}

impl DiscreteKernel {
    /// Number of nodes on each side of the center.
    pub fn half_len(&self) -> usize {
        (self.weights.len() - 1) / 2
    }

    /// Node offset of weight `i`.
    pub fn offset(&self, i: usize) -> f64 {
        (i as f64 - self.half_len() as f64) * self.h
    }

    /// `Σ w_i e^{lambda x_i}` — the discrete counterpart of the MGF.
    pub fn discrete_mgf(&self, lambda: f64) -> f64 {
        let half = self.half_len() as f64;
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (lambda * (i as f64 - half) * self.h).exp())
            .sum()
    }
}

/// Cell-averaged discretization of `kernel` at spacing `h`: the truncation
/// radius is the smallest node radius whose uncovered tail mass is below
/// `mass_tol`, weights are exact cell masses mirrored for symmetry and then
/// renormalized to sum one.
pub fn discretize(
    kernel: &KernelSpec,
    h: f64,
    mass_tol: f64,
) -> Result<DiscreteKernel, KernelError> {
    discretize_capped(kernel, h, mass_tol, DEFAULT_RADIUS_CAP)
}

/// [`discretize`] with an explicit hard cap on the truncation radius.
pub fn discretize_capped(
    kernel: &KernelSpec,
    h: f64,
    mass_tol: f64,
    radius_cap: f64,
) -> Result<DiscreteKernel, KernelError> {
    if !(h > 0.0) || !(mass_tol > 0.0 && mass_tol < 1e-3) {
        return Err(KernelError::BadDiscretization);
    }
    // cells are [x_j - h/2, x_j + h/2]; the tail criterion applies to the
    // coverage edge (n + 1/2) h
    let mut n = 1usize;
    loop {
        let edge = (n as f64 + 0.5) * h;
        if kernel.tail_mass(edge) < mass_tol {
            break;
        }
        n += 1;
        if n as f64 * h > radius_cap {
            return Err(KernelError::TooHeavyTailed {
                radius: n as f64 * h,
                cap: radius_cap,
            });
        }
    }
    let mut right: Vec<f64> = (0..=n)
        .map(|j| {
            let x = j as f64 * h;
            kernel.mass(x - 0.5 * h, x + 0.5 * h)
        })
        .collect();
    // include everything beyond the outermost cell edge in the last weight
    let edge = (n as f64 + 0.5) * h;
    right[n] += 0.5 * kernel.tail_mass(edge);

    let mut weights = vec![0.0; 2 * n + 1];
    for j in 0..=n {
        weights[n + j] = right[j];
        weights[n - j] = right[j];
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(KernelError::BadMass { mass: total });
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(DiscreteKernel { weights, h, radius: n as f64 * h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn gaussian_and_uniform_construct() {
        assert!(make_kernel("gaussian", &params(&[("sigma", 1.0)])).is_ok());
        assert!(make_kernel("uniform", &params(&[("halfwidth", 1.0)])).is_ok());
    }

    #[test]
    fn laplace_rejected_for_divergent_mgf() {
        // oracle: the symbolic Laplace MGF 1/(1 - b^2 l^2) blows up at l = 1/b
        let err = make_kernel("laplace", &params(&[("b", 1.0)])).unwrap_err();
        assert!(matches!(err, KernelError::MgfDivergent { .. }));
        let msg = err.to_string();
        assert!(msg.contains("not finite"));
    }

    #[test]
    fn asymmetric_table_rejected() {
        let err = KernelSpec::table(vec![0.1, 0.5, 0.2], 0.5).unwrap_err();
        assert!(matches!(err, KernelError::AsymmetricTable { .. }));
    }

    #[test]
    fn mgf_matches_quadrature_oracle() {
        // oracle: high-resolution trapezoid of e^{y - y^2/2} / sqrt(2 pi) on [-12, 12]
        let g = KernelSpec::gaussian(1.0).unwrap();
        let oracle = refine_trapezoid(|y| (y).exp() * g.density(y), -12.0, 12.0, 1e-13);
        assert!((g.mgf(1.0) - oracle).abs() < 1e-11);
        assert!((g.mgf(0.0) - 1.0).abs() < 1e-15);
        assert!((g.mgf(1.0) - 1.648_721_270_700_128).abs() < 1e-10);

        // oracle: quadrature of e^{2y} / 2 on [-1, 1]
        let u = KernelSpec::uniform(1.0).unwrap();
        let oracle = refine_trapezoid(|y| (2.0 * y).exp() * 0.5, -1.0, 1.0, 1e-13);
        assert!((u.mgf(2.0) - oracle).abs() < 1e-11);
        assert!((u.mgf(2.0) - 2f64.sinh() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn triangular_and_table_mgf_agree_with_quadrature() {
        let t = KernelSpec::triangular(2.0).unwrap();
        let oracle = refine_trapezoid(|y| (1.5 * y).exp() * t.density(y), -2.0, 2.0, 1e-13);
        assert!((t.mgf(1.5) - oracle).abs() < 1e-10);

        let spacing = 0.25;
        let samples: Vec<f64> = (-8..=8)
            .map(|i| {
                let x: f64 = i as f64 * spacing;
                (2.0 - x.abs()).max(0.0)
            })
            .collect();
        let tab = KernelSpec::table(samples, spacing).unwrap();
        let oracle = refine_trapezoid(|y| (1.5 * y).exp() * tab.density(y), -2.0, 2.0, 1e-11);
        assert!((tab.mgf(1.5) - oracle).abs() < 1e-9);
        assert!((tab.mass(-2.0, 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_is_symmetric_and_normalized() {
        for k in [
            KernelSpec::gaussian(1.3).unwrap(),
            KernelSpec::uniform(0.7).unwrap(),
            KernelSpec::triangular(1.1).unwrap(),
        ] {
            for i in 0..200 {
                let x = -6.0 + 12.0 * i as f64 / 199.0;
                assert!((k.density(x) - k.density(-x)).abs() <= 1e-12);
            }
            let r = k.support_radius().unwrap_or(12.0);
            let mass = refine_trapezoid(|x| k.density(x), -r, r, 1e-12);
            assert!((mass - 1.0).abs() < 1e-10, "family {}", k.family_name());
        }
    }

    #[test]
    fn discretize_gaussian_radius_matches_tail_oracle() {
        // oracle: complementary error function tail bound
        let g = KernelSpec::gaussian(1.0).unwrap();
        let h = 0.1;
        let dk = discretize(&g, h, 1e-12).unwrap();
        let mut n_oracle = 1;
        while erfc((n_oracle as f64 + 0.5) * h / SQRT_2) >= 1e-12 {
            n_oracle += 1;
        }
        assert_eq!(dk.half_len(), n_oracle);
        assert!((dk.radius - 7.1).abs() < 0.11, "radius {}", dk.radius);
        let sum: f64 = dk.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn discretize_uniform_compact_support() {
        let u = KernelSpec::uniform(1.0).unwrap();
        let dk = discretize(&u, 0.5, 1e-12).unwrap();
        assert_eq!(dk.weights.len(), 5);
        let sum: f64 = dk.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn discretize_table_proportional_to_samples() {
        let samples = vec![0.0, 1.0, 2.0, 1.0, 0.0];
        let tab = KernelSpec::table(samples, 0.5).unwrap();
        let dk = discretize(&tab, 0.5, 1e-12).unwrap();
        // interior weights follow the cell masses of the normalized density
        assert!((dk.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(dk.weights[2] > dk.weights[1]);
        for i in 0..dk.weights.len() {
            assert_eq!(dk.weights[i], dk.weights[dk.weights.len() - 1 - i]);
        }
    }

    #[test]
    fn heavy_radius_hits_cap() {
        let g = KernelSpec::gaussian(200.0).unwrap();
        let err = discretize(&g, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, KernelError::TooHeavyTailed { .. }));
    }

    #[test]
    fn discrete_mgf_second_order_bias() {
        // cell-averaged nodal weights carry a relative MGF bias of
        // (lambda h)^2 / 24 + O(h^4); check the envelope and that a fine mesh
        // meets 1e-6 at lambda = 4
        let g = KernelSpec::gaussian(1.0).unwrap();
        for (h, lambda) in [(0.1, 4.0), (0.1, 2.0), (0.05, 4.0)] {
            let dk = discretize(&g, h, 1e-12).unwrap();
            let rel = (dk.discrete_mgf(lambda) / g.mgf(lambda) - 1.0).abs();
            let predicted = (lambda * h).powi(2) / 24.0;
            assert!(rel < 1.05 * predicted + 1e-12, "rel {rel} predicted {predicted}");
            assert!(rel > 0.5 * predicted, "rel {rel} predicted {predicted}");
        }
        let dk = discretize(&g, 1e-3, 1e-12).unwrap();
        for lambda in [0.5, 1.0, 2.0, 4.0] {
            let rel = (dk.discrete_mgf(lambda) / g.mgf(lambda) - 1.0).abs();
            assert!(rel < 1e-6, "lambda {lambda} rel {rel}");
        }
    }

    #[test]
    fn weighted_tail_bounds_truncation() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let kappa = 1.5;
        let r = 9.0;
        let oracle = refine_trapezoid(|y| (kappa * y).exp() * g.density(y), r, r + 30.0, 1e-12);
        assert!(g.weighted_tail(r, kappa) >= oracle);
        assert!(g.weighted_tail(r, kappa) < 10.0 * oracle + 1e-18);
    }
}
