//! Closed-form quantities of the D-optimal subsampling design for elliptical
//! covariates, and a Monte-Carlo check of its optimality.
//!
//! In standardized coordinates `z = L⁻¹(x − μ)` the optimal design of
//! proportion `α` keeps the covariate mass with `R² = ‖z‖² ≥ q`, where `q` is
//! the `(1 − α)`-quantile of `R²`. Its information matrix is
//! `diag(α, m₂·I_d)` with the per-coordinate second moment
//! `m₂ = (1/d)·E[R²·1{R² ≥ q}]`, and the slope dispersion `s²` equals `m₂`.
//!
//! For normal covariates `R² ~ χ²_d` and
//! `m₂ = α + (2/d)·q·f_{χ²_d}(q)`. For multivariate t with `ν` degrees of
//! freedom `R²/d ~ F(d, ν)`; its second moments are estimated by Monte Carlo
//! with a pinned seed.

use rand::RngCore;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dist::{
    chi2_density, chi2_quantile_upper, f_quantile_upper, sample_covariates, EllipticalModel,
    Family, RngStream, SAMPLE_BLOCK_ROWS,
};
use crate::error::{Error, Result};
use crate::linalg::{CovSpec, DistanceKernel, SquareMatrix, DEFAULT_BLOCK_ROWS};

/// Monte-Carlo draws used whenever a t second moment is needed internally.
pub const T_MOMENT_DRAWS: usize = 1_000_000;
/// Seed of the internal t second-moment runs, so results are reproducible.
pub const T_MOMENT_SEED: u64 = 0x5EED_0F_7E57;
pub const MIN_MOMENT_DRAWS: usize = 10_000;
pub const MIN_VERIFY_DRAWS: usize = 100_000;
/// Slack allowed in the level-set comparison of the sensitivity check.
pub const SENSITIVITY_TOLERANCE: f64 = 1e-6;
/// Width, in binomial standard errors, of the accepted-mass check.
pub const MASS_TOLERANCE_SE: f64 = 4.0;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProportion(alpha))
    }
}

/// Threshold `q₁₋α` on the squared Mahalanobis scale: `χ²_{d,1−α}` for normal
/// covariates, `d·F_{d,ν,1−α}` for t covariates.
pub fn optimal_threshold(family: Family, d: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    family.validate()?;
    if d == 0 {
        return Err(Error::InvalidDegrees(0.0));
    }
    let df = d as f64;
    match family {
        Family::Normal => chi2_quantile_upper(alpha, df),
        Family::StudentT { nu } => Ok(df * f_quantile_upper(alpha, df, nu)?),
    }
}

/// `m₂ = α + (2/d)·q·f_{χ²_d}(q)` with `q = χ²_{d,1−α}`; equals 1 at `α = 1`.
pub fn second_moment_normal(d: usize, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let q = optimal_threshold(Family::Normal, d, alpha)?;
    Ok(alpha + 2.0 / d as f64 * q * chi2_density(q, d as f64)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Sum and sum of squares of `(R²/d)·1{R² ≥ q}` per threshold.
#[derive(Clone)]
struct TruncatedSums {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

/// `(1/d)·E[R²·1{R² ≥ q}]` for each threshold in `thresholds`, from one shared
/// set of `mc_n` standardized draws.
pub fn truncated_second_moments_mc(
    family: Family,
    d: usize,
    thresholds: &[f64],
    mc_n: usize,
    rng: &mut RngStream,
) -> Result<Vec<McEstimate>> {
    family.validate()?;
    if d == 0 {
        return Err(Error::InvalidDegrees(0.0));
    }
    if mc_n < MIN_MOMENT_DRAWS {
        return Err(Error::TooFewRows {
            needed: MIN_MOMENT_DRAWS,
            found: mc_n,
        });
    }
    let chi2 = match family {
        Family::Normal => None,
        Family::StudentT { nu } => Some((nu, ChiSquared::new(nu).map_err(|_| Error::InvalidDegrees(nu))?)),
    };
    let key = rng.next_u64();
    let blocks = mc_n.div_ceil(SAMPLE_BLOCK_ROWS);
    let df = d as f64;
    let partials: Vec<TruncatedSums> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut local = RngStream::new(key, b as u64);
            let rows = SAMPLE_BLOCK_ROWS.min(mc_n - b * SAMPLE_BLOCK_ROWS);
            let mut acc = TruncatedSums {
                sum: vec![0.0; thresholds.len()],
                sum_sq: vec![0.0; thresholds.len()],
            };
            for _ in 0..rows {
                let mut r2 = 0.0;
                for _ in 0..d {
                    let z: f64 = StandardNormal.sample(&mut local);
                    r2 += z * z;
                }
                if let Some((nu, dist)) = &chi2 {
                    let w: f64 = dist.sample(&mut local);
                    r2 /= w / nu;
                }
                let y = r2 / df;
                for (t, &q) in thresholds.iter().enumerate() {
                    if r2 >= q {
                        acc.sum[t] += y;
                        acc.sum_sq[t] += y * y;
                    }
                }
            }
            acc
        })
        .collect();
    let n = mc_n as f64;
    Ok((0..thresholds.len())
        .map(|t| {
            let s: f64 = partials.iter().map(|p| p.sum[t]).sum();
            let s2: f64 = partials.iter().map(|p| p.sum_sq[t]).sum();
            let mean = s / n;
            let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
            McEstimate {
                value: mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect())
}

/// Monte-Carlo estimate of `m₂` for the optimal design of proportion `alpha`
/// (`alpha = 1` means no truncation).
pub fn second_moment_mc(
    family: Family,
    d: usize,
    alpha: f64,
    mc_n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    Ok(second_moment_mc_grid(family, d, &[alpha], mc_n, rng)?[0])
}

/// [`second_moment_mc`] for several proportions from one set of draws.
pub fn second_moment_mc_grid(
    family: Family,
    d: usize,
    alphas: &[f64],
    mc_n: usize,
    rng: &mut RngStream,
) -> Result<Vec<McEstimate>> {
    let thresholds = alphas
        .iter()
        .map(|&a| if a == 1.0 { Ok(0.0) } else { optimal_threshold(family, d, a) })
        .collect::<Result<Vec<_>>>()?;
    truncated_second_moments_mc(family, d, &thresholds, mc_n, rng)
}

/// `m₂` by the family's route: closed form for normal, seed-pinned Monte Carlo
/// for t.
pub fn second_moment(family: Family, d: usize, alpha: f64) -> Result<f64> {
    match family {
        Family::Normal => second_moment_normal(d, alpha),
        Family::StudentT { .. } => {
            let mut rng = RngStream::new(T_MOMENT_SEED, d as u64);
            Ok(second_moment_mc(family, d, alpha, T_MOMENT_DRAWS, &mut rng)?.value)
        }
    }
}

/// D_slope-efficiency of uniform subsampling relative to the optimal design of
/// the same proportion.
pub fn uniform_efficiency(family: Family, d: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    match family {
        Family::Normal => {
            let q = optimal_threshold(family, d, alpha)?;
            let da = d as f64 * alpha;
            Ok(da / (da + 2.0 * q * chi2_density(q, d as f64)?))
        }
        Family::StudentT { .. } => {
            Ok(alpha * family.marginal_variance() / second_moment(family, d, alpha)?)
        }
    }
}

/// Large-sample approximation of the slope covariance under top-k selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeCovApprox {
    /// `σ²/(n·s²)·Σ⁻¹`
    pub matrix: SquareMatrix,
    /// `det(matrix)^{1/d}`
    pub standardized_det: f64,
    /// `σ²/(n·s²)`, the per-coordinate variance when `Σ = I`.
    pub per_coord_var: f64,
}

pub fn slope_cov_approx(
    family: Family,
    n: usize,
    k: usize,
    cov: &CovSpec,
    sigma: f64,
) -> Result<SlopeCovApprox> {
    if k > n {
        return Err(Error::KLargerThanN { k, n });
    }
    if k == 0 {
        return Err(Error::KTooSmall { k, min: 1 });
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let d = cov.dim();
    let alpha = k as f64 / n as f64;
    let s2 = if k == n {
        family.marginal_variance()
    } else {
        second_moment(family, d, alpha)?
    };
    let scale = sigma * sigma / (n as f64 * s2);
    let mut matrix = cov.inverse()?;
    matrix.scale(scale);
    let standardized_det = scale * (-cov.log_det()? / d as f64).exp();
    Ok(SlopeCovApprox {
        matrix,
        standardized_det,
        per_coord_var: scale,
    })
}

/// The D-optimal design of proportion `alpha` (or a candidate that claims to
/// be, see [`DesignSpec::with_threshold`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub alpha: f64,
    pub d: usize,
    pub family: Family,
    /// Acceptance threshold on the squared Mahalanobis distance.
    pub q_threshold: f64,
    pub m2: f64,
    pub s2: f64,
    pub cov: CovSpec,
}

impl DesignSpec {
    pub fn optimal(family: Family, cov: CovSpec, alpha: f64) -> Result<Self> {
        let d = cov.dim();
        let q_threshold = optimal_threshold(family, d, alpha)?;
        let m2 = second_moment(family, d, alpha)?;
        Ok(Self {
            alpha,
            d,
            family,
            q_threshold,
            m2,
            s2: m2,
            cov,
        })
    }

    /// Same declared proportion and moments, different acceptance threshold.
    /// Such a design is inconsistent unless `q` is the optimal threshold, which
    /// makes it a falsification control for the verifier.
    pub fn with_threshold(&self, q: f64) -> Self {
        Self {
            q_threshold: q,
            ..self.clone()
        }
    }

    /// `diag(α, m₂·I_d)`
    pub fn standardized_information(&self) -> SquareMatrix {
        let mut diag = vec![self.m2; self.d + 1];
        diag[0] = self.alpha;
        SquareMatrix::from_diagonal(&diag)
    }

    /// Information matrix in the original coordinates, `T·M_z·Tᵀ` with
    /// `T = [[1, 0], [μ, L]]` and `f(x) = (1, xᵀ)ᵀ`.
    pub fn information_matrix(&self) -> Result<SquareMatrix> {
        let d = self.d;
        let l = self.cov.cholesky()?;
        let l = l.lower();
        let mu = self.cov.mean();
        let mut t = SquareMatrix::zeros(d + 1);
        t[(0, 0)] = 1.0;
        for i in 0..d {
            t[(i + 1, 0)] = mu[i];
            for j in 0..=i {
                t[(i + 1, j + 1)] = l[(i, j)];
            }
        }
        t.matmul(&self.standardized_information())?.matmul(&t.transpose())
    }

    /// Slope block `S = M₂₂ − M₂₁ M₁₁⁻¹ M₁₂`, which equals `s²·Σ`.
    pub fn slope_information(&self) -> Result<SquareMatrix> {
        let m = self.information_matrix()?;
        let d = self.d;
        let mut s = SquareMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                s[(i, j)] = m[(i + 1, j + 1)] - m[(i + 1, 0)] * m[(0, j + 1)] / m[(0, 0)];
            }
        }
        Ok(s)
    }

    /// `ψ(x, ξ) = α f(x)ᵀ M(ξ)⁻¹ f(x)` given the squared Mahalanobis distance
    /// of `x`, which reduces to `1 + α·R²/m₂`.
    pub fn sensitivity_at(&self, mahalanobis_sq: f64) -> f64 {
        1.0 + self.alpha * mahalanobis_sq / self.m2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    /// Smallest `ψ` among sampled points the design accepts.
    pub min_inside_support: f64,
    /// Largest `ψ` among sampled points the design rejects.
    pub max_outside_support: f64,
    /// Midpoint of the observed gap, an estimate of the level `c*`.
    pub c_star_estimate: f64,
    /// `1 + α·q/m₂`, the level implied by the declared design.
    pub c_star_declared: f64,
    pub mc_points: usize,
    /// Fraction of sampled points accepted.
    pub mass_estimate: f64,
    /// Sampled `(1/d)·E[R²·1{accepted}]`, for comparison with `m₂`.
    pub m2_estimate: f64,
    pub level_set_ok: bool,
    pub mass_ok: bool,
    pub verdict: bool,
}

/// Checks the equivalence-theorem characterization on `mc_n` sampled
/// covariates: the design must be the upper level set of its own sensitivity
/// function, and it must carry its declared mass `α`.
pub fn verify_optimality_sensitivity(
    design: &DesignSpec,
    mc_n: usize,
    rng: &mut RngStream,
) -> Result<SensitivityReport> {
    if mc_n < MIN_VERIFY_DRAWS {
        return Err(Error::TooFewRows {
            needed: MIN_VERIFY_DRAWS,
            found: mc_n,
        });
    }
    let model = EllipticalModel::new(design.family, design.cov.clone())?;
    let kernel = DistanceKernel::new(&design.cov)?;
    let mut min_inside = f64::INFINITY;
    let mut max_outside = f64::NEG_INFINITY;
    let mut accepted = 0usize;
    let mut r2_sum = 0.0;
    // bounded chunks keep memory flat for large d
    let chunk = (50_000_000 / design.d.max(1)).clamp(1, mc_n);
    let mut done = 0;
    while done < mc_n {
        let rows = chunk.min(mc_n - done);
        let x = sample_covariates(&model, rows, rng)?;
        for r2 in kernel.distances(&x, DEFAULT_BLOCK_ROWS)? {
            let psi = design.sensitivity_at(r2);
            if r2 >= design.q_threshold {
                accepted += 1;
                r2_sum += r2;
                min_inside = min_inside.min(psi);
            } else {
                max_outside = max_outside.max(psi);
            }
        }
        done += rows;
    }
    let n = mc_n as f64;
    let mass_estimate = accepted as f64 / n;
    let level_set_ok = min_inside >= max_outside - SENSITIVITY_TOLERANCE;
    let se = (design.alpha * (1.0 - design.alpha) / n).sqrt();
    let mass_ok = (mass_estimate - design.alpha).abs() <= MASS_TOLERANCE_SE * se;
    let c_star_estimate = match (min_inside.is_finite(), max_outside.is_finite()) {
        (true, true) => 0.5 * (min_inside + max_outside),
        (true, false) => min_inside,
        _ => max_outside,
    };
    Ok(SensitivityReport {
        min_inside_support: min_inside,
        max_outside_support: max_outside,
        c_star_estimate,
        c_star_declared: design.sensitivity_at(design.q_threshold),
        mc_points: mc_n,
        mass_estimate,
        m2_estimate: r2_sum / (n * design.d as f64),
        level_set_ok,
        mass_ok,
        verdict: level_set_ok && mass_ok,
    })
}

/// `s²(ξ*_α)/α` along a strictly decreasing grid of proportions.
pub fn s2_over_alpha_divergence(family: Family, d: usize, alpha_grid: &[f64]) -> Result<Vec<f64>> {
    if alpha_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("alpha grid must be strictly decreasing".into()));
    }
    for &a in alpha_grid {
        check_alpha(a)?;
    }
    let m2 = match family {
        Family::Normal => alpha_grid
            .iter()
            .map(|&a| second_moment_normal(d, a))
            .collect::<Result<Vec<_>>>()?,
        Family::StudentT { .. } => {
            let mut rng = RngStream::new(T_MOMENT_SEED, d as u64);
            second_moment_mc_grid(family, d, alpha_grid, T_MOMENT_DRAWS, &mut rng)?
                .into_iter()
                .map(|e| e.value)
                .collect()
        }
    };
    Ok(m2.iter().zip(alpha_grid).map(|(m, a)| m / a).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky;

    #[test]
    fn normal_d2_alpha_01() {
        let q = optimal_threshold(Family::Normal, 2, 0.1).unwrap();
        assert!((q - 4.605_170_185_988_091).abs() < 1e-12);
        let m2 = second_moment_normal(2, 0.1).unwrap();
        // d = 2: m₂ = α + q·e^{−q/2}/2 with q = −2 ln α
        let closed = 0.1 + q * 0.5 * (-q / 2.0f64).exp();
        assert!((m2 - closed).abs() < 1e-14);
        assert!((m2 - 0.330_259).abs() < 1e-6);
        assert!((uniform_efficiency(Family::Normal, 2, 0.1).unwrap() - 0.1 / m2).abs() < 1e-12);
    }

    #[test]
    fn original_coordinate_information() {
        let cov = CovSpec::compound_symmetry(3, 0.4).unwrap().with_mean(vec![1.0, -2.0, 0.5]).unwrap();
        let design = DesignSpec::optimal(Family::Normal, cov.clone(), 0.2).unwrap();
        let m = design.information_matrix().unwrap();
        // det(M) = α·det(S)
        let log_det_m = cholesky(&m).unwrap().log_det();
        let s = design.slope_information().unwrap();
        let log_det_s = cholesky(&s).unwrap().log_det();
        assert!((log_det_m - (design.alpha.ln() + log_det_s)).abs() < 1e-10);
        // S = s²·Σ
        for i in 0..3 {
            for j in 0..3 {
                assert!((s[(i, j)] - design.s2 * cov.dispersion()[(i, j)]).abs() < 1e-12);
            }
        }
        // ψ through the dense inverse equals 1 + α R²/m₂
        let x = [2.0, -1.0, 3.0];
        let mut f = vec![1.0];
        f.extend_from_slice(&x);
        let sol = cholesky(&m).unwrap().solve(&f);
        let psi: f64 = design.alpha * f.iter().zip(&sol).map(|(a, b)| a * b).sum::<f64>();
        let kernel = DistanceKernel::new(&cov).unwrap();
        let r2 = kernel.distance(&x, &mut [0.0; 3]);
        assert!((psi - design.sensitivity_at(r2)).abs() < 1e-10);
    }

    #[test]
    fn slope_cov_full_data_limit() {
        let cov = CovSpec::identity(3);
        let a = slope_cov_approx(Family::Normal, 500, 500, &cov, 1.0).unwrap();
        assert!((a.per_coord_var - 1.0 / 500.0).abs() < 1e-15);
        assert!(matches!(
            slope_cov_approx(Family::Normal, 10, 11, &cov, 1.0),
            Err(Error::KLargerThanN { .. })
        ));
    }

    #[test]
    fn invalid_grid() {
        assert!(s2_over_alpha_divergence(Family::Normal, 2, &[0.1, 0.5]).is_err());
        assert!(optimal_threshold(Family::Normal, 2, 1.0).is_err());
    }
}
