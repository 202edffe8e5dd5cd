//! Gaussian targets `pi(x) ∝ exp(-x'Bx/2)` and the counting first-order oracle.
//!
//! A target is a diagonal core spectrum `omega_sq` (the eigenvalues of the
//! precision matrix `B`) with an optional orthogonal rotation `U`, so that
//! `B = U diag(omega_sq) U'`. Samplers only ever see the target through
//! [`FirstOrderOracle`], which exposes the eigenvalue bounds and counted
//! `(f(x), grad f(x))` queries. The spectrum itself is white-box information
//! reserved for exact samplers and diagnostics.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::rng_from_seed;

/// Named spectrum families used by reproducible sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Half of the eigenvalues at `alpha`, the other half at `beta`.
    TwoPoint,
    /// `log omega_sq` drawn uniformly in `[log alpha, log beta]`.
    LogUniform,
    /// Log-evenly spaced from `alpha` to `beta`.
    Geometric,
}

impl std::str::FromStr for SpectrumKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_point" => Ok(Self::TwoPoint),
            "log_uniform" => Ok(Self::LogUniform),
            "geometric" => Ok(Self::Geometric),
            other => Err(invalid(format!("unknown spectrum kind `{other}`"))),
        }
    }
}

/// Eigenvalues `omega_i^2` of the precision matrix together with the bounds
/// `alpha <= omega_i^2 <= beta` the samplers are told about.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    omega_sq: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl Spectrum {
    pub fn new(omega_sq: Vec<f64>, alpha: f64, beta: f64) -> Result<Self> {
        check_bounds(alpha, beta)?;
        if omega_sq.is_empty() {
            return Err(invalid("spectrum must have at least one eigenvalue"));
        }
        if let Some((i, w)) = omega_sq.iter().enumerate().find(|(_, &w)| !(alpha..=beta).contains(&w)) {
            return Err(invalid(format!("omega_sq[{i}] = {w} lies outside [{alpha}, {beta}]")));
        }
        Ok(Self { omega_sq, alpha, beta })
    }

    /// Spectrum with every eigenvalue equal to `omega_sq`.
    pub fn constant(d: usize, omega_sq: f64) -> Result<Self> {
        Self::new(vec![omega_sq; d], omega_sq, omega_sq)
    }

    /// Generates a spectrum of the given family. Deterministic given `seed`;
    /// only [`SpectrumKind::LogUniform`] consumes randomness.
    pub fn generate(d: usize, kind: SpectrumKind, alpha: f64, beta: f64, seed: u64) -> Result<Self> {
        check_bounds(alpha, beta)?;
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let (la, lb) = (alpha.ln(), beta.ln());
        let omega_sq: Vec<f64> = match kind {
            SpectrumKind::TwoPoint => {
                let low = d.div_ceil(2);
                (0..d).map(|i| if i < low { alpha } else { beta }).collect()
            }
            SpectrumKind::Geometric => (0..d)
                .map(|i| {
                    if d == 1 || i == 0 {
                        alpha
                    } else if i == d - 1 {
                        beta
                    } else {
                        (la + (lb - la) * i as f64 / (d - 1) as f64).exp()
                    }
                })
                .collect(),
            SpectrumKind::LogUniform => {
                let mut rng = rng_from_seed(seed);
                (0..d)
                    .map(|_| {
                        let u: f64 = rng.random();
                        (la + (lb - la) * u).exp()
                    })
                    .collect()
            }
        };
        // exp/ln round-off must not push values across the advertised bounds
        let omega_sq = omega_sq.into_iter().map(|w| w.clamp(alpha, beta)).collect();
        Self::new(omega_sq, alpha, beta)
    }

    pub fn omega_sq(&self) -> &[f64] {
        &self.omega_sq
    }

    pub fn dim(&self) -> usize {
        self.omega_sq.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.beta / self.alpha
    }

    /// `sqrt(sum_i omega_i^4)`, the Frobenius norm of `B`.
    pub fn frobenius(&self) -> f64 {
        self.omega_sq.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

fn check_bounds(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(beta.is_finite() && beta >= alpha) {
        return Err(invalid(format!(
            "beta must be >= alpha, got beta = {beta}, alpha = {alpha}"
        )));
    }
    Ok(())
}

/// Mean-zero Gaussian with precision `B = U diag(omega_sq) U'`.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    spectrum: Spectrum,
    rotation: Option<DMatrix<f64>>,
    // dense B, only assembled when rotated
    precision: Option<DMatrix<f64>>,
}

const ORTHOGONALITY_TOL: f64 = 1e-10;

impl GaussianTarget {
    /// Target whose precision matrix is `diag(omega_sq)`.
    pub fn diagonal(spectrum: Spectrum) -> Self {
        Self {
            spectrum,
            rotation: None,
            precision: None,
        }
    }

    /// Target with an explicit rotation. `U'U = I` is checked to `1e-10`.
    pub fn with_rotation(spectrum: Spectrum, rotation: DMatrix<f64>) -> Result<Self> {
        let d = spectrum.dim();
        if rotation.nrows() != d || rotation.ncols() != d {
            return Err(invalid(format!(
                "rotation must be {d}x{d}, got {}x{}",
                rotation.nrows(),
                rotation.ncols()
            )));
        }
        let gram = rotation.transpose() * &rotation;
        let defect = (gram - DMatrix::<f64>::identity(d, d)).amax();
        if defect > ORTHOGONALITY_TOL {
            return Err(invalid(format!(
                "rotation is not orthogonal (max |U'U - I| = {defect:e})"
            )));
        }
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spectrum.omega_sq()));
        let precision = &rotation * diag * rotation.transpose();
        Ok(Self {
            spectrum,
            rotation: Some(rotation),
            precision: Some(precision),
        })
    }

    /// `make_target`: optionally rotates the spectrum by a Haar-distributed
    /// orthogonal matrix, deterministic given `seed`.
    pub fn new(spectrum: Spectrum, rotate: bool, seed: u64) -> Result<Self> {
        if rotate {
            let u = random_orthogonal(spectrum.dim(), seed);
            Self::with_rotation(spectrum, u)
        } else {
            Ok(Self::diagonal(spectrum))
        }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }

    pub fn is_rotated(&self) -> bool {
        self.rotation.is_some()
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// The dense precision matrix `B`.
    pub fn precision(&self) -> DMatrix<f64> {
        match &self.precision {
            Some(b) => b.clone(),
            None => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(self.spectrum.omega_sq())),
        }
    }

    /// `-x'Bx/2`.
    pub fn log_density_unnormalized(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let mut grad = vec![0.0; x.len()];
        Ok(-self.potential_and_gradient(x, &mut grad))
    }

    /// Maps a point from the eigenbasis of `B` to the original coordinates.
    pub fn from_diagonal(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), y.len())?;
        Ok(match &self.rotation {
            Some(u) => (u * nalgebra::DVector::from_column_slice(y)).as_slice().to_vec(),
            None => y.to_vec(),
        })
    }

    /// Maps a point from the original coordinates to the eigenbasis of `B`.
    pub fn to_diagonal(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(match &self.rotation {
            Some(u) => (u.tr_mul(&nalgebra::DVector::from_column_slice(x))).as_slice().to_vec(),
            None => x.to_vec(),
        })
    }

    /// Writes `Bx` into `grad` and returns `x'Bx/2`. Dimensions are the
    /// caller's responsibility.
    pub(crate) fn potential_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        match &self.precision {
            None => {
                let mut f = 0.0;
                for ((g, &xi), &w) in grad.iter_mut().zip(x).zip(&self.spectrum.omega_sq) {
                    *g = w * xi;
                    f += xi * *g;
                }
                0.5 * f
            }
            Some(b) => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                // column-major B: accumulate column by column
                for (j, &xj) in x.iter().enumerate() {
                    let col = b.column(j);
                    for (g, &bij) in grad.iter_mut().zip(col.iter()) {
                        *g += bij * xj;
                    }
                }
                0.5 * x.iter().zip(grad.iter()).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    /// `sample_exact`: `n` i.i.d. draws from the target, deterministic given
    /// `seed`.
    pub fn sample_exact(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let diag = sample_diagonal(self.spectrum.omega_sq(), n, seed)?;
        if self.rotation.is_none() {
            return Ok(diag);
        }
        diag.iter().map(|y| self.from_diagonal(y)).collect()
    }
}

/// `n` i.i.d. draws from `N(0, diag(1/omega_sq))`.
///
/// `omega_sq` need not satisfy any spectrum bounds, which makes this the exact
/// sampler for the modified target as well.
pub fn sample_diagonal(omega_sq: &[f64], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(invalid("number of samples must be at least 1"));
    }
    if omega_sq.iter().any(|&w| !(w > 0.0)) {
        return Err(invalid("precision eigenvalues must be positive"));
    }
    let scale: Vec<f64> = omega_sq.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut rng = rng_from_seed(seed);
    Ok((0..n)
        .map(|_| scale.iter().map(|s| s * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect())
}

/// Haar-distributed orthogonal matrix: QR of a standard normal matrix with the
/// signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Black-box access to `f(x) = x'Bx/2`: each query returns both `f(x)` and
/// `grad f(x) = Bx` and counts as exactly one query.
///
/// Only the eigenvalue bounds are visible through this type. One oracle
/// belongs to one chain; replicas get their own.
#[derive(Debug)]
pub struct FirstOrderOracle<'a> {
    target: &'a GaussianTarget,
    queries: u64,
}

impl<'a> FirstOrderOracle<'a> {
    pub fn new(target: &'a GaussianTarget) -> Self {
        Self { target, queries: 0 }
    }

    /// `oracle_query`: returns `(x'Bx/2, Bx)`.
    pub fn query(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; x.len()];
        let f = self.query_into(x, &mut grad)?;
        Ok((f, grad))
    }

    /// Allocation-free form of [`query`](Self::query): writes the gradient
    /// into `grad` and returns `f(x)`.
    pub fn query_into(&mut self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), grad.len())?;
        self.queries += 1;
        Ok(self.target.potential_and_gradient(x, grad))
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.target.spectrum.alpha
    }

    pub fn beta(&self) -> f64 {
        self.target.spectrum.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_point_spectrum() {
        let s = Spectrum::generate(2, SpectrumKind::TwoPoint, 1.0, 4.0, 0).unwrap();
        assert_eq!(s.omega_sq(), &[1.0, 4.0]);
        assert_eq!(s.kappa(), 4.0);
    }

    #[test]
    fn degenerate_log_uniform() {
        let s = Spectrum::generate(1, SpectrumKind::LogUniform, 9.0, 9.0, 7).unwrap();
        assert_eq!(s.omega_sq(), &[9.0]);
    }

    #[test]
    fn geometric_spacing() {
        let s = Spectrum::generate(4, SpectrumKind::Geometric, 1.0, 8.0, 0).unwrap();
        for (got, want) in s.omega_sq().iter().zip([1.0, 2.0, 4.0, 8.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn log_uniform_is_seeded_and_bounded() {
        let a = Spectrum::generate(50, SpectrumKind::LogUniform, 0.5, 20.0, 3).unwrap();
        let b = Spectrum::generate(50, SpectrumKind::LogUniform, 0.5, 20.0, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.omega_sq().iter().all(|&w| (0.5..=20.0).contains(&w)));
    }

    #[test]
    fn invalid_spectra() {
        assert!(Spectrum::generate(3, SpectrumKind::TwoPoint, 0.0, 1.0, 0).is_err());
        assert!(Spectrum::generate(3, SpectrumKind::TwoPoint, -1.0, 1.0, 0).is_err());
        assert!(Spectrum::generate(3, SpectrumKind::TwoPoint, 2.0, 1.0, 0).is_err());
        assert!(Spectrum::generate(0, SpectrumKind::TwoPoint, 1.0, 2.0, 0).is_err());
        assert!(Spectrum::new(vec![0.5], 1.0, 2.0).is_err());
    }

    #[test]
    fn oracle_examples() {
        let t = GaussianTarget::diagonal(Spectrum::new(vec![1.0, 4.0], 1.0, 4.0).unwrap());
        let mut o = FirstOrderOracle::new(&t);
        assert_eq!(o.query(&[1.0, 1.0]).unwrap(), (2.5, vec![1.0, 4.0]));
        assert_eq!(o.query(&[0.0, 0.0]).unwrap(), (0.0, vec![0.0, 0.0]));
        assert!(o.query(&[1.0]).is_err());
        // failed queries are not charged
        assert_eq!(o.query_count(), 2);

        let t9 = GaussianTarget::diagonal(Spectrum::constant(1, 9.0).unwrap());
        let mut o9 = FirstOrderOracle::new(&t9);
        assert_eq!(o9.query(&[2.0]).unwrap(), (18.0, vec![18.0]));
    }

    #[test]
    fn unrotated_target_is_diagonal() {
        let s = Spectrum::new(vec![1.0, 2.0, 3.0], 1.0, 3.0).unwrap();
        let t = GaussianTarget::new(s, false, 11).unwrap();
        let b = t.precision();
        assert_eq!(
            b,
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]))
        );
    }

    #[test]
    fn rotation_is_deterministic_and_orthogonal() {
        let s = Spectrum::generate(6, SpectrumKind::Geometric, 1.0, 30.0, 0).unwrap();
        let a = GaussianTarget::new(s.clone(), true, 5).unwrap();
        let b = GaussianTarget::new(s, true, 5).unwrap();
        assert_eq!(a.rotation(), b.rotation());
        let u = a.rotation().unwrap();
        let defect = (u.transpose() * u - DMatrix::<f64>::identity(6, 6)).amax();
        assert!(defect < 1e-12);
    }

    #[test]
    fn non_orthogonal_rotation_rejected() {
        let s = Spectrum::constant(2, 1.0).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(GaussianTarget::with_rotation(s, m).is_err());
    }

    #[test]
    fn rotated_eigenvalues_match_spectrum() {
        let s = Spectrum::generate(7, SpectrumKind::LogUniform, 1.0, 50.0, 9).unwrap();
        let t = GaussianTarget::new(s.clone(), true, 2).unwrap();
        let mut eig: Vec<f64> = t.precision().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let mut want = s.omega_sq().to_vec();
        want.sort_by(f64::total_cmp);
        for (e, w) in eig.iter().zip(&want) {
            assert!((e - w).abs() < 1e-9, "{e} vs {w}");
        }
    }

    #[test]
    fn sample_exact_requires_samples() {
        let t = GaussianTarget::diagonal(Spectrum::constant(1, 1.0).unwrap());
        assert!(t.sample_exact(0, 0).is_err());
    }

    fn variance_within_four_se(omega_sq: f64) {
        let n = 100_000;
        let t = GaussianTarget::diagonal(Spectrum::constant(1, omega_sq).unwrap());
        let xs = t.sample_exact(n, 17).unwrap();
        let var = xs.iter().map(|x| x[0] * x[0]).sum::<f64>() / n as f64;
        let sigma2 = 1.0 / omega_sq;
        // var of x^2 for a centred normal is 2 sigma^4
        let se = (2.0f64).sqrt() * sigma2 / (n as f64).sqrt();
        assert!((var - sigma2).abs() < 4.0 * se, "var {var} vs {sigma2}");
    }

    #[test]
    fn exact_sample_variances() {
        variance_within_four_se(1.0);
        variance_within_four_se(4.0);
    }
}
