//! Linear observation model `y_i(t) = H_i θ + v_i(t)` with jointly
//! distributed, temporally independent noise.

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block_diagonal, psd_cholesky, symmetric_eigen};

/// Eigenvalues of `R_v` in `[-PSD_TOL, 0]` are clamped to zero.
pub const PSD_TOL: f64 = 1e-10;

/// Source of independent zero-mean, unit-variance scalars.
///
/// The joint noise is `V = chol(R_v) · z`, so any sampler here yields noise
/// with covariance exactly `R_v`.
pub trait NoiseSampler {
    fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]);
}

/// Built-in unit-variance noise shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Student-t rescaled to unit variance; needs `dof > 2`. Moments of
    /// order below `dof` are finite.
    StudentT { dof: f64 },
}

impl NoiseSampler for NoiseKind {
    fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            NoiseKind::Gaussian => {
                for z in out.iter_mut() {
                    *z = StandardNormal.sample(rng);
                }
            }
            NoiseKind::StudentT { dof } => {
                let dist = StudentT::new(dof).expect("dof validated at construction");
                let scale = ((dof - 2.0) / dof).sqrt();
                for z in out.iter_mut() {
                    *z = scale * dist.sample(rng);
                }
            }
        }
    }
}

/// True parameter, per-agent sensors and joint noise covariance.
#[derive(Debug, Clone)]
pub struct ObservationSystem {
    theta: DVector<f64>,
    sensors: Vec<DMatrix<f64>>,
    offsets: Vec<usize>,
    noise_cov: DMatrix<f64>,
    noise_chol: DMatrix<f64>,
    noise_kind: NoiseKind,
}

/// `G = Σ H_iᵀ H_i` and its rank decision.
#[derive(Debug, Clone)]
pub struct Gramian {
    pub g: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub full_rank: bool,
}

impl ObservationSystem {
    pub fn new(theta: DVector<f64>, sensors: Vec<DMatrix<f64>>, noise_cov: DMatrix<f64>) -> Result<Self> {
        Self::with_noise(theta, sensors, noise_cov, NoiseKind::Gaussian)
    }

    pub fn with_noise(
        theta: DVector<f64>,
        sensors: Vec<DMatrix<f64>>,
        noise_cov: DMatrix<f64>,
        noise_kind: NoiseKind,
    ) -> Result<Self> {
        let n = theta.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("parameter dimension is zero".into()));
        }
        if sensors.is_empty() {
            return Err(Error::DimensionMismatch("no sensors".into()));
        }
        let mut offsets = Vec::with_capacity(sensors.len() + 1);
        let mut total = 0;
        for (i, h) in sensors.iter().enumerate() {
            if h.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "sensor {i} has {} columns but theta has length {n}",
                    h.ncols()
                )));
            }
            offsets.push(total);
            total += h.nrows();
        }
        offsets.push(total);
        if noise_cov.nrows() != total || noise_cov.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "noise covariance is {}x{} but total measurement dimension is {total}",
                noise_cov.nrows(),
                noise_cov.ncols()
            )));
        }
        if let NoiseKind::StudentT { dof } = noise_kind {
            if !(dof > 2.0) {
                return Err(Error::DomainError(format!("Student-t noise needs dof > 2, got {dof}")));
            }
        }
        let noise_chol = psd_cholesky(&noise_cov, PSD_TOL)?;
        Ok(Self { theta, sensors, offsets, noise_cov, noise_chol, noise_kind })
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn param_dim(&self) -> usize {
        self.theta.len()
    }

    pub fn n_agents(&self) -> usize {
        self.sensors.len()
    }

    /// `M = Σ m_i`.
    pub fn total_dim(&self) -> usize {
        self.offsets[self.sensors.len()]
    }

    pub fn sensor(&self, agent: usize) -> &DMatrix<f64> {
        &self.sensors[agent]
    }

    pub fn sensors(&self) -> &[DMatrix<f64>] {
        &self.sensors
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    pub fn noise_chol(&self) -> &DMatrix<f64> {
        &self.noise_chol
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise_kind
    }

    /// `R_i`, the diagonal block of `R_v` belonging to agent `i`.
    pub fn agent_noise_cov(&self, agent: usize) -> DMatrix<f64> {
        let (start, len) = (self.offsets[agent], self.sensors[agent].nrows());
        self.noise_cov.view((start, start), (len, len)).into_owned()
    }

    /// `y_i(t)` inside the stacked measurement vector.
    pub fn agent_slice<'a>(&self, y: &'a DVector<f64>, agent: usize) -> DVectorView<'a, f64> {
        let (start, len) = (self.offsets[agent], self.sensors[agent].nrows());
        y.rows(start, len)
    }

    /// `D̄_H = blockdiag(H_iᵀ)`, shape `Nn × M`.
    pub fn stacked_observation(&self) -> DMatrix<f64> {
        let blocks: Vec<_> = self.sensors.iter().map(|h| h.transpose()).collect();
        block_diagonal(&blocks)
    }

    /// `D_H = blockdiag(H_iᵀ H_i)`, shape `Nn × Nn`.
    pub fn stacked_information(&self) -> DMatrix<f64> {
        let blocks: Vec<_> = self.sensors.iter().map(|h| h.transpose() * h).collect();
        block_diagonal(&blocks)
    }

    /// `Θ = 1_N ⊗ θ`.
    pub fn stacked_theta(&self) -> DVector<f64> {
        let n = self.param_dim();
        DVector::from_fn(self.n_agents() * n, |k, _| self.theta[k % n])
    }

    /// Noise-free stacked measurement `D̄_Hᵀ Θ`.
    pub fn clean_measurement(&self) -> DVector<f64> {
        let mut y = DVector::zeros(self.total_dim());
        for (i, h) in self.sensors.iter().enumerate() {
            y.rows_mut(self.offsets[i], h.nrows()).copy_from(&(h * &self.theta));
        }
        y
    }
}

/// Draws one stacked measurement `Y(t) = D̄_Hᵀ Θ + V(t)` using the system's noise kind.
pub fn sample_measurements<R: Rng + ?Sized>(sys: &ObservationSystem, rng: &mut R) -> DVector<f64> {
    sample_measurements_with(sys, &sys.noise_kind, rng)
}

pub fn sample_measurements_with<S: NoiseSampler, R: Rng + ?Sized>(
    sys: &ObservationSystem,
    sampler: &S,
    rng: &mut R,
) -> DVector<f64> {
    let mut z = DVector::zeros(sys.total_dim());
    sampler.fill(rng, z.as_mut_slice());
    sys.clean_measurement() + &sys.noise_chol * z
}

pub fn gramian(sys: &ObservationSystem, tol: f64) -> Result<Gramian> {
    let n = sys.param_dim();
    let g = sys.sensors.iter().fold(DMatrix::zeros(n, n), |acc, h| acc + h.transpose() * h);
    let eig = symmetric_eigen(&g)?;
    let (min_eigenvalue, max_eigenvalue) = (eig.min(), eig.max());
    let full_rank = min_eigenvalue > tol * max_eigenvalue;
    Ok(Gramian { g, min_eigenvalue, max_eigenvalue, full_rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, v.len(), v)
    }

    fn demo_sensors() -> Vec<DMatrix<f64>> {
        vec![row(&[1.0, 0.0]), row(&[0.0, 1.0]), row(&[1.0, 1.0]), row(&[1.0, 2.0])]
    }

    fn demo_system(var: f64) -> ObservationSystem {
        ObservationSystem::new(DVector::from_vec(vec![-1.0, 2.0]), demo_sensors(), DMatrix::identity(4, 4) * var)
            .unwrap()
    }

    #[test]
    fn noise_free_measurement_is_exact() {
        let sys = demo_system(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let y = sample_measurements(&sys, &mut rng);
            assert_eq!(sys.agent_slice(&y, 2)[0], 1.0);
        }
        let zero = ObservationSystem::new(DVector::zeros(2), demo_sensors(), DMatrix::zeros(4, 4)).unwrap();
        assert!(sample_measurements(&zero, &mut rng).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empirical_variance_matches() {
        let sys = demo_system(0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let clean = sys.clean_measurement();
        let draws = 100_000;
        let mut sq = [0.0; 4];
        for _ in 0..draws {
            let v = sample_measurements(&sys, &mut rng) - &clean;
            for (acc, x) in sq.iter_mut().zip(v.iter()) {
                *acc += x * x;
            }
        }
        for s in sq {
            assert!((s / draws as f64 / 0.01 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn noise_is_temporally_independent() {
        let sys = demo_system(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let steps = 100_000;
        let series: Vec<DVector<f64>> =
            (0..steps).map(|_| sample_measurements(&sys, &mut rng) - sys.clean_measurement()).collect();
        for c in 0..4 {
            let x: Vec<f64> = series.iter().map(|v| v[c]).collect();
            let mean = x.iter().sum::<f64>() / steps as f64;
            let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
            let lag: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
            assert!((lag / var).abs() < 0.02);
        }
    }

    #[test]
    fn student_t_noise_has_target_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let sys = ObservationSystem::with_noise(
            DVector::from_vec(vec![0.0]),
            vec![row(&[1.0]), row(&[1.0])],
            cov.clone(),
            NoiseKind::StudentT { dof: 6.0 },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 200_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..draws {
            let v = sample_measurements(&sys, &mut rng);
            acc += &v * v.transpose();
        }
        let emp = acc / draws as f64;
        assert!((emp - &cov).norm() / cov.norm() < 0.05);
    }

    #[test]
    fn rejects_inconsistent_inputs() {
        let theta = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let err = ObservationSystem::new(theta, demo_sensors(), DMatrix::identity(4, 4)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let bad_cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
        let err = ObservationSystem::new(DVector::from_vec(vec![1.0, 2.0]), demo_sensors(), bad_cov).unwrap_err();
        assert!(matches!(err, Error::CholeskyFailure { .. }));
    }

    #[test]
    fn demo_gramian() {
        let g = gramian(&demo_system(0.01), 1e-9).unwrap();
        assert_eq!(g.g, DMatrix::from_row_slice(2, 2, &[3.0, 3.0, 3.0, 6.0]));
        assert_relative_eq!(g.min_eigenvalue, (9.0 - 45f64.sqrt()) / 2.0, epsilon = 1e-9);
        assert!(g.full_rank);
    }

    #[test]
    fn rank_deficient_and_identity_gramians() {
        let single = ObservationSystem::new(DVector::zeros(2), vec![row(&[1.0, 0.0])], DMatrix::zeros(1, 1)).unwrap();
        let g = gramian(&single, 1e-9).unwrap();
        assert_eq!(g.g, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert!(!g.full_rank);

        let eye = ObservationSystem::new(DVector::zeros(3), vec![DMatrix::identity(3, 3); 5], DMatrix::zeros(15, 15))
            .unwrap();
        let g = gramian(&eye, 1e-9).unwrap();
        assert_eq!(g.g, DMatrix::identity(3, 3) * 5.0);
        assert_relative_eq!(g.min_eigenvalue, 5.0, epsilon = 1e-12);
    }

    fn psd_matrix(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-1.0f64..1.0, m * m).prop_map(move |v| {
            let b = DMatrix::from_vec(m, m, v);
            &b * b.transpose() + DMatrix::identity(m, m) * 0.05
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn empirical_covariance_matches_any_psd(cov in (1usize..=8).prop_flat_map(psd_matrix), seed in any::<u64>()) {
            let m = cov.nrows();
            let sensors = vec![DMatrix::from_element(1, 1, 1.0); m];
            let sys = ObservationSystem::new(DVector::zeros(1), sensors, cov.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws = 100_000;
            let mut acc = DMatrix::<f64>::zeros(m, m);
            for _ in 0..draws {
                let v = sample_measurements(&sys, &mut rng);
                acc += &v * v.transpose();
            }
            let emp = acc / draws as f64;
            prop_assert!((emp - &cov).norm() / cov.norm() < 0.05);
        }

        #[test]
        fn gramian_is_symmetric_psd(entries in proptest::collection::vec(-3.0f64..3.0, 1..24)) {
            let n = 3;
            let rows = entries.len() / n;
            prop_assume!(rows > 0);
            let sensors: Vec<_> = (0..rows).map(|r| row(&entries[r * n..(r + 1) * n])).collect();
            let sys = ObservationSystem::new(DVector::zeros(n), sensors, DMatrix::zeros(rows, rows)).unwrap();
            let g = gramian(&sys, 1e-9).unwrap();
            prop_assert!((&g.g - g.g.transpose()).norm() < 1e-12);
            prop_assert!(g.min_eigenvalue > -1e-9);
        }
    }
}
