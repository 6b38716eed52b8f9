//! Environment sampling, the spectral coupling Hamiltonian, and branch
//! moments.
//!
//! In the spectral model every system basis state `|s⟩` couples to the same
//! environment operator, rescaled: `H^s = λ f_s Σ_i ω_i |ω_i⟩⟨ω_i|`. All
//! branch Hamiltonians therefore commute and every moment is a weighted
//! power sum of the frequencies.
//!
//! The closed-form modules only need moments, exposed through
//! [`MomentSource`]. [`DenseBranches`] supplies the same interface for
//! arbitrary (non-commuting) branch Hamiltonians so the general formulas can
//! be checked where the spectral model makes some terms vanish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::NORM_TOL;
use crate::{CMatrix, CVector, Error, Result, C64};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_ENV_SIZE: usize = 64;
pub const DEFAULT_WIDTH: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 1.0;
/// Default `f` for the `|↓⟩` branch; `|↑⟩` always has `f = 1`.
pub const DEFAULT_DOWN_FACTOR: f64 = -1.0;

/// Highest moment order the closed-form modules consume.
pub const MAX_MOMENT_ORDER: u32 = 4;

/// How environment amplitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmpMode {
    /// All amplitudes `1/√N`.
    Equal,
    /// I.i.d. standard complex Gaussians, normalized.
    #[default]
    Random,
}

/// Frequencies, amplitudes, coupling and branch factors.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    omegas: Vec<f64>,
    alphas: Vec<C64>,
    lambda: f64,
    branch_factors: Vec<f64>,
}

impl EnvironmentSpec {
    pub fn new(
        omegas: Vec<f64>,
        alphas: Vec<C64>,
        lambda: f64,
        branch_factors: Vec<f64>,
    ) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::ZeroDimension { what: "environment" });
        }
        if alphas.len() != omegas.len() {
            return Err(Error::DimensionMismatch {
                what: "environment amplitudes",
                expected: omegas.len(),
                actual: alphas.len(),
            });
        }
        if branch_factors.len() < 2 {
            return Err(Error::Invalid(format!(
                "need a branch factor per system level (at least 2), got {}",
                branch_factors.len()
            )));
        }
        if !omegas.iter().all(|w| w.is_finite()) {
            return Err(Error::NonFinite { what: "frequencies" });
        }
        if !branch_factors.iter().all(|f| f.is_finite()) {
            return Err(Error::NonFinite { what: "branch factors" });
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite { what: "coupling" });
        }
        if alphas.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { what: "environment amplitudes" });
        }
        let norm_sq: f64 = alphas.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                what: "environment amplitudes",
                norm_sq,
            });
        }
        Ok(Self {
            omegas,
            alphas,
            lambda,
            branch_factors,
        })
    }

    /// Two-level spec with `f = (1, f_down)`.
    pub fn qubit(omegas: Vec<f64>, alphas: Vec<C64>, lambda: f64, f_down: f64) -> Result<Self> {
        Self::new(omegas, alphas, lambda, vec![1.0, f_down])
    }

    /// Samples frequencies and amplitudes, then attaches `lambda` and `branch_factors`.
    pub fn sampled(
        n: usize,
        seed: u64,
        width: f64,
        amp_mode: AmpMode,
        lambda: f64,
        branch_factors: Vec<f64>,
    ) -> Result<Self> {
        let (omegas, alphas) = sample_environment(n, seed, width, amp_mode)?;
        Self::new(omegas, alphas, lambda, branch_factors)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn alphas(&self) -> &[C64] {
        &self.alphas
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn branch_factors(&self) -> &[f64] {
        &self.branch_factors
    }

    pub fn dim_env(&self) -> usize {
        self.omegas.len()
    }

    pub fn dim_system(&self) -> usize {
        self.branch_factors.len()
    }

    /// `|α_i|²`.
    pub fn weights(&self) -> Vec<f64> {
        self.alphas.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `Σ_i |α_i|² ω_i^k`.
    pub fn power_sum(&self, k: u32) -> f64 {
        self.omegas
            .iter()
            .zip(&self.alphas)
            .map(|(w, a)| a.norm_sqr() * w.powi(k as i32))
            .sum()
    }

    /// Same environment, different coupling.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.omegas.clone(),
            self.alphas.clone(),
            lambda,
            self.branch_factors.clone(),
        )
    }

    /// Same environment, different branch factors.
    pub fn with_branch_factors(&self, branch_factors: Vec<f64>) -> Result<Self> {
        Self::new(
            self.omegas.clone(),
            self.alphas.clone(),
            self.lambda,
            branch_factors,
        )
    }
}

/// Draws `n` frequencies uniform on `[−width, width]` and `n` amplitudes.
///
/// Frequencies are drawn first, then amplitudes, from one ChaCha8 stream
/// seeded with `seed`.
pub fn sample_environment(
    n: usize,
    seed: u64,
    width: f64,
    amp_mode: AmpMode,
) -> Result<(Vec<f64>, Vec<C64>)> {
    if n == 0 {
        return Err(Error::ZeroDimension { what: "environment" });
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::Invalid(format!("width must be positive, got {width}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omegas: Vec<f64> = (0..n).map(|_| rng.random_range(-width..=width)).collect();
    let alphas = match amp_mode {
        AmpMode::Equal => vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n],
        AmpMode::Random => {
            let raw: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            raw.into_iter().map(|z| z / norm).collect()
        }
    };
    Ok((omegas, alphas))
}

/// `d` distinct branch factors uniform on `[min, max]`.
///
/// Uses a separate ChaCha8 stream of the same seed so adding branch factors
/// to a scenario does not perturb its environment draw.
pub fn sample_branch_factors(d: usize, seed: u64, min: f64, max: f64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::ZeroDimension { what: "system" });
    }
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(Error::Invalid(format!(
            "branch factor range [{min}, {max}] is empty"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut out: Vec<f64> = Vec::with_capacity(d);
    while out.len() < d {
        let f = rng.random_range(min..=max);
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

/// Branch energies `λ f_s ω_i`, stored row-major (`s` rows, `i` columns).
#[derive(Debug, Clone, PartialEq)]
pub struct RclHamiltonian {
    energies: Vec<f64>,
    dim_system: usize,
    dim_env: usize,
}

impl RclHamiltonian {
    pub fn energy(&self, s: usize, i: usize) -> f64 {
        self.energies[s * self.dim_env + i]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.energies[s * self.dim_env..(s + 1) * self.dim_env]
    }

    /// All energies in world-index order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim_system(&self) -> usize {
        self.dim_system
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    /// The Hamiltonian as a dense diagonal matrix on the world space.
    pub fn to_dense(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|&e| C64::new(e, 0.0)),
        ))
    }
}

pub fn build_rcl(spec: &EnvironmentSpec) -> RclHamiltonian {
    let energies = spec
        .branch_factors
        .iter()
        .flat_map(|f| spec.omegas.iter().map(move |w| spec.lambda * f * w))
        .collect();
    RclHamiltonian {
        energies,
        dim_system: spec.dim_system(),
        dim_env: spec.dim_env(),
    }
}

/// `⟨φ| (H^{left})^k (H^{right})^m |φ⟩` for `1 ≤ k + m ≤ 4`.
pub fn branch_moment(
    spec: &EnvironmentSpec,
    left: usize,
    k: u32,
    right: usize,
    m: u32,
) -> Result<C64> {
    let order = k + m;
    if order == 0 || order > MAX_MOMENT_ORDER {
        return Err(Error::BadMomentOrder { order });
    }
    let d = spec.dim_system();
    for s in [left, right] {
        if s >= d {
            return Err(Error::DimensionMismatch {
                what: "branch index",
                expected: d,
                actual: s,
            });
        }
    }
    let word: Vec<usize> = std::iter::repeat_n(left, k as usize)
        .chain(std::iter::repeat_n(right, m as usize))
        .collect();
    Ok(spec.moment(&word))
}

/// Expectation values of products of branch Hamiltonians in the initial
/// environment state, coupling included.
pub trait MomentSource {
    fn branches(&self) -> usize;

    /// `⟨φ| H^{w_0} H^{w_1} ⋯ H^{w_{L−1}} |φ⟩`; the empty word gives 1.
    fn moment(&self, word: &[usize]) -> C64;
}

impl MomentSource for EnvironmentSpec {
    fn branches(&self) -> usize {
        self.dim_system()
    }

    fn moment(&self, word: &[usize]) -> C64 {
        let scale: f64 = word
            .iter()
            .map(|&s| self.lambda * self.branch_factors[s])
            .product();
        C64::new(scale * self.power_sum(word.len() as u32), 0.0)
    }
}

/// Arbitrary Hermitian branch Hamiltonians on an `N`-dimensional environment.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBranches {
    hamiltonians: Vec<CMatrix>,
    state: CVector,
    lambda: f64,
}

impl DenseBranches {
    pub fn new(hamiltonians: Vec<CMatrix>, state: CVector, lambda: f64) -> Result<Self> {
        if hamiltonians.len() < 2 {
            return Err(Error::Invalid(format!(
                "need at least 2 branch Hamiltonians, got {}",
                hamiltonians.len()
            )));
        }
        let n = state.len();
        if n == 0 {
            return Err(Error::ZeroDimension { what: "environment" });
        }
        for h in &hamiltonians {
            if h.nrows() != n || h.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what: "branch Hamiltonian",
                    expected: n,
                    actual: h.nrows(),
                });
            }
            crate::eigensolve::check_hermitian(h)?;
        }
        let norm_sq = state.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                what: "environment state",
                norm_sq,
            });
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite { what: "coupling" });
        }
        Ok(Self {
            hamiltonians,
            state,
            lambda,
        })
    }

    /// `d` random Hermitian branches (Gaussian entries, spectral radius about
    /// `scale`) and a random normalized state, all from `seed`.
    pub fn random(d: usize, n: usize, seed: u64, scale: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension { what: "environment" });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let norm = scale / (2.0 * (n as f64).sqrt());
        let hamiltonians = (0..d)
            .map(|_| {
                let g = CMatrix::from_fn(n, n, |_, _| gauss());
                (&g + g.adjoint()).scale(norm / 2.0f64.sqrt())
            })
            .collect();
        let raw = CVector::from_fn(n, |_, _| gauss());
        let state = raw.unscale(raw.norm());
        Self::new(hamiltonians, state, 1.0)
    }

    pub fn hamiltonians(&self) -> &[CMatrix] {
        &self.hamiltonians
    }

    pub fn state(&self) -> &CVector {
        &self.state
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim_env(&self) -> usize {
        self.state.len()
    }

    /// `λ Σ_s |s⟩⟨s| ⊗ H^s` in world-index order.
    pub fn world_hamiltonian(&self) -> CMatrix {
        let n = self.dim_env();
        let d = self.hamiltonians.len();
        let mut h = CMatrix::zeros(d * n, d * n);
        for (s, hs) in self.hamiltonians.iter().enumerate() {
            h.view_mut((s * n, s * n), (n, n))
                .copy_from(&hs.scale(self.lambda));
        }
        h
    }
}

impl MomentSource for DenseBranches {
    fn branches(&self) -> usize {
        self.hamiltonians.len()
    }

    fn moment(&self, word: &[usize]) -> C64 {
        let mut v = self.state.clone();
        for &s in word.iter().rev() {
            v = &self.hamiltonians[s] * v;
        }
        let scale = self.lambda.powi(word.len() as i32);
        self.state.dotc(&v) * scale
    }
}
