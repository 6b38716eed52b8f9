//! States on `system ⊗ environment`, the partial trace, and reduced density
//! matrices.
//!
//! World amplitudes are stored system-major: the amplitude of `|s⟩ ⊗ |e_i⟩`
//! lives at index `s · N + i`, so tracing out the environment walks
//! contiguous rows.

use crate::eigensolve;
use crate::{CMatrix, Error, Result, C64};

/// Normalization tolerance on `Σ |amplitude|²`.
pub const NORM_TOL: f64 = 1e-12;

/// Hermiticity and trace tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-12;

/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

fn norm_sq(amplitudes: &[C64]) -> f64 {
    amplitudes.iter().map(|z| z.norm_sqr()).sum()
}

fn check_normalized(what: &'static str, amplitudes: &[C64]) -> Result<()> {
    if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite { what });
    }
    let n = norm_sq(amplitudes);
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { what, norm_sq: n });
    }
    Ok(())
}

/// Initial system state `Σ_s c_s |s⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemInit {
    coeffs: Vec<C64>,
}

impl SystemInit {
    /// Rejects empty or non-normalized coefficient lists; never renormalizes.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::ZeroDimension { what: "system" });
        }
        check_normalized("system coefficients", &coeffs)?;
        Ok(Self { coeffs })
    }

    /// Two-level state `a|↑⟩ + b|↓⟩`.
    pub fn qubit(a: C64, b: C64) -> Result<Self> {
        Self::new(vec![a, b])
    }

    /// Three-level state `a|1⟩ + b|0⟩ + c|−1⟩`.
    pub fn qutrit(a: C64, b: C64, c: C64) -> Result<Self> {
        Self::new(vec![a, b, c])
    }

    /// Equal superposition over the first `cats` of `dim` basis states.
    pub fn equal_cats(dim: usize, cats: usize) -> Result<Self> {
        if cats == 0 || cats > dim {
            return Err(Error::Invalid(format!(
                "cannot place {cats} cats in dimension {dim}"
            )));
        }
        let amp = C64::new(1.0 / (cats as f64).sqrt(), 0.0);
        let mut coeffs = vec![C64::new(0.0, 0.0); dim];
        coeffs[..cats].fill(amp);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// `|c_s|²`.
    pub fn population(&self, s: usize) -> f64 {
        self.coeffs[s].norm_sqr()
    }

    /// The pure-state projector `c c†`.
    pub fn projector(&self) -> DensityMatrix {
        let d = self.dim();
        let entries = CMatrix::from_fn(d, d, |i, j| self.coeffs[i] * self.coeffs[j].conj());
        DensityMatrix::from_parts(entries, default_labels(d))
    }
}

/// Amplitudes on `system ⊗ environment`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    amplitudes: Vec<C64>,
    dim_system: usize,
    dim_env: usize,
}

impl WorldState {
    pub fn new(amplitudes: Vec<C64>, dim_system: usize, dim_env: usize) -> Result<Self> {
        if dim_system < 2 {
            return Err(Error::Invalid(format!(
                "system dimension must be at least 2, got {dim_system}"
            )));
        }
        if dim_env == 0 {
            return Err(Error::ZeroDimension { what: "environment" });
        }
        if amplitudes.len() != dim_system * dim_env {
            return Err(Error::DimensionMismatch {
                what: "world amplitudes",
                expected: dim_system * dim_env,
                actual: amplitudes.len(),
            });
        }
        check_normalized("world state", &amplitudes)?;
        Ok(Self {
            amplitudes,
            dim_system,
            dim_env,
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim_system(&self) -> usize {
        self.dim_system
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Amplitude of `|s⟩ ⊗ |e_i⟩`.
    pub fn amplitude(&self, s: usize, i: usize) -> C64 {
        self.amplitudes[s * self.dim_env + i]
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.amplitudes)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &WorldState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| x.conj() * y)
            .sum::<C64>()
            .norm_sqr()
    }
}

/// `|ψ_s⟩ ⊗ |φ_e⟩` with `amplitude(s, i) = c_s α_i`.
pub fn tensor_product(sys: &SystemInit, env_amplitudes: &[C64]) -> Result<WorldState> {
    if env_amplitudes.is_empty() {
        return Err(Error::ZeroDimension { what: "environment" });
    }
    check_normalized("environment state", env_amplitudes)?;
    let amplitudes = sys
        .coeffs
        .iter()
        .flat_map(|c| env_amplitudes.iter().map(move |alpha| c * alpha))
        .collect();
    WorldState::new(amplitudes, sys.dim(), env_amplitudes.len())
}

/// `ρ[s, s'] = Σ_i ψ(s, i) ψ(s', i)*`.
pub fn partial_trace_env(w: &WorldState) -> DensityMatrix {
    let d = w.dim_system;
    let n = w.dim_env;
    let rows: Vec<&[C64]> = w.amplitudes.chunks_exact(n).collect();
    let mut entries = CMatrix::zeros(d, d);
    for s in 0..d {
        for t in s..d {
            let z: C64 = rows[s].iter().zip(rows[t]).map(|(x, y)| x * y.conj()).sum();
            entries[(s, t)] = z;
            entries[(t, s)] = z.conj();
        }
        entries[(s, s)].im = 0.0;
    }
    DensityMatrix::from_parts(entries, default_labels(d))
}

/// Basis labels: `up/down` for qubits, `1/0/-1` for qutrits, indices otherwise.
pub fn default_labels(d: usize) -> Vec<String> {
    match d {
        2 => vec!["up".into(), "down".into()],
        3 => vec!["1".into(), "0".into(), "-1".into()],
        _ => (0..d).map(|k| k.to_string()).collect(),
    }
}

/// Reduced density matrix of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    basis_labels: Vec<String>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: CMatrix, basis_labels: Vec<String>) -> Result<Self> {
        let d = entries.nrows();
        if d == 0 {
            return Err(Error::ZeroDimension { what: "density matrix" });
        }
        if basis_labels.len() != d {
            return Err(Error::DimensionMismatch {
                what: "basis labels",
                expected: d,
                actual: basis_labels.len(),
            });
        }
        let rho = Self {
            entries,
            basis_labels,
        };
        rho.validate()?;
        Ok(rho)
    }

    /// Used for matrices that are Gram matrices by construction.
    pub(crate) fn from_parts(entries: CMatrix, basis_labels: Vec<String>) -> Self {
        Self {
            entries,
            basis_labels,
        }
    }

    /// Re-checks every invariant.
    pub fn validate(&self) -> Result<()> {
        let e = &self.entries;
        if !e.is_square() {
            return Err(Error::DimensionMismatch {
                what: "density matrix",
                expected: e.nrows(),
                actual: e.ncols(),
            });
        }
        let d = e.nrows();
        let mut deviation: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let z = e[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { what: "density matrix" });
                }
                deviation = deviation.max((z - e[(j, i)].conj()).norm());
            }
        }
        if deviation > DENSITY_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = self.trace();
        if (trace - 1.0).abs() > DENSITY_TOL {
            return Err(Error::BadTrace { trace });
        }
        let min_eigenvalue = eigensolve::min_eigenvalue(e)?;
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(())
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, s: usize, t: usize) -> C64 {
        self.entries[(s, t)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// `1 − Tr ρ²`.
    pub fn linear_entropy(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ.
        1.0 - self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// `max_{s≠s'} |ρ[s, s']|`.
    pub fn off_diagonal_magnitude(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    worst = worst.max(self.entries[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn eigen(&self) -> Result<eigensolve::EigenDecomposition> {
        eigensolve::eigh(&self.entries)
    }
}

pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    rho.linear_entropy()
}

pub fn off_diagonal_magnitude(rho: &DensityMatrix) -> f64 {
    rho.off_diagonal_magnitude()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn normalized(raw: Vec<(f64, f64)>) -> Vec<C64> {
        let v: Vec<C64> = raw.into_iter().map(|(r, i)| c(r, i)).collect();
        let n = norm_sq(&v).sqrt();
        v.into_iter().map(|z| z / n).collect()
    }

    fn state_strategy(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
            .prop_filter("nonzero", |v| v.iter().any(|(r, i)| r.abs() + i.abs() > 1e-3))
            .prop_map(normalized)
    }

    #[test]
    fn product_of_basis_states() {
        let sys = SystemInit::qubit(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let w = tensor_product(&sys, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(w.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn product_amplitudes_follow_system_major_order() {
        let s5 = 5f64.sqrt();
        let sys = SystemInit::qubit(c(1.0 / s5, 0.0), c(2.0 / s5, 0.0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let w = tensor_product(&sys, &[c(h, 0.0), c(h, 0.0)]).unwrap();
        let s10 = 10f64.sqrt();
        let expected = [1.0 / s10, 1.0 / s10, 2.0 / s10, 2.0 / s10];
        for (z, e) in w.amplitudes().iter().zip(expected) {
            assert!((z - c(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn unnormalized_inputs_are_rejected() {
        assert!(matches!(
            SystemInit::qubit(c(1.0, 0.0), c(1.0, 0.0)),
            Err(Error::NotNormalized { .. })
        ));
        let sys = SystemInit::qubit(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(matches!(
            tensor_product(&sys, &[c(0.5, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            tensor_product(&sys, &[]),
            Err(Error::ZeroDimension { .. })
        ));
    }

    #[test]
    fn bell_pair_traces_to_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let w = WorldState::new(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)], 2, 2).unwrap();
        let rho = partial_trace_env(&w);
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((rho.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(rho.off_diagonal_magnitude() < 1e-15);
        assert!((rho.linear_entropy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn entropy_of_pure_and_from_decoherence_formula_inputs() {
        let s5 = 5f64.sqrt();
        let sys = SystemInit::qubit(c(1.0 / s5, 0.0), c(2.0 / s5, 0.0)).unwrap();
        let rho = sys.projector();
        assert!(rho.linear_entropy().abs() < 1e-12);
        // |a|² = 1/5, |b|² = 4/5, |z|² = 1: 1 − 1/25 − 16/25 − 8/25 = 0.
        assert!(rho.linear_entropy().abs() < 1e-12);
        assert!((rho.off_diagonal_magnitude() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_of_diagonal_matrix() {
        let mut e = CMatrix::zeros(2, 2);
        e[(0, 0)] = c(0.2, 0.0);
        e[(1, 1)] = c(0.8, 0.0);
        let rho = DensityMatrix::new(e, default_labels(2)).unwrap();
        assert_eq!(rho.off_diagonal_magnitude(), 0.0);
    }

    #[test]
    fn density_matrix_validation() {
        let mut e = CMatrix::zeros(2, 2);
        e[(0, 0)] = c(0.5, 0.0);
        e[(1, 1)] = c(0.6, 0.0);
        assert!(matches!(
            DensityMatrix::new(e.clone(), default_labels(2)),
            Err(Error::BadTrace { .. })
        ));
        e[(1, 1)] = c(0.5, 0.0);
        e[(0, 1)] = c(0.7, 0.0);
        e[(1, 0)] = c(0.7, 0.0);
        assert!(matches!(
            DensityMatrix::new(e.clone(), default_labels(2)),
            Err(Error::NotPositive { .. })
        ));
        e[(1, 0)] = c(0.6, 0.0);
        assert!(matches!(
            DensityMatrix::new(e, default_labels(2)),
            Err(Error::NotHermitian { .. })
        ));
    }

    proptest! {
        #[test]
        fn tensor_product_is_normalized(sys in state_strategy(2..5), env in state_strategy(1..9)) {
            let sys = SystemInit::new(sys).unwrap();
            let w = tensor_product(&sys, &env).unwrap();
            prop_assert!((w.norm_sq() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn product_state_traces_to_rank_one(sys in state_strategy(2..5), env in state_strategy(1..9)) {
            let sys = SystemInit::new(sys).unwrap();
            let rho = partial_trace_env(&tensor_product(&sys, &env).unwrap());
            rho.validate().unwrap();
            let e = rho.eigen().unwrap();
            prop_assert!(e.values[1].abs() <= 1e-12);
            let expected = sys.projector();
            let gap = (rho.entries() - expected.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(gap < 1e-12);
        }

        #[test]
        fn random_world_traces_to_valid_density_matrix(amps in state_strategy(6..7).prop_flat_map(|_| state_strategy(12..13))) {
            let w = WorldState::new(amps, 3, 4).unwrap();
            let rho = partial_trace_env(&w);
            prop_assert!(rho.validate().is_ok());
            let s = rho.linear_entropy();
            prop_assert!((-1e-12..=1.0 - 1.0 / 3.0 + 1e-12).contains(&s));
        }

        #[test]
        fn partial_trace_is_linear(w1 in state_strategy(8..9), w2 in state_strategy(8..9), x in 0.0..1.0f64) {
            // ρ(x w1w1† + (1−x) w2w2†) = x ρ(w1) + (1−x) ρ(w2); build the mixture from the two traces.
            let r1 = partial_trace_env(&WorldState::new(w1.clone(), 2, 4).unwrap());
            let r2 = partial_trace_env(&WorldState::new(w2.clone(), 2, 4).unwrap());
            let mut mixed = CMatrix::zeros(2, 2);
            for s in 0..2 {
                for t in 0..2 {
                    let z1: C64 = (0..4).map(|i| w1[s * 4 + i] * w1[t * 4 + i].conj()).sum();
                    let z2: C64 = (0..4).map(|i| w2[s * 4 + i] * w2[t * 4 + i].conj()).sum();
                    mixed[(s, t)] = z1 * x + z2 * (1.0 - x);
                }
            }
            let combo = r1.entries().scale(x) + r2.entries().scale(1.0 - x);
            let gap = (mixed - combo).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(gap < 1e-14);
        }
    }
}
