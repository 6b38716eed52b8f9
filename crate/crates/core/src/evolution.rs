//! Exact time evolution: closed-form spectral phases, a dense
//! eigendecomposition engine used as an oracle, and reduced-state series.

use rayon::prelude::*;

use crate::analysis::decoherence_factor;
use crate::eigensolve::{self, EigenDecomposition};
use crate::hilbert::{default_labels, partial_trace_env, tensor_product, DensityMatrix, SystemInit, WorldState};
use crate::model::{build_rcl, DenseBranches, EnvironmentSpec, RclHamiltonian};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Largest world dimension the dense engine accepts.
pub const DENSE_MAX_DIM: usize = 256;

/// Strictly increasing sample times starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        match times.first() {
            None => return Err(Error::BadGrid { reason: "empty grid".into() }),
            Some(&t0) if t0 != 0.0 => {
                return Err(Error::BadGrid {
                    reason: format!("grid must start at 0, starts at {t0}"),
                })
            }
            _ => {}
        }
        if let Some(k) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::BadGrid {
                reason: format!("time {k} is not finite"),
            });
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::BadGrid {
                reason: format!("times not strictly increasing at index {}", k + 1),
            });
        }
        Ok(Self { times })
    }

    /// `points` evenly spaced times on `[0, t_max]`.
    pub fn linear(t_max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::BadGrid {
                reason: format!("need at least 2 points, got {points}"),
            });
        }
        let step = t_max / (points - 1) as f64;
        Self::new((0..points).map(|k| k as f64 * step).collect())
    }

    /// 0 followed by `points − 1` log-spaced times from `t_min` to `t_max`.
    pub fn log(t_min: f64, t_max: f64, points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::BadGrid {
                reason: format!("log grid needs at least 3 points, got {points}"),
            });
        }
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(Error::BadGrid {
                reason: format!("log grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"),
            });
        }
        let (lo, hi) = (t_min.ln(), t_max.ln());
        let m = points - 1;
        let mut times = vec![0.0];
        times.extend((0..m).map(|k| (lo + (hi - lo) * k as f64 / (m - 1) as f64).exp()));
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.times.last().expect("grid is never empty")
    }
}

/// Multiplies every amplitude by `exp(−i E t)` with `E` from the absolute time `t`.
pub fn evolve_spectral(w0: &WorldState, h: &RclHamiltonian, t: f64) -> Result<WorldState> {
    if w0.dim_system() != h.dim_system() || w0.dim_env() != h.dim_env() {
        return Err(Error::DimensionMismatch {
            what: "world state vs Hamiltonian",
            expected: h.dim_system() * h.dim_env(),
            actual: w0.dim(),
        });
    }
    let amplitudes = w0
        .amplitudes()
        .iter()
        .zip(h.energies())
        .map(|(a, e)| a * C64::from_polar(1.0, -e * t))
        .collect();
    WorldState::new(amplitudes, w0.dim_system(), w0.dim_env())
}

/// `exp(−iHt)` through a cached Hermitian eigendecomposition.
#[derive(Debug, Clone)]
pub struct DenseEvolver {
    eigen: EigenDecomposition,
}

impl DenseEvolver {
    pub fn new(h: &CMatrix) -> Result<Self> {
        let dim = h.nrows();
        if dim > DENSE_MAX_DIM {
            return Err(Error::TooLarge {
                dim,
                cap: DENSE_MAX_DIM,
            });
        }
        Ok(Self {
            eigen: eigensolve::eigh(h)?,
        })
    }

    pub fn evolve(&self, w0: &WorldState, t: f64) -> Result<WorldState> {
        let v = &self.eigen.vectors;
        if w0.dim() != v.nrows() {
            return Err(Error::DimensionMismatch {
                what: "world state vs Hamiltonian",
                expected: v.nrows(),
                actual: w0.dim(),
            });
        }
        let out = self.propagate(&CVector::from_column_slice(w0.amplitudes()), t);
        WorldState::new(out.as_slice().to_vec(), w0.dim_system(), w0.dim_env())
    }

    fn propagate(&self, psi: &CVector, t: f64) -> CVector {
        let v = &self.eigen.vectors;
        let mut coords = v.ad_mul(psi);
        for (c, e) in coords.iter_mut().zip(&self.eigen.values) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        v * coords
    }
}

pub fn evolve_dense(w0: &WorldState, h_dense: &CMatrix, t: f64) -> Result<WorldState> {
    DenseEvolver::new(h_dense)?.evolve(w0, t)
}

/// Exact reduced states for non-commuting branch Hamiltonians, evolving each
/// branch `exp(−iλH_s t)|E⟩` separately.
#[derive(Debug, Clone)]
pub struct BranchEvolver {
    branches: Vec<DenseEvolver>,
    state: CVector,
}

impl BranchEvolver {
    pub fn new(src: &DenseBranches) -> Result<Self> {
        let branches = src
            .hamiltonians()
            .iter()
            .map(|h| DenseEvolver::new(&h.scale(src.lambda())))
            .collect::<Result<_>>()?;
        Ok(Self {
            branches,
            state: src.state().clone(),
        })
    }

    pub fn rho(&self, sys: &SystemInit, t: f64) -> Result<DensityMatrix> {
        let d = sys.dim();
        if d != self.branches.len() {
            return Err(Error::DimensionMismatch {
                what: "system coefficients vs branches",
                expected: self.branches.len(),
                actual: d,
            });
        }
        let evolved: Vec<CVector> = self
            .branches
            .iter()
            .map(|b| b.propagate(&self.state, t))
            .collect();
        let c = sys.coeffs();
        let mut entries = CMatrix::zeros(d, d);
        for s in 0..d {
            entries[(s, s)] = C64::new(c[s].norm_sqr(), 0.0);
            for r in s + 1..d {
                let z = c[s] * c[r].conj() * evolved[r].dotc(&evolved[s]);
                entries[(s, r)] = z;
                entries[(r, s)] = z.conj();
            }
        }
        Ok(DensityMatrix::from_parts(entries, default_labels(d)))
    }
}

fn check_dims(sys: &SystemInit, spec: &EnvironmentSpec) -> Result<()> {
    if sys.dim() != spec.dim_system() {
        return Err(Error::DimensionMismatch {
            what: "system coefficients vs branch factors",
            expected: spec.dim_system(),
            actual: sys.dim(),
        });
    }
    Ok(())
}

/// `ρ_s(t)` from the decoherence factors, skipping unpopulated pairs.
pub fn rho_at(sys: &SystemInit, spec: &EnvironmentSpec, t: f64) -> Result<DensityMatrix> {
    check_dims(sys, spec)?;
    Ok(rho_unchecked(sys, spec, t))
}

fn rho_unchecked(sys: &SystemInit, spec: &EnvironmentSpec, t: f64) -> DensityMatrix {
    let c = sys.coeffs();
    let d = c.len();
    let mut entries = CMatrix::zeros(d, d);
    for s in 0..d {
        entries[(s, s)] = C64::new(c[s].norm_sqr(), 0.0);
        for r in s + 1..d {
            let amp = c[s] * c[r].conj();
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let z = amp * decoherence_factor(spec, s, r, t);
            entries[(s, r)] = z;
            entries[(r, s)] = z.conj();
        }
    }
    DensityMatrix::from_parts(entries, default_labels(d))
}

/// `ρ_s(t)` at every grid point, evaluated in parallel.
pub fn rho_series(sys: &SystemInit, spec: &EnvironmentSpec, grid: &TimeGrid) -> Result<Vec<DensityMatrix>> {
    check_dims(sys, spec)?;
    Ok(grid
        .times()
        .par_iter()
        .map(|&t| rho_unchecked(sys, spec, t))
        .collect())
}

/// The same series through explicit world states; `O(d N)` memory per point.
pub fn rho_series_via_states(
    sys: &SystemInit,
    spec: &EnvironmentSpec,
    grid: &TimeGrid,
) -> Result<Vec<DensityMatrix>> {
    check_dims(sys, spec)?;
    let w0 = tensor_product(sys, spec.alphas())?;
    let h = build_rcl(spec);
    grid.times()
        .iter()
        .map(|&t| evolve_spectral(&w0, &h, t).map(|w| partial_trace_env(&w)))
        .collect()
}
