//! Non-perturbative observables and einselection metrics.
//!
//! Everything here is evaluated on exact reduced states, either straight
//! from the decoherence factors or from a precomputed `ρ(t)` series.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::eigensolve::{self, EigenDecomposition};
use crate::evolution::TimeGrid;
use crate::hilbert::{DensityMatrix, SystemInit};
use crate::model::EnvironmentSpec;
use crate::qubit::{copycat_reference, QubitPerturbation};
use crate::{Error, Result, C64};

/// Coherence level below which a later rebound counts as a recurrence.
pub const RECURRENCE_DROP: f64 = 0.1;
/// Coherence level a rebound must exceed to be flagged.
pub const RECURRENCE_REBOUND: f64 = 0.5;
/// Einselection is called complete once the coherence falls to `1/e`.
pub const COMPLETION_LEVEL: f64 = 1.0 / std::f64::consts::E;
/// Minimum eigenvalue gap before tracked eigenstates are considered defined.
pub const SEPARATION_TOL: f64 = 1e-12;

/// A named curve sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl CurveSeries {
    pub fn new(
        name: impl Into<String>,
        times: Vec<f64>,
        values: Vec<f64>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Invalid("curve name is empty".into()));
        }
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "curve values",
                expected: times.len(),
                actual: values.len(),
            });
        }
        TimeGrid::new(times.clone())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "curve values" });
        }
        Ok(Self {
            name,
            times,
            values,
            metadata,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `z_{ss'}(t) = Σ_i |α_i|² exp(−i t λ ω_i (f_s − f_{s'}))`.
///
/// Panics if `s` or `s2` is not a system index of `spec`.
pub fn decoherence_factor(spec: &EnvironmentSpec, s: usize, s2: usize, t: f64) -> C64 {
    let f = spec.branch_factors();
    let rate = t * spec.lambda() * (f[s] - f[s2]);
    if rate == 0.0 {
        return C64::new(1.0, 0.0);
    }
    spec.omegas()
        .iter()
        .zip(spec.alphas())
        .map(|(w, a)| {
            let (sin, cos) = (-rate * w).sin_cos();
            C64::new(cos, sin) * a.norm_sqr()
        })
        .sum()
}

/// Shortest pair decoherence time `√(1 / Re η_{ss'})` over populated pairs.
pub fn decoherence_time(sys: &SystemInit, spec: &EnvironmentSpec) -> Result<f64> {
    check_dims(sys, spec)?;
    let d = sys.dim();
    let mut re_eta: f64 = 0.0;
    for s in 0..d {
        for r in s + 1..d {
            if sys.population(s) > 0.0 && sys.population(r) > 0.0 {
                re_eta = re_eta.max(QubitPerturbation::from_source(spec, s, r).eta.re);
            }
        }
    }
    QubitPerturbation::from_beta_eta(0.0, C64::new(re_eta, 0.0)).decoherence_time()
}

fn check_dims(sys: &SystemInit, spec: &EnvironmentSpec) -> Result<()> {
    if sys.dim() != spec.dim_system() {
        return Err(Error::DimensionMismatch {
            what: "branch factors",
            expected: sys.dim(),
            actual: spec.dim_system(),
        });
    }
    Ok(())
}

/// Exact linear entropy `1 − Σ_s |c_s|⁴ − Σ_{s≠s'} |c_s|²|c_{s'}|²|z_{ss'}|²`.
pub fn entropy_np(sys: &SystemInit, spec: &EnvironmentSpec, t: f64) -> Result<f64> {
    check_dims(sys, spec)?;
    let d = sys.dim();
    let pops: Vec<f64> = (0..d).map(|s| sys.population(s)).collect();
    let mut purity: f64 = pops.iter().map(|p| p * p).sum();
    for s in 0..d {
        for r in s + 1..d {
            let w = pops[s] * pops[r];
            if w != 0.0 {
                purity += 2.0 * w * decoherence_factor(spec, s, r, t).norm_sqr();
            }
        }
    }
    Ok(1.0 - purity)
}

fn qubit_pair(sys: &SystemInit) -> Result<(C64, C64)> {
    match sys.coeffs() {
        &[a, b] => Ok((a, b)),
        c => Err(Error::DimensionMismatch {
            what: "qubit system",
            expected: 2,
            actual: c.len(),
        }),
    }
}

/// Exact `⟨S_x⟩ = Re[a b* z(t)]`.
pub fn sx_np(sys: &SystemInit, spec: &EnvironmentSpec, t: f64) -> Result<f64> {
    check_dims(sys, spec)?;
    let (a, b) = qubit_pair(sys)?;
    Ok((a * b.conj() * decoherence_factor(spec, 0, 1, t)).re)
}

/// `⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩` of a two-level reduced state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spin {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// `Tr(ρ S_i)` with `S = σ/2`.
pub fn spin_from_rho(rho: &DensityMatrix) -> Result<Spin> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            what: "spin state",
            expected: 2,
            actual: rho.dim(),
        });
    }
    let off = rho.get(0, 1);
    Ok(Spin {
        x: off.re,
        y: -off.im,
        z: (rho.get(0, 0).re - rho.get(1, 1).re) / 2.0,
    })
}

/// `(|⟨ψ₁|sys⟩|², |⟨ψ₂|copycat⟩|²)` for the two leading eigenvectors.
pub fn copycat_fidelity(decomp: &EigenDecomposition, sys: &SystemInit) -> Result<(f64, f64)> {
    let reference = copycat_reference(sys)?;
    if decomp.vectors.nrows() != 2 || decomp.dim() < 2 {
        return Err(Error::DimensionMismatch {
            what: "copycat decomposition",
            expected: 2,
            actual: decomp.dim(),
        });
    }
    let c = sys.coeffs();
    let overlap = |k: usize, target: &[C64]| -> f64 {
        let v = decomp.vectors.column(k);
        target
            .iter()
            .zip(v.iter())
            .map(|(t, x)| x.conj() * t)
            .sum::<C64>()
            .norm_sqr()
    };
    Ok((overlap(0, c), overlap(1, &reference)))
}

/// Normalized coherence `Σ_{s≠s'} |ρ_{ss'}| / Σ_{s≠s'} |c_s c_{s'}|`.
///
/// Equals `|z(t)|` for a qubit. Returns 0 when the initial state has no
/// coherence at all.
pub fn normalized_coherence(rho: &DensityMatrix, sys: &SystemInit) -> Result<f64> {
    if rho.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            what: "density matrix",
            expected: sys.dim(),
            actual: rho.dim(),
        });
    }
    let c = sys.coeffs();
    let (mut num, mut den) = (0.0, 0.0);
    for s in 0..c.len() {
        for r in s + 1..c.len() {
            num += rho.get(s, r).norm();
            den += (c[s] * c[r].conj()).norm();
        }
    }
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// RMS over the last quarter of the samples (at least one).
pub fn late_time_rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let tail = &values[values.len() - (values.len() / 4).max(1)..];
    (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt()
}

/// `true` if `values` drops below [`RECURRENCE_DROP`] and later climbs back
/// above [`RECURRENCE_REBOUND`].
pub fn has_recurrence(values: &[f64]) -> bool {
    let mut dropped = false;
    for &v in values {
        if v < RECURRENCE_DROP {
            dropped = true;
        } else if dropped && v > RECURRENCE_REBOUND {
            return true;
        }
    }
    false
}

/// A tracked eigenstate whose best overlap fell below the tracking threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEvent {
    pub index: usize,
    pub time: f64,
    /// Tracked position, 0 for the leading state.
    pub state: usize,
}

/// Curves and scalar summaries of einselection along a `ρ(t)` series.
#[derive(Debug, Clone)]
pub struct EinselectionProgress {
    /// `coherence`, `p1..pk`, `pop_psi{k}_{label}` for every populated pointer
    /// state, and `copycat_f1`, `copycat_f2` for qubits.
    pub curves: Vec<CurveSeries>,
    /// First grid index at which the tracked eigenvalues are separated.
    pub tracking_start: Option<usize>,
    pub loss_events: Vec<LossEvent>,
    /// Smallest `|⟨ψ_k(t_i)|ψ_k(t_{i+1})⟩|²` over tracked states and steps.
    pub min_successive_fidelity: f64,
    pub recurrence: bool,
    /// First time the coherence is at or below [`COMPLETION_LEVEL`].
    pub completion_time: Option<f64>,
    /// [`late_time_rms`] of the coherence.
    pub late_coherence_rms: f64,
}

impl EinselectionProgress {
    pub fn curve(&self, name: &str) -> Option<&CurveSeries> {
        self.curves.iter().find(|c| c.name == name)
    }

    /// Loss events strictly before `completion_time` (all of them if the
    /// coherence never reached the completion level).
    pub fn losses_before_completion(&self) -> Vec<LossEvent> {
        self.loss_events
            .iter()
            .filter(|e| self.completion_time.is_none_or(|t| e.time < t))
            .copied()
            .collect()
    }
}

fn separated(values: &[f64], tracked: usize) -> bool {
    (0..tracked)
        .filter(|&k| k + 1 < values.len())
        .all(|k| values[k] - values[k + 1] > SEPARATION_TOL)
}

/// Follows the `tracked` leading eigenstates of `series` along `grid`.
///
/// Before the leading eigenvalues separate (for instance at `t = 0` when the
/// state is pure and `d > 2`), eigenstates are reported in solver order and
/// not tracked.
pub fn einselection_progress(
    grid: &TimeGrid,
    series: &[DensityMatrix],
    sys: &SystemInit,
    tracked: usize,
) -> Result<EinselectionProgress> {
    if series.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            what: "density matrix series",
            expected: grid.len(),
            actual: series.len(),
        });
    }
    let d = sys.dim();
    if tracked == 0 || tracked > d {
        return Err(Error::Invalid(format!("cannot track {tracked} eigenstates of a {d}-level system")));
    }
    let coherence: Vec<f64> = series
        .iter()
        .map(|rho| normalized_coherence(rho, sys))
        .collect::<Result<_>>()?;
    let raw: Vec<EigenDecomposition> = series
        .par_iter()
        .map(|rho| rho.eigen().map(|e| e.leading(tracked)))
        .collect::<Result<_>>()?;

    let mut decomps = Vec::with_capacity(raw.len());
    let mut tracking_start = None;
    let mut loss_events = Vec::new();
    let mut min_successive_fidelity: f64 = 1.0;
    for (i, curr) in raw.into_iter().enumerate() {
        if tracking_start.is_none() {
            if separated(&curr.values, tracked) {
                tracking_start = Some(i);
            }
            decomps.push(curr);
            continue;
        }
        let prev: &EigenDecomposition = &decomps[i - 1];
        let t = eigensolve::track(prev, &curr)?;
        for &state in &t.lost {
            loss_events.push(LossEvent {
                index: i,
                time: grid.times()[i],
                state,
            });
        }
        for k in 0..tracked {
            let f = prev.vectors.column(k).dotc(&t.decomposition.vectors.column(k)).norm_sqr();
            min_successive_fidelity = min_successive_fidelity.min(f);
        }
        decomps.push(t.decomposition);
    }

    let times = grid.times().to_vec();
    let mut curves = Vec::new();
    let mut push = |name: String, values: Vec<f64>| -> Result<()> {
        curves.push(CurveSeries::new(name, times.clone(), values, BTreeMap::new())?);
        Ok(())
    };
    push("coherence".into(), coherence.clone())?;
    for k in 0..tracked {
        push(format!("p{}", k + 1), decomps.iter().map(|e| e.values[k]).collect())?;
    }
    let labels = series[0].basis_labels().to_vec();
    for k in 0..tracked {
        for s in (0..d).filter(|&s| sys.population(s) > 0.0) {
            push(
                format!("pop_psi{}_{}", k + 1, labels[s]),
                decomps.iter().map(|e| e.vectors[(s, k)].norm_sqr()).collect(),
            )?;
        }
    }
    if d == 2 && tracked == 2 {
        let fids: Vec<(f64, f64)> = decomps
            .iter()
            .map(|e| copycat_fidelity(e, sys))
            .collect::<Result<_>>()?;
        push("copycat_f1".into(), fids.iter().map(|f| f.0).collect())?;
        push("copycat_f2".into(), fids.iter().map(|f| f.1).collect())?;
    }

    Ok(EinselectionProgress {
        curves,
        tracking_start,
        loss_events,
        min_successive_fidelity,
        recurrence: has_recurrence(&coherence),
        completion_time: coherence
            .iter()
            .position(|&c| c <= COMPLETION_LEVEL)
            .map(|i| times[i]),
        late_coherence_rms: late_time_rms(&coherence),
    })
}
