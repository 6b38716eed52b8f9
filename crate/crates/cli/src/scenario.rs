//! Evaluating a scenario into curves and writing its files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use copycat_core::analysis::{
    self, einselection_progress, entropy_np, spin_from_rho, CurveSeries, EinselectionProgress,
};
use copycat_core::evolution::{rho_series, TimeGrid};
use copycat_core::hilbert::{DensityMatrix, SystemInit};
use copycat_core::model::{sample_branch_factors, EnvironmentSpec};
use copycat_core::qubit::{self, QubitPerturbation, REGIME_FRACTION};
use copycat_core::C64;
use rayon::prelude::*;

use crate::config::{Axis, BranchFactors, Curve, ScenarioConfig, Spacing, TimeUnit};
use crate::output;
use crate::CliError;

/// Everything a scenario computes, before anything touches the filesystem.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub grid: TimeGrid,
    /// Requested curves, in config order.
    pub curves: Vec<CurveSeries>,
    pub decoherence_time: f64,
    pub branch_factors: Vec<f64>,
    /// Present when any eigenstate curve was requested.
    pub progress: Option<EinselectionProgress>,
    pub notices: Vec<String>,
}

impl ScenarioOutput {
    pub fn curve(&self, name: &str) -> Option<&CurveSeries> {
        self.curves.iter().find(|c| c.name == name)
    }

    /// End of the trusted early-time window.
    pub fn regime_end(&self) -> f64 {
        REGIME_FRACTION * self.decoherence_time
    }

    /// Human-readable run summary.
    pub fn summary(&self) -> Vec<String> {
        let mut lines = vec![
            format!("decoherence time estimate: {}", self.decoherence_time),
            format!(
                "perturbative regime: t <= {} ({} decoherence times)",
                self.regime_end(),
                REGIME_FRACTION
            ),
            format!("grid: {} points on [0, {}]", self.grid.len(), self.grid.last()),
        ];
        if let Some(p) = &self.progress {
            match p.completion_time {
                Some(t) => lines.push(format!("coherence reached 1/e at t = {t}")),
                None => lines.push("coherence stayed above 1/e on this grid".into()),
            }
            if p.recurrence {
                lines.push("coherence recurred after dropping below 0.1; not einselection".into());
            }
            lines.push(format!(
                "tracking: {} loss events ({} before 1/e), min successive fidelity {}",
                p.loss_events.len(),
                p.losses_before_completion().len(),
                p.min_successive_fidelity
            ));
        }
        lines.extend(self.notices.iter().map(|n| format!("notice: {n}")));
        lines
    }
}

pub fn system(config: &ScenarioConfig) -> Result<SystemInit, CliError> {
    let coeffs = config.system.coeffs.iter().map(|&[re, im]| C64::new(re, im)).collect();
    SystemInit::new(coeffs).map_err(|e| CliError::config("system.coeffs", e.to_string()))
}

pub fn environment(config: &ScenarioConfig) -> Result<EnvironmentSpec, CliError> {
    let env = &config.environment;
    let factors = match &env.branch_factors {
        BranchFactors::Explicit(f) => f.clone(),
        BranchFactors::Draw { draw } => sample_branch_factors(config.system.dimension, env.seed, draw.min, draw.max)?,
    };
    EnvironmentSpec::sampled(env.n, env.seed, env.width, env.amp_mode.into(), env.lambda, factors)
        .map_err(|e| CliError::config("environment", e.to_string()))
}

fn time_grid(config: &ScenarioConfig, decoherence_time: f64) -> Result<TimeGrid, CliError> {
    let g = &config.grid;
    let scale = match g.unit {
        TimeUnit::Absolute => 1.0,
        TimeUnit::DecoherenceTime => decoherence_time,
    };
    let grid = match g.spacing {
        Spacing::Linear => TimeGrid::linear(g.t_max * scale, g.points),
        Spacing::Log => TimeGrid::log(g.t_min.unwrap_or(f64::NAN) * scale, g.t_max * scale, g.points),
    };
    grid.map_err(|e| CliError::config("grid", e.to_string()))
}

fn metadata(config: &ScenarioConfig, td: f64, factors: &[f64]) -> BTreeMap<String, String> {
    let env = &config.environment;
    let mut m = BTreeMap::new();
    if let Some(name) = &config.name {
        m.insert("scenario".into(), name.clone());
    }
    m.insert("seed".into(), env.seed.to_string());
    m.insert("n".into(), env.n.to_string());
    m.insert("width".into(), env.width.to_string());
    m.insert("lambda".into(), env.lambda.to_string());
    m.insert("amp_mode".into(), format!("{:?}", env.amp_mode).to_lowercase());
    m.insert(
        "branch_factors".into(),
        factors.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" "),
    );
    m.insert("decoherence_time".into(), td.to_string());
    m
}

fn pointwise<F>(grid: &TimeGrid, f: F) -> Result<Vec<f64>, CliError>
where
    F: Fn(f64) -> copycat_core::Result<f64> + Sync,
{
    grid.times()
        .par_iter()
        .map(|&t| f(t).map_err(CliError::from))
        .collect()
}

fn spin_curve(rho: &[DensityMatrix], axis: Axis) -> Result<Vec<f64>, CliError> {
    rho.iter()
        .map(|r| {
            let s = spin_from_rho(r)?;
            Ok(match axis {
                Axis::X => s.x,
                Axis::Y => s.y,
                Axis::Z => s.z,
            })
        })
        .collect()
}

/// Computes every requested curve. Deterministic for a given config.
pub fn evaluate(config: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    config.validate()?;
    let curves = config.curves()?;
    let sys = system(config)?;
    let spec = environment(config)?;
    let td = analysis::decoherence_time(&sys, &spec)?;
    let grid = time_grid(config, td)?;
    let rho = rho_series(&sys, &spec, &grid)?;
    let meta = metadata(config, td, spec.branch_factors());
    let mut notices = Vec::new();

    let tracked = curves.iter().map(Curve::tracked).max().unwrap_or(0);
    let progress = if tracked > 0 {
        Some(einselection_progress(&grid, &rho, &sys, tracked.max(2).min(sys.dim()))?)
    } else {
        None
    };
    let pert = (sys.dim() == 2).then(|| QubitPerturbation::from_spec(&spec));
    if curves.iter().any(Curve::is_perturbative) && grid.last() > REGIME_FRACTION * td {
        notices.push(format!(
            "perturbative curves beyond t = {} are outside the trusted early-time window",
            REGIME_FRACTION * td
        ));
    }

    let mut out = Vec::with_capacity(curves.len());
    for (name, curve) in config.outputs.curves.iter().zip(&curves) {
        let from_progress = |key: String| -> Vec<f64> {
            let p = progress.as_ref().expect("eigenstate curves imply tracking");
            p.curve(&key).expect("tracked curve present").values.clone()
        };
        let values = match *curve {
            Curve::Coherence => rho
                .iter()
                .map(|r| analysis::normalized_coherence(r, &sys))
                .collect::<copycat_core::Result<_>>()?,
            Curve::EntropyExact => pointwise(&grid, |t| entropy_np(&sys, &spec, t))?,
            Curve::Eigenvalue(k) => from_progress(format!("p{}", k + 1)),
            Curve::Population { state, pointer } => from_progress(format!(
                "pop_psi{}_{}",
                state + 1,
                rho[0].basis_labels()[pointer]
            )),
            Curve::CopycatFidelity(k) => from_progress(format!("copycat_f{}", k + 1)),
            Curve::SpinExact(axis) => spin_curve(&rho, axis)?,
            Curve::EntropyPerturbative => {
                let p = pert.expect("qubit-only curve");
                pointwise(&grid, |t| qubit::entropy_perturbative(&sys, &p, t))?
            }
            Curve::SecondEigenvaluePerturbative => {
                let p = pert.expect("qubit-only curve");
                pointwise(&grid, |t| qubit::eigenpairs_perturbative(&sys, &p, t).map(|e| e.p2))?
            }
            Curve::SpinPerturbative(axis) => {
                let p = pert.expect("qubit-only curve");
                pointwise(&grid, |t| {
                    qubit::spin_expectations(&sys, &p, t).map(|s| match axis {
                        Axis::X => s.sx,
                        Axis::Y => s.sy,
                        Axis::Z => s.sz,
                    })
                })?
            }
        };
        out.push(CurveSeries::new(name.clone(), grid.times().to_vec(), values, meta.clone())?);
    }

    Ok(ScenarioOutput {
        grid,
        curves: out,
        decoherence_time: td,
        branch_factors: spec.branch_factors().to_vec(),
        progress,
        notices,
    })
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Evaluates `config` and writes its CSV (and SVG), with output paths
/// resolved against `base_dir`.
pub fn run(config: &ScenarioConfig, base_dir: &Path) -> Result<(ScenarioOutput, RunFiles), CliError> {
    let result = evaluate(config)?;
    let csv = base_dir.join(&config.outputs.csv_path);
    output::write_atomic(&csv, output::csv_bytes(&result.grid, &result.curves)?.as_slice())?;
    let svg = match &config.outputs.svg_path {
        Some(p) => {
            let path = base_dir.join(p);
            let title = config.name.clone().unwrap_or_else(|| "scenario".into());
            let doc = output::svg_document(&title, &result.curves, &config.outputs, &path)?;
            output::write_atomic(&path, doc.as_bytes())?;
            Some(path)
        }
        None => None,
    };
    Ok((result, RunFiles { csv, svg }))
}
