//! Closed-form early-time results for a two-level system.
//!
//! Everything is expressed through three environment numbers: the mean
//! energy splitting `β`, the complex second-order coefficient `η`, and
//! `ε = η + η* − β²`, the variance of `H^↓ − H^↑` in the initial environment
//! state. `Δ` is the elapsed time.

use crate::eigensolve;
use crate::hilbert::{default_labels, DensityMatrix, SystemInit};
use crate::model::{EnvironmentSpec, MomentSource};
use crate::{CMatrix, Error, Result, C64};

/// Fraction of the decoherence time below which the expansions are flagged as trusted.
pub const REGIME_FRACTION: f64 = 0.3;

/// Smallest eigenvalue tolerated in a perturbative density matrix.
pub const PSD_TOL: f64 = 1e-10;

/// `||a|² − |b|²|` below which the eigenbasis is reported as ill-conditioned.
pub const BALANCED_TOL: f64 = 1e-9;

/// `β`, `η`, `ε` for one pair of branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitPerturbation {
    pub beta: f64,
    pub eta: C64,
    pub epsilon: f64,
}

impl QubitPerturbation {
    /// Moments already include the coupling; `cross_down_up = ⟨H^↓ H^↑⟩`.
    pub fn from_moments(
        first_up: f64,
        first_down: f64,
        second_up: f64,
        second_down: f64,
        cross_down_up: C64,
    ) -> Self {
        let beta = first_down - first_up;
        let eta = C64::new((second_up + second_down) / 2.0, 0.0) - cross_down_up;
        Self::from_beta_eta(beta, eta)
    }

    pub fn from_beta_eta(beta: f64, eta: C64) -> Self {
        Self {
            beta,
            eta,
            epsilon: 2.0 * eta.re - beta * beta,
        }
    }

    /// Uses branches `up` and `down` of any moment source.
    pub fn from_source<M: MomentSource + ?Sized>(src: &M, up: usize, down: usize) -> Self {
        Self::from_moments(
            src.moment(&[up]).re,
            src.moment(&[down]).re,
            src.moment(&[up, up]).re,
            src.moment(&[down, down]).re,
            src.moment(&[down, up]),
        )
    }

    /// Branches 0 and 1 of a spectral spec.
    pub fn from_spec(spec: &EnvironmentSpec) -> Self {
        Self::from_source(spec, 0, 1)
    }

    /// `Δ_d = √(2 / (η + η*))`.
    pub fn decoherence_time(&self) -> Result<f64> {
        if !(self.eta.re > 0.0) {
            return Err(Error::NoDecay { re_eta: self.eta.re });
        }
        Ok((1.0 / self.eta.re).sqrt())
    }

    /// Whether `delta` lies inside the trusted early-time window.
    pub fn in_regime(&self, delta: f64) -> bool {
        match self.decoherence_time() {
            Ok(td) => delta <= REGIME_FRACTION * td,
            Err(_) => delta == 0.0,
        }
    }
}

pub fn decoherence_time(p: &QubitPerturbation) -> Result<f64> {
    p.decoherence_time()
}

fn pair(sys: &SystemInit) -> Result<(C64, C64)> {
    match sys.coeffs() {
        &[a, b] => Ok((a, b)),
        c => Err(Error::DimensionMismatch {
            what: "qubit coefficients",
            expected: 2,
            actual: c.len(),
        }),
    }
}

/// The expanded matrix without the positivity check.
pub fn rho_perturbative_matrix(sys: &SystemInit, p: &QubitPerturbation, delta: f64) -> Result<CMatrix> {
    let (a, b) = pair(sys)?;
    let phase = C64::new(1.0, p.beta * delta) - p.eta * delta * delta;
    let off = a * b.conj() * phase;
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(a.norm_sqr(), 0.0), off, off.conj(), C64::new(b.norm_sqr(), 0.0)],
    ))
}

/// `ρ(Δ)` through second order; fails with `OutOfRegime` once the
/// truncation stops being positive.
pub fn rho_perturbative(sys: &SystemInit, p: &QubitPerturbation, delta: f64) -> Result<DensityMatrix> {
    if !(delta >= 0.0) {
        return Err(Error::Invalid(format!("Δ must be non-negative, got {delta}")));
    }
    let m = rho_perturbative_matrix(sys, p, delta)?;
    let min_eigenvalue = eigensolve::min_eigenvalue(&m)?;
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::OutOfRegime { min_eigenvalue });
    }
    Ok(DensityMatrix::from_parts(m, default_labels(2)))
}

/// Perturbative eigenvalues and eigenvectors, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitEigenpairs {
    pub p1: f64,
    pub p2: f64,
    /// Components on `(|↑⟩, |↓⟩)`.
    pub psi1: [C64; 2],
    pub psi2: [C64; 2],
    /// `|a|² ≈ |b|²`: values are fine, the vectors are poorly determined.
    pub ill_conditioned: bool,
}

pub fn eigenpairs_perturbative(sys: &SystemInit, p: &QubitPerturbation, delta: f64) -> Result<QubitEigenpairs> {
    let (a, b) = pair(sys)?;
    let scale = p.eta.norm() + p.beta * p.beta;
    if !(p.epsilon > 1e-12 * scale) {
        return Err(Error::NoEinselection { epsilon: p.epsilon });
    }
    if a.norm() == 0.0 {
        return Err(Error::ZeroCoefficient { index: 0 });
    }
    if b.norm() == 0.0 {
        return Err(Error::ZeroCoefficient { index: 1 });
    }
    let (aa, bb) = (a.norm_sqr(), b.norm_sqr());
    let mixing = aa * bb;
    let e = p.epsilon;
    let d2 = delta * delta;
    let p2 = mixing * e * d2;
    let linear = C64::new(1.0, p.beta * delta);

    let up1 = linear + (C64::new(e * (2.0 * mixing + aa) / 2.0, 0.0) - p.eta) * d2;
    let down1 = 1.0 + d2 * e * (2.0 * mixing - aa) / 2.0;
    let g1 = b.conj() / b.norm();
    let psi1 = [g1 * a * up1, g1 * b * down1];

    let up2 = linear + (C64::new(e * (2.0 * mixing + bb) / 2.0, 0.0) - p.eta) * d2;
    let down2 = 1.0 + d2 * e * (2.0 * mixing - bb) / 2.0;
    let g2 = -a / a.norm();
    let psi2 = [g2 * b.conj() * up2, -g2 * a.conj() * down2];

    Ok(QubitEigenpairs {
        p1: 1.0 - p2,
        p2,
        psi1,
        psi2,
        ill_conditioned: (aa - bb).abs() < BALANCED_TOL,
    })
}

/// `b*|↑⟩ − a*|↓⟩`, orthogonal to the initial state.
pub fn copycat_reference(sys: &SystemInit) -> Result<[C64; 2]> {
    let (a, b) = pair(sys)?;
    Ok([b.conj(), -a.conj()])
}

/// `⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩` through second order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinExpectations {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub in_regime: bool,
}

pub fn spin_expectations(sys: &SystemInit, p: &QubitPerturbation, delta: f64) -> Result<SpinExpectations> {
    let (a, b) = pair(sys)?;
    let ab = a * b.conj();
    let abe = ab * p.eta;
    let d2 = delta * delta;
    Ok(SpinExpectations {
        sx: ab.re - p.beta * delta * ab.im - d2 * abe.re,
        sy: -ab.im - p.beta * delta * ab.re + d2 * abe.im,
        sz: (a.norm_sqr() - b.norm_sqr()) / 2.0,
        in_regime: p.in_regime(delta),
    })
}

/// `2|a|²|b|²εΔ²`.
pub fn entropy_perturbative(sys: &SystemInit, p: &QubitPerturbation, delta: f64) -> Result<f64> {
    let (a, b) = pair(sys)?;
    Ok(2.0 * a.norm_sqr() * b.norm_sqr() * p.epsilon * delta * delta)
}

/// Second-order changes in the pointer populations of the two eigenstates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChart {
    pub c1_up: f64,
    pub c1_down: f64,
    pub c2_up: f64,
    pub c2_down: f64,
}

impl SignChart {
    /// Signs as `−1, 0, +1`, treating `|C| ≤ tol` as zero.
    pub fn signs(&self, tol: f64) -> [i8; 4] {
        let sign = |x: f64| {
            if x > tol {
                1
            } else if x < -tol {
                -1
            } else {
                0
            }
        };
        [
            sign(self.c1_up),
            sign(self.c1_down),
            sign(self.c2_up),
            sign(self.c2_down),
        ]
    }
}

pub fn sign_chart(sys: &SystemInit, p: &QubitPerturbation, delta: f64) -> Result<SignChart> {
    let (a, b) = pair(sys)?;
    let (aa, bb) = (a.norm_sqr(), b.norm_sqr());
    let scale = p.epsilon * delta * delta;
    let up = scale * (2.0 * aa * bb - bb);
    let down = scale * (2.0 * aa * bb - aa);
    Ok(SignChart {
        c1_up: up,
        c1_down: down,
        c2_up: down,
        c2_down: up,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(a: f64, b: f64) -> SystemInit {
        SystemInit::qubit(C64::new(a, 0.0), C64::new(b, 0.0)).unwrap()
    }

    fn fifth() -> SystemInit {
        let s5 = 5f64.sqrt();
        sys(1.0 / s5, 2.0 / s5)
    }

    #[test]
    fn identical_branches_do_not_einselect() {
        let p = QubitPerturbation::from_moments(0.3, 0.3, 0.5, 0.5, C64::new(0.5, 0.0));
        assert_eq!(p.beta, 0.0);
        assert_eq!(p.eta, C64::new(0.0, 0.0));
        assert_eq!(p.epsilon, 0.0);
        assert!(matches!(
            eigenpairs_perturbative(&fifth(), &p, 0.1),
            Err(Error::NoEinselection { .. })
        ));
    }

    #[test]
    fn symmetric_two_mode_environment() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = EnvironmentSpec::qubit(vec![1.0, -1.0], vec![C64::new(h, 0.0); 2], 1.0, -1.0).unwrap();
        let p = QubitPerturbation::from_spec(&spec);
        assert_eq!(p.beta, 0.0);
        assert!((p.eta - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((p.epsilon - 4.0).abs() < 1e-15);
        assert!((p.decoherence_time().unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decoherence_time_needs_decay() {
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(1.0, 0.0));
        assert_eq!(p.decoherence_time().unwrap(), 1.0);
        let q = QubitPerturbation::from_beta_eta(0.0, C64::new(-1.0, 0.3));
        assert!(matches!(q.decoherence_time(), Err(Error::NoDecay { .. })));
    }

    #[test]
    fn off_diagonal_vanishes_at_decoherence_time() {
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(0.8, 0.0));
        let td = p.decoherence_time().unwrap();
        let m = rho_perturbative_matrix(&fifth(), &p, td).unwrap();
        assert!(m[(0, 1)].norm() < 1e-15);
        let r0 = rho_perturbative(&fifth(), &p, 0.0).unwrap();
        assert!((r0.entries() - fifth().projector().entries()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn runaway_expansion_is_flagged() {
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(1.0, 0.0));
        assert!(matches!(
            rho_perturbative(&sys(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2), &p, 3.0),
            Err(Error::OutOfRegime { .. })
        ));
    }

    #[test]
    fn eigenvalues_at_small_delta() {
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(2.0, 0.0));
        let e = eigenpairs_perturbative(&fifth(), &p, 0.01).unwrap();
        assert!((e.p2 - 6.4e-5).abs() < 1e-18);
        assert_eq!(e.p1 + e.p2, 1.0);
        assert!(!e.ill_conditioned);

        let e0 = eigenpairs_perturbative(&fifth(), &p, 0.0).unwrap();
        let s = fifth();
        let (a, b) = (s.coeffs()[0], s.coeffs()[1]);
        let overlap1 = e0.psi1[0].conj() * a + e0.psi1[1].conj() * b;
        assert!((overlap1.norm() - 1.0).abs() < 1e-15);
        let r = copycat_reference(&s).unwrap();
        let overlap2 = e0.psi2[0].conj() * r[0] + e0.psi2[1].conj() * r[1];
        assert!((overlap2.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigenvectors_track_numeric_ones_to_third_order() {
        let raw = [C64::new(0.5, 0.3), C64::new(0.4, -0.7)];
        let n = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let s = SystemInit::qubit(raw[0] / n, raw[1] / n).unwrap();
        let p = QubitPerturbation::from_beta_eta(0.37, C64::new(0.9, 0.25));
        let gap = |delta: f64| {
            let e = eigenpairs_perturbative(&s, &p, delta).unwrap();
            let num = eigensolve::eig2(&rho_perturbative_matrix(&s, &p, delta).unwrap()).unwrap();
            let mut worst: f64 = 0.0;
            for (k, psi) in [e.psi1, e.psi2].iter().enumerate() {
                let v = num.vector(k);
                let ov = v[0].conj() * psi[0] + v[1].conj() * psi[1];
                let phase = ov / ov.norm();
                worst = worst.max((psi[0] - phase * v[0]).norm()).max((psi[1] - phase * v[1]).norm());
            }
            worst
        };
        let ratio = gap(1e-2) / gap(5e-3);
        assert!((ratio - 8.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn copycat_is_orthogonal() {
        let r = copycat_reference(&sys(1.0, 0.0)).unwrap();
        assert_eq!(r, [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = copycat_reference(&sys(h, h)).unwrap();
        assert_eq!(r, [C64::new(h, 0.0), C64::new(-h, 0.0)]);
        let s = SystemInit::qubit(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        let r = copycat_reference(&s).unwrap();
        assert!((s.coeffs()[0].conj() * r[0] + s.coeffs()[1].conj() * r[1]).norm() < 1e-16);
    }

    #[test]
    fn spin_values() {
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(2.0, 0.0));
        let s = spin_expectations(&sys(1.0, 0.0), &p, 0.2).unwrap();
        assert_eq!((s.sx, s.sy, s.sz), (0.0, 0.0, 0.5));
        let s = spin_expectations(&fifth(), &p, 0.1).unwrap();
        assert!((s.sx - 0.392).abs() < 1e-15);
        assert_eq!(s.sy, 0.0);
        assert!(s.in_regime);
        assert!(!spin_expectations(&fifth(), &p, 0.5).unwrap().in_regime);
    }

    #[test]
    fn spins_cross_zero_at_decoherence_time() {
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(1.7, 0.0));
        let td = p.decoherence_time().unwrap();
        let s = spin_expectations(&fifth(), &p, td).unwrap();
        assert!(s.sx.abs() < 1e-15 && s.sy.abs() < 1e-15);
    }

    #[test]
    fn entropy_values() {
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(2.0, 0.0));
        assert_eq!(entropy_perturbative(&fifth(), &p, 0.0).unwrap(), 0.0);
        assert!((entropy_perturbative(&fifth(), &p, 0.01).unwrap() - 1.28e-4).abs() < 1e-18);
    }

    #[test]
    fn sign_chart_rows() {
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(2.0, 0.0));
        let s5 = 5f64.sqrt();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(sign_chart(&sys(h, h), &p, 0.1).unwrap().signs(1e-15), [0, 0, 0, 0]);
        assert_eq!(sign_chart(&sys(1.0 / s5, 2.0 / s5), &p, 0.1).unwrap().signs(0.0), [-1, 1, 1, -1]);
        assert_eq!(sign_chart(&sys(2.0 / s5, 1.0 / s5), &p, 0.1).unwrap().signs(0.0), [1, -1, -1, 1]);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let s = SystemInit::equal_cats(3, 3).unwrap();
        let p = QubitPerturbation::from_beta_eta(0.0, C64::new(1.0, 0.0));
        assert!(matches!(rho_perturbative(&s, &p, 0.1), Err(Error::DimensionMismatch { .. })));
    }
}
