//! Closed-form early-time results for a three-level system.
//!
//! Basis order is `|1⟩, |0⟩, |−1⟩` (indices 0, 1, 2) with initial
//! coefficients `a, b, c`. Each ordered pair of levels carries its own
//! environment numbers `β, η, ε, ν, κ`; the pairs are `10 = (0, 1)`,
//! `1−1 = (0, 2)` and `0−1 = (1, 2)`.
//!
//! The density matrix is expanded to `Δ⁴`; eigenvalues and eigenvectors are
//! reported to `Δ²`. The two small eigenvalues split at `O(Δ²)`, so their
//! eigenvectors depend on `Δ³` and `Δ⁴` corrections to those eigenvalues;
//! these come from the characteristic polynomial, expanded with
//! [`Series`] arithmetic.

use crate::eigensolve;
use crate::hilbert::{default_labels, DensityMatrix, SystemInit};
use crate::model::{EnvironmentSpec, MomentSource};
use crate::{CMatrix, Error, Result, C64};

/// Relative tolerance for `β_{0−1} + β_{10} − β_{1−1} = 0`.
pub const BETA_SUM_TOL: f64 = 1e-12;

/// `Λ < DEGENERACY_RATIO · λ₁²` marks the two small eigenvalues as degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-14;

/// Relative slack before a negative `Λ` is treated as an error.
pub const LAMBDA_TOL: f64 = 1e-12;

/// Smallest eigenvalue tolerated in a perturbative density matrix.
pub const PSD_TOL: f64 = 1e-10;

const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Truncated power series in `Δ`, coefficients of `Δ⁰ … Δ⁶`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series(pub [C64; 7]);

impl Series {
    pub const ORDER: usize = 6;

    pub fn constant(x: C64) -> Self {
        let mut s = [C64::new(0.0, 0.0); 7];
        s[0] = x;
        Series(s)
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.0[k]
    }

    pub fn conj(&self) -> Self {
        Series(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, x: C64) -> Self {
        Series(self.0.map(|z| z * x))
    }

    pub fn eval(&self, delta: f64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, z| acc * delta + z)
    }
}

impl std::ops::Add for Series {
    type Output = Series;
    fn add(self, rhs: Series) -> Series {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Series(out)
    }
}

impl std::ops::Sub for Series {
    type Output = Series;
    fn sub(self, rhs: Series) -> Series {
        self + rhs.scale(re(-1.0))
    }
}

impl std::ops::Mul for Series {
    type Output = Series;
    fn mul(self, rhs: Series) -> Series {
        let mut out = [C64::new(0.0, 0.0); 7];
        for (i, x) in self.0.iter().enumerate() {
            for (j, y) in rhs.0.iter().enumerate().take(7 - i) {
                out[i + j] += x * y;
            }
        }
        Series(out)
    }
}

/// Environment numbers for one ordered pair of levels `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairParams {
    pub beta: f64,
    pub eta: C64,
    pub epsilon: f64,
    pub nu: C64,
    pub kappa: C64,
}

impl PairParams {
    /// `ε` is derived from `β` and `η`.
    pub fn new(beta: f64, eta: C64, nu: C64, kappa: C64) -> Self {
        Self {
            beta,
            eta,
            epsilon: 2.0 * eta.re - beta * beta,
            nu,
            kappa,
        }
    }

    /// Moments of branches `i` and `j`, coupling included.
    pub fn from_source<M: MomentSource + ?Sized>(src: &M, i: usize, j: usize) -> Self {
        let m = |w: &[usize]| src.moment(w);
        let beta = (m(&[j]) - m(&[i])).re;
        let eta = (m(&[i, i]) + m(&[j, j])) / 2.0 - m(&[j, i]);
        let nu = (m(&[i, i, i]) - m(&[j, j, j])) / 6.0 + (m(&[j, j, i]) - m(&[j, i, i])) / 2.0;
        let kappa = (m(&[i, i, i, i]) + m(&[j, j, j, j])) / 24.0
            - (m(&[j, j, j, i]) + m(&[j, i, i, i])) / 6.0
            + m(&[j, j, i, i]) / 4.0;
        Self::new(beta, eta, nu, kappa)
    }

    /// `1 + iβΔ − ηΔ² + iνΔ³ + κΔ⁴` as a series.
    pub fn series(&self) -> Series {
        let mut s = Series::constant(re(1.0));
        s.0[1] = I * self.beta;
        s.0[2] = -self.eta;
        s.0[3] = I * self.nu;
        s.0[4] = self.kappa;
        s
    }

    /// The same factor evaluated at `delta`.
    pub fn factor(&self, delta: f64) -> C64 {
        self.series().eval(delta)
    }

    fn is_real(&self, tol: f64) -> bool {
        self.eta.im.abs() <= tol && self.nu.im.abs() <= tol && self.kappa.im.abs() <= tol
    }
}

/// Parameters of the three level pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritPairParams {
    /// Pair `(|1⟩, |0⟩)`.
    pub p10: PairParams,
    /// Pair `(|1⟩, |−1⟩)`.
    pub p1m: PairParams,
    /// Pair `(|0⟩, |−1⟩)`.
    pub p0m: PairParams,
}

impl QutritPairParams {
    /// Checks `β_{0−1} + β_{10} − β_{1−1} = 0`.
    pub fn new(p10: PairParams, p1m: PairParams, p0m: PairParams) -> Result<Self> {
        let params = Self { p10, p1m, p0m };
        let residual = params.beta_sum_residual();
        let scale = p10.beta.abs().max(p1m.beta.abs()).max(p0m.beta.abs());
        if residual.abs() > BETA_SUM_TOL * scale {
            return Err(Error::InconsistentMoments { residual });
        }
        Ok(params)
    }

    /// `β_{0−1} + β_{10} − β_{1−1}`.
    pub fn beta_sum_residual(&self) -> f64 {
        self.p0m.beta + self.p10.beta - self.p1m.beta
    }

    pub fn is_real(&self, tol: f64) -> bool {
        [self.p10, self.p1m, self.p0m].iter().all(|p| p.is_real(tol))
    }

    /// Shortest pair decoherence time `√(1 / Re η)`.
    pub fn decoherence_time(&self) -> Result<f64> {
        let re_eta = [self.p10, self.p1m, self.p0m]
            .iter()
            .map(|p| p.eta.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(re_eta > 0.0) {
            return Err(Error::NoDecay { re_eta });
        }
        Ok((1.0 / re_eta).sqrt())
    }

    /// `(pair, i, j)` in matrix-index form.
    pub fn pairs(&self) -> [(&PairParams, usize, usize); 3] {
        [(&self.p10, 0, 1), (&self.p1m, 0, 2), (&self.p0m, 1, 2)]
    }
}

/// Pair parameters for branches `levels = [|1⟩, |0⟩, |−1⟩]` of a moment source.
pub fn qutrit_params<M: MomentSource + ?Sized>(src: &M, levels: [usize; 3]) -> Result<QutritPairParams> {
    let [one, zero, minus] = levels;
    QutritPairParams::new(
        PairParams::from_source(src, one, zero),
        PairParams::from_source(src, one, minus),
        PairParams::from_source(src, zero, minus),
    )
}

/// Branches 0, 1, 2 of a three-level spectral spec.
pub fn qutrit_params_from_spec(spec: &EnvironmentSpec) -> Result<QutritPairParams> {
    if spec.dim_system() != 3 {
        return Err(Error::DimensionMismatch {
            what: "branch factors",
            expected: 3,
            actual: spec.dim_system(),
        });
    }
    qutrit_params(spec, [0, 1, 2])
}

fn triple(sys: &SystemInit) -> Result<[C64; 3]> {
    match sys.coeffs() {
        &[a, b, c] => Ok([a, b, c]),
        c => Err(Error::DimensionMismatch {
            what: "qutrit coefficients",
            expected: 3,
            actual: c.len(),
        }),
    }
}

/// Matrix of environment factors `F` with `ρ_ij = c_i c_j* F_ij`.
fn factor_series(params: &QutritPairParams) -> [[Series; 3]; 3] {
    let one = Series::constant(re(1.0));
    let mut f = [[one; 3]; 3];
    for (p, i, j) in params.pairs() {
        let s = p.series();
        f[i][j] = s;
        f[j][i] = s.conj();
    }
    f
}

/// The expanded matrix without the positivity check.
pub fn rho_qutrit_matrix(sys: &SystemInit, params: &QutritPairParams, delta: f64) -> Result<CMatrix> {
    let c = triple(sys)?;
    let mut m = CMatrix::from_fn(3, 3, |i, j| c[i] * c[j].conj());
    for i in 0..3 {
        m[(i, i)].im = 0.0;
    }
    for (p, i, j) in params.pairs() {
        let z = m[(i, j)] * p.factor(delta);
        m[(i, j)] = z;
        m[(j, i)] = z.conj();
    }
    Ok(m)
}

pub fn rho_qutrit_perturbative(sys: &SystemInit, params: &QutritPairParams, delta: f64) -> Result<DensityMatrix> {
    if !(delta >= 0.0) {
        return Err(Error::Invalid(format!("Δ must be non-negative, got {delta}")));
    }
    let m = rho_qutrit_matrix(sys, params, delta)?;
    let min_eigenvalue = eigensolve::min_eigenvalue(&m)?;
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::OutOfRegime { min_eigenvalue });
    }
    Ok(DensityMatrix::from_parts(m, default_labels(3)))
}

/// Second-order eigenvalue coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritEigenvalues {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub big_lambda: f64,
    /// `p₂` and `p₃` coincide at this order.
    pub degenerate: bool,
}

fn populations(c: &[C64; 3]) -> [f64; 3] {
    c.map(|z| z.norm_sqr())
}

/// `λ₁`, `Λ`.
fn lambda_parts(pops: [f64; 3], params: &QutritPairParams) -> (f64, f64) {
    let [a2, b2, c2] = pops;
    let (p10, p1m, p0m) = (&params.p10, &params.p1m, &params.p0m);
    let lambda1 = a2 * b2 * p10.epsilon + a2 * c2 * p1m.epsilon + b2 * c2 * p0m.epsilon;
    let (e10, e1m, e0m) = (p10.eta, p1m.eta, p0m.eta);
    let (b10, b1m, b0m) = (p10.beta, p1m.beta, p0m.beta);
    let cross = b10 * b1m * e0m.re + b0m * b1m * e10.re - b0m * b10 * e1m.re
        - (e0m * e10).re
        - (e1m * e0m.conj()).re
        - (e1m * e10.conj()).re;
    let bracket = e0m.norm_sqr() + e10.norm_sqr() + e1m.norm_sqr() + 2.0 * cross;
    (lambda1, lambda1 * lambda1 + 4.0 * a2 * b2 * c2 * bracket)
}

fn eigen_coefficients(pops: [f64; 3], params: &QutritPairParams) -> Result<(f64, f64, f64, f64, bool)> {
    let (lambda1, big_lambda) = lambda_parts(pops, params);
    let scale = lambda1 * lambda1;
    if big_lambda < -LAMBDA_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NegativeLambda { lambda: big_lambda });
    }
    let root = big_lambda.max(0.0).sqrt();
    let degenerate = big_lambda < DEGENERACY_RATIO * scale || scale == 0.0;
    Ok((
        lambda1,
        (lambda1 + root) / 2.0,
        (lambda1 - root) / 2.0,
        big_lambda,
        degenerate,
    ))
}

pub fn qutrit_eigenvalues(sys: &SystemInit, params: &QutritPairParams, delta: f64) -> Result<QutritEigenvalues> {
    let c = triple(sys)?;
    let (lambda1, lambda2, lambda3, big_lambda, degenerate) = eigen_coefficients(populations(&c), params)?;
    let d2 = delta * delta;
    Ok(QutritEigenvalues {
        p1: 1.0 - d2 * lambda1,
        p2: d2 * lambda2,
        p3: d2 * lambda3,
        lambda1,
        lambda2,
        lambda3,
        big_lambda,
        degenerate,
    })
}

/// Expansion coefficients of `(x, y, 1)`-type eigenvectors: the component
/// is `w₀ + i w₁ Δ + w₂ Δ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentSeries {
    pub w0: C64,
    pub w1: C64,
    pub w2: C64,
}

/// Workspace for one of the two small eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchWorkspace {
    /// `p / Δ²` at leading order.
    pub lambda: f64,
    /// `Δ³` and `Δ⁴` coefficients of the eigenvalue.
    pub p3: C64,
    pub p4: C64,
    pub u: ComponentSeries,
    pub v: ComponentSeries,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Everything needed to assemble the perturbative eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritEigenWorkspace {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub big_lambda: f64,
    pub delta1: C64,
    pub delta2: C64,
    pub delta3: C64,
    pub delta4: C64,
    pub delta5: C64,
    pub x: ComponentSeries,
    pub y: ComponentSeries,
    pub n0: f64,
    pub n2: f64,
    pub second: BranchWorkspace,
    pub third: BranchWorkspace,
    pub degenerate: bool,
}

/// `Im[u₁u₀*] + Im[v₁v₀*]`: the linear real drift of a small-eigenvalue eigenvector.
pub fn linear_term_m1(branch: &BranchWorkspace) -> f64 {
    (branch.u.w1 * branch.u.w0.conj()).im + (branch.v.w1 * branch.v.w0.conj()).im
}

/// `e₂` (sum of principal 2×2 minors) and `det` of `ρ` as series in `Δ`.
fn characteristic_series(pops: [f64; 3], params: &QutritPairParams) -> (Series, Series) {
    let f = factor_series(params);
    let one = Series::constant(re(1.0));
    let mut e2 = Series::constant(re(0.0));
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        e2 = e2 + (one - f[i][j] * f[j][i]).scale(re(pops[i] * pops[j]));
    }
    let det = one + f[0][1] * f[1][2] * f[2][0] + f[0][2] * f[1][0] * f[2][1]
        - f[0][1] * f[1][0]
        - f[0][2] * f[2][0]
        - f[1][2] * f[2][1];
    (e2, det.scale(re(pops[0] * pops[1] * pops[2])))
}

pub fn qutrit_workspace(sys: &SystemInit, params: &QutritPairParams) -> Result<QutritEigenWorkspace> {
    let coeffs = triple(sys)?;
    for (index, z) in coeffs.iter().enumerate() {
        if z.norm() == 0.0 {
            return Err(Error::ZeroCoefficient { index });
        }
    }
    let [a, b, c] = coeffs;
    let pops = populations(&coeffs);
    let [a2, b2, c2] = pops;
    let (lambda1, lambda2, lambda3, big_lambda, degenerate) = eigen_coefficients(pops, params)?;

    let (p10, p1m, p0m) = (&params.p10, &params.p1m, &params.p0m);
    let (b10, b1m, b0m) = (p10.beta, p1m.beta, p0m.beta);
    let (e10, e1m, e0m) = (p10.eta, p1m.eta, p0m.eta);
    let (n10, n1m, n0m) = (p10.nu, p1m.nu, p0m.nu);
    let (k10, k1m, k0m) = (p10.kappa, p1m.kappa, p0m.kappa);

    let delta1 = b0m * b10 + e0m.conj() + e10.conj() - e1m.conj();
    let delta2 = b1m * e0m - b0m * e1m.conj() + n0m + n10.conj() - n1m.conj();
    let delta3 = b10 * e0m.conj() + b0m * e10.conj() - n0m.conj() - n10.conj() + n1m.conj();
    let delta4 = b1m * n0m + b0m * n1m.conj() + e0m * e1m.conj() + k0m - k10.conj() + k1m.conj();
    let delta5 = b10 * n0m.conj() + b0m * n10.conj() - e0m.conj() * e10.conj() - k0m.conj() - k10.conj()
        + k1m.conj();

    // Top eigenvector, gauge with the |−1⟩ component equal to 1.
    let boc = b / c;
    let aoc = a / c;
    let y0 = boc;
    let y1 = boc * (b1m - b10);
    let y2 = boc
        * (re((b10 - b1m) * b1m) + e1m.conj() - e10.conj() + (delta1 - p0m.epsilon) * c2 + delta1 * b2);
    let x0 = aoc;
    let x1 = aoc * b1m;
    let x2 = aoc / a2
        * (re(-lambda1) - c * b.conj() * y2 + (e0m.conj() - b0m * b0m) * b2 + (e1m.conj() - b1m * b1m) * a2);
    let x = ComponentSeries { w0: x0, w1: x1, w2: x2 };
    let y = ComponentSeries { w0: y0, w1: y1, w2: y2 };
    let (n0, _, n2) = norm_coefficients(&x, &y);

    let (e2, det) = characteristic_series(pops, params);
    let branch = |lambda: f64| -> BranchWorkspace {
        let (p3, p4) = if degenerate {
            (re(0.0), re(0.0))
        } else {
            let split = re(2.0 * lambda) - e2.coeff(2);
            let s3 = e2.coeff(3);
            let s4 = e2.coeff(4);
            let p3 = (s3 * lambda - det.coeff(5)) / split;
            let p4 = (re(lambda.powi(3)) + s3 * p3 + s4 * lambda - det.coeff(6) - p3 * p3) / split;
            (p3, p4)
        };
        // Ṽ = (c/b)V is a ratio of two series that both start at Δ².
        let num2 = re(lambda) + (delta1 - p0m.epsilon) * c2;
        let num3 = p3 - I * (re(lambda * b10) - delta2 * c2);
        let num4 = p4 - I * b10 * p3 - (e10.conj() * lambda - delta4 * c2);
        let den2 = re(lambda) - delta1 * b2;
        let den3 = p3 - I * (re(lambda * b1m) - delta3 * b2);
        let den4 = p4 - I * b1m * p3 - (delta5 * b2 + e1m.conj() * lambda);
        let t0 = num2 / den2;
        let t1 = (num3 - t0 * den3) / den2;
        let t2 = (num4 - t0 * den4 - t1 * den3) / den2;
        let v0 = boc * t0;
        let v1 = boc * t1 / I;
        let v2 = boc * t2;

        let pre = -1.0 / (c * a.conj());
        let cb = c * b.conj();
        let u0 = pre * (c2 + v0 * cb);
        let u1 = pre * (c2 * b1m + cb * (v1 + v0 * (b1m - b0m)));
        let u2 = -pre
            * (re(lambda) + (e1m - p1m.epsilon) * c2
                - cb * (v2 + v1 * (b0m - b1m) + v0 * (b0m * b1m + p1m.epsilon - e1m - e0m.conj())));
        let u = ComponentSeries { w0: u0, w1: u1, w2: u2 };
        let v = ComponentSeries { w0: v0, w1: v1, w2: v2 };
        let (m0, m1, m2) = norm_coefficients(&u, &v);
        BranchWorkspace {
            lambda,
            p3,
            p4,
            u,
            v,
            m0,
            m1,
            m2,
        }
    };

    Ok(QutritEigenWorkspace {
        lambda1,
        lambda2,
        lambda3,
        big_lambda,
        delta1,
        delta2,
        delta3,
        delta4,
        delta5,
        x,
        y,
        n0,
        n2,
        second: branch(lambda2),
        third: branch(lambda3),
        degenerate,
    })
}

/// `‖(x, y, 1)‖² = M₀² − 2M₁Δ + M₂Δ² + O(Δ³)`; returns `(M₀, M₁, M₂)`.
fn norm_coefficients(x: &ComponentSeries, y: &ComponentSeries) -> (f64, f64, f64) {
    let m0 = (1.0 + x.w0.norm_sqr() + y.w0.norm_sqr()).sqrt();
    let m1 = (x.w1 * x.w0.conj()).im + (y.w1 * y.w0.conj()).im;
    let m2 = x.w1.norm_sqr() + y.w1.norm_sqr() + 2.0 * (x.w0 * x.w2.conj()).re + 2.0 * (y.w0 * y.w2.conj()).re;
    (m0, m1, m2)
}

/// Normalized `(x, y, 1)` truncated at `Δ²`.
fn assemble(x: &ComponentSeries, y: &ComponentSeries, delta: f64) -> [C64; 3] {
    let (m0, m1, m2) = norm_coefficients(x, y);
    let lin = m1 / (m0 * m0);
    let quad = 1.5 * lin * lin - m2 / (2.0 * m0 * m0);
    let component = |w: &ComponentSeries| {
        (w.w0 + (I * w.w1 + w.w0 * lin) * delta + (w.w2 + I * w.w1 * lin + w.w0 * quad) * delta * delta) / m0
    };
    let last = ComponentSeries {
        w0: re(1.0),
        w1: re(0.0),
        w2: re(0.0),
    };
    [component(x), component(y), component(&last)]
}

/// Perturbative eigenvectors on `(|1⟩, |0⟩, |−1⟩)`, descending eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritEigenvectors {
    pub psi: [[C64; 3]; 3],
    /// `ψ₂, ψ₃` only span the right subspace; individually they are arbitrary.
    pub degenerate: bool,
}

pub fn qutrit_eigenvectors(sys: &SystemInit, params: &QutritPairParams, delta: f64) -> Result<QutritEigenvectors> {
    let ws = qutrit_workspace(sys, params)?;
    Ok(eigenvectors_from_workspace(&ws, delta))
}

pub fn eigenvectors_from_workspace(ws: &QutritEigenWorkspace, delta: f64) -> QutritEigenvectors {
    let psi1 = assemble(&ws.x, &ws.y, delta);
    let (psi2, psi3) = if ws.degenerate {
        complement_basis(&psi1)
    } else {
        (
            assemble(&ws.second.u, &ws.second.v, delta),
            assemble(&ws.third.u, &ws.third.v, delta),
        )
    };
    QutritEigenvectors {
        psi: [psi1, psi2, psi3],
        degenerate: ws.degenerate,
    }
}

/// Any orthonormal pair orthogonal to `v`.
fn complement_basis(v: &[C64; 3]) -> ([C64; 3], [C64; 3]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v = v.map(|z| z / norm);
    let k = (0..3)
        .min_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
        .unwrap_or(0);
    let mut e = [re(0.0); 3];
    e[k] = re(1.0);
    let proj: C64 = v.iter().zip(&e).map(|(x, y)| x.conj() * y).sum();
    let mut w: [C64; 3] = std::array::from_fn(|i| e[i] - v[i] * proj);
    let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    w = w.map(|z| z / wn);
    // v* × w* is orthogonal to both.
    let t = [
        (v[1] * w[2] - v[2] * w[1]).conj(),
        (v[2] * w[0] - v[0] * w[2]).conj(),
        (v[0] * w[1] - v[1] * w[0]).conj(),
    ];
    (w, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AmpMode, DenseBranches};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn normalized(v: [C64; 3]) -> SystemInit {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        SystemInit::new(v.iter().map(|z| z / n).collect()).unwrap()
    }

    #[test]
    fn series_product_truncates() {
        let mut x = Series::constant(re(1.0));
        x.0[1] = re(1.0);
        let mut p = Series::constant(re(1.0));
        for _ in 0..8 {
            p = p * x;
        }
        // (1 + Δ)⁸ truncated at Δ⁶.
        let binom = [1.0, 8.0, 28.0, 56.0, 70.0, 56.0, 28.0];
        for k in 0..7 {
            assert_eq!(p.coeff(k), re(binom[k]));
        }
        assert_eq!(x.eval(0.5), re(1.5));
    }

    #[test]
    fn equal_branches_give_zero_parameters() {
        let spec = EnvironmentSpec::sampled(9, 2, 1.0, AmpMode::Random, 1.0, vec![0.4, 0.4, 0.4]).unwrap();
        let q = qutrit_params_from_spec(&spec).unwrap();
        for p in [q.p10, q.p1m, q.p0m] {
            assert!(p.beta.abs() < 1e-15);
            assert!(p.eta.norm() < 1e-15);
            assert!(p.epsilon.abs() < 1e-15);
            assert!(p.nu.norm() < 1e-15);
            assert!(p.kappa.norm() < 1e-15);
        }
    }

    #[test]
    fn symmetric_spectrum_pair_variances() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = EnvironmentSpec::new(vec![1.0, -1.0], vec![c(h, 0.0); 2], 1.0, vec![1.0, 0.5, -1.0]).unwrap();
        let q = qutrit_params_from_spec(&spec).unwrap();
        for p in [q.p10, q.p1m, q.p0m] {
            assert_eq!(p.beta, 0.0);
        }
        assert!((q.p10.epsilon - 0.25).abs() < 1e-15);
        assert!((q.p1m.epsilon - 4.0).abs() < 1e-15);
        assert!((q.p0m.epsilon - 2.25).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_betas_are_rejected() {
        let p = |b: f64| PairParams::new(b, re(1.0), re(0.0), re(0.0));
        assert!(matches!(
            QutritPairParams::new(p(0.1), p(0.2), p(0.3)),
            Err(Error::InconsistentMoments { .. })
        ));
        assert!(QutritPairParams::new(p(0.1), p(0.4), p(0.3)).is_ok());
    }

    #[test]
    fn matrix_at_zero_is_projector() {
        let sys = normalized([c(0.3, 0.1), c(-0.5, 0.2), c(0.4, -0.6)]);
        let spec = EnvironmentSpec::sampled(7, 5, 1.0, AmpMode::Random, 1.0, vec![1.0, 0.2, -0.8]).unwrap();
        let q = qutrit_params_from_spec(&spec).unwrap();
        let m = rho_qutrit_perturbative(&sys, &q, 0.0).unwrap();
        assert!((m.entries() - sys.projector().entries()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn eigenvalues_sum_to_one_and_order() {
        let sys = normalized([c(0.3, 0.1), c(-0.5, 0.2), c(0.4, -0.6)]);
        let dense = DenseBranches::random(3, 4, 9, 1.0).unwrap();
        let q = qutrit_params(&dense, [0, 1, 2]).unwrap();
        let e = qutrit_eigenvalues(&sys, &q, 0.05).unwrap();
        assert!((e.p1 + e.p2 + e.p3 - 1.0).abs() < 1e-15);
        assert!(e.p2 >= e.p3);
        assert!(!e.degenerate);
    }

    #[test]
    fn spectral_model_has_a_vanishing_third_eigenvalue() {
        // Commuting branches: the determinant has no Δ⁴ term.
        let sys = normalized([c(0.3, 0.1), c(-0.5, 0.2), c(0.4, -0.6)]);
        let spec = EnvironmentSpec::sampled(16, 5, 1.0, AmpMode::Random, 1.0, vec![1.0, 0.2, -0.8]).unwrap();
        let q = qutrit_params_from_spec(&spec).unwrap();
        let e = qutrit_eigenvalues(&sys, &q, 0.01).unwrap();
        assert!(e.lambda3.abs() < 1e-12 * e.lambda1);
    }

    #[test]
    fn m1_vanishes_for_real_parameters_only() {
        let sys = normalized([c(0.3, 0.1), c(-0.5, 0.2), c(0.4, -0.6)]);
        let spec = EnvironmentSpec::sampled(16, 5, 1.0, AmpMode::Random, 1.0, vec![1.0, 0.2, -0.8]).unwrap();
        let q = qutrit_params_from_spec(&spec).unwrap();
        assert!(q.is_real(0.0));
        let ws = qutrit_workspace(&sys, &q).unwrap();
        assert!(linear_term_m1(&ws.second).abs() < 1e-12);
        assert!(linear_term_m1(&ws.third).abs() < 1e-12);

        let mut complex = q;
        complex.p10.eta += c(0.0, 0.1);
        let ws = qutrit_workspace(&sys, &complex).unwrap();
        assert!(linear_term_m1(&ws.second).abs() > 1e-6);
        assert_eq!(ws.second.m1, linear_term_m1(&ws.second));
    }

    #[test]
    fn zero_coefficient_is_rejected() {
        let sys = normalized([c(0.6, 0.0), c(0.8, 0.0), c(0.0, 0.0)]);
        let spec = EnvironmentSpec::sampled(8, 5, 1.0, AmpMode::Random, 1.0, vec![1.0, 0.2, -0.8]).unwrap();
        let q = qutrit_params_from_spec(&spec).unwrap();
        assert!(matches!(qutrit_workspace(&sys, &q), Err(Error::ZeroCoefficient { index: 2 })));
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let v = [c(0.3, 0.1), c(-0.5, 0.2), c(0.4, -0.6)];
        let (w, t) = complement_basis(&v);
        let dot = |x: &[C64; 3], y: &[C64; 3]| -> C64 { x.iter().zip(y).map(|(p, q)| p.conj() * q).sum() };
        assert!(dot(&v, &w).norm() < 1e-15);
        assert!(dot(&v, &t).norm() < 1e-15);
        assert!(dot(&w, &t).norm() < 1e-15);
        assert!((dot(&t, &t).re - 1.0).abs() < 1e-15);
    }
}
