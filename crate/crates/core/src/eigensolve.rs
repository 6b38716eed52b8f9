//! Hermitian eigensolvers and eigenstate tracking.
//!
//! Every solver returns eigenvalues in descending order with orthonormal
//! eigenvectors stored as matrix columns. Each column is phase-fixed so that
//! its largest-magnitude entry is real and positive (ties go to the lowest
//! index). Two- and three-dimensional problems have closed-form solvers;
//! anything larger goes through cyclic complex Jacobi.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::{CMatrix, CVector, Error, Result, C64};

/// Hermiticity tolerance, relative to `max(1, max |entry|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalue splitting below which a pair is flagged as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Largest dimension accepted by [`jacobi_eig`].
pub const JACOBI_MAX_DIM: usize = 512;

/// Sweep cap for [`jacobi_eig`].
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Residual above which [`eig3`] refines by inverse iteration.
const EIG3_REFINE_TOL: f64 = 1e-11;

/// Overlap below which a tracked eigenvector is reported as lost.
pub const TRACKING_LOSS_OVERLAP: f64 = 0.1;

/// How the global phase of each eigenvector was fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseConvention {
    /// Largest-magnitude component is real and positive.
    LargestComponentRealPositive,
    /// Phase aligned with a previous decomposition by [`track`].
    Tracked,
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues, descending unless the decomposition came out of [`track`].
    pub values: Vec<f64>,
    /// Eigenvectors as columns, paired with `values`.
    pub vectors: CMatrix,
    pub phase_convention: PhaseConvention,
    /// Indices `k` with `|values[k] - values[k + 1]| < DEGENERACY_TOL`.
    pub degeneracies: Vec<usize>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degeneracies.is_empty()
    }

    /// `V diag(values) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &value) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(value);
        }
        &scaled * self.vectors.adjoint()
    }

    /// Largest `‖A v_k − λ_k v_k‖` over all pairs.
    pub fn max_residual(&self, a: &CMatrix) -> f64 {
        (0..self.dim())
            .map(|k| {
                let v = self.vector(k);
                (a * &v - v.scale(self.values[k])).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |V†V − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.adjoint() * &self.vectors;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// The first `k` pairs, i.e. the `k` largest eigenvalues.
    pub fn leading(&self, k: usize) -> Self {
        let k = k.min(self.dim());
        let values = self.values[..k].to_vec();
        let degeneracies = find_degeneracies(&values);
        Self {
            values,
            vectors: self.vectors.columns(0, k).into_owned(),
            phase_convention: self.phase_convention,
            degeneracies,
        }
    }

    fn from_unsorted(mut pairs: Vec<(f64, CVector)>) -> Self {
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
        let n = pairs.len();
        let mut vectors = CMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (k, (value, v)) in pairs.into_iter().enumerate() {
            vectors.set_column(k, &v);
            values.push(value);
        }
        let mut out = Self {
            values,
            vectors,
            phase_convention: PhaseConvention::LargestComponentRealPositive,
            degeneracies: Vec::new(),
        };
        fix_phases(&mut out.vectors);
        out.degeneracies = find_degeneracies(&out.values);
        out
    }
}

fn find_degeneracies(values: &[f64]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - w[1]).abs() < DEGENERACY_TOL)
        .map(|(k, _)| k)
        .collect()
}

/// Makes the largest-magnitude entry of each column real and positive.
/// Magnitudes within a relative `1e-12` of the maximum count as ties, and the
/// lowest such index wins.
pub fn fix_phases(vectors: &mut CMatrix) {
    for mut col in vectors.column_iter_mut() {
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-12))
            .expect("max is attained");
        let phase = col[pivot].conj() / col[pivot].norm();
        for z in col.iter_mut() {
            *z *= phase;
        }
        col[pivot] = C64::new(col[pivot].norm(), 0.0);
    }
}

/// Returns `max |A − A†|` if it exceeds the tolerance.
pub fn check_hermitian(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "square matrix",
            expected: a.nrows(),
            actual: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut scale: f64 = 1.0;
    let mut deviation: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { what: "matrix" });
            }
            scale = scale.max(z.norm());
            deviation = deviation.max((z - a[(j, i)].conj()).norm());
        }
    }
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

fn hermitian_part(a: &CMatrix) -> CMatrix {
    let mut h = (a + a.adjoint()).scale(0.5);
    for i in 0..h.nrows() {
        h[(i, i)].im = 0.0;
    }
    h
}

/// Dispatches to [`eig2`], [`eig3`] or [`jacobi_eig`] by dimension.
pub fn eigh(a: &CMatrix) -> Result<EigenDecomposition> {
    match a.nrows() {
        0 => Err(Error::ZeroDimension { what: "matrix" }),
        1 => {
            check_hermitian(a)?;
            Ok(EigenDecomposition {
                values: vec![a[(0, 0)].re],
                vectors: CMatrix::identity(1, 1),
                phase_convention: PhaseConvention::LargestComponentRealPositive,
                degeneracies: Vec::new(),
            })
        }
        2 => eig2(a),
        3 => eig3(a),
        _ => jacobi_eig(a),
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    let decomposition = eigh(a)?;
    Ok(decomposition.values.last().copied().unwrap_or(0.0))
}

/// Closed-form 2×2 Hermitian eigensolver.
///
/// The smaller eigenvalue is recovered as `det / λ_max` so that tiny
/// eigenvalues of nearly pure states keep full relative precision.
pub fn eig2(a: &CMatrix) -> Result<EigenDecomposition> {
    if a.nrows() != 2 {
        return Err(Error::DimensionMismatch {
            what: "eig2 input",
            expected: 2,
            actual: a.nrows(),
        });
    }
    check_hermitian(a)?;
    let h = hermitian_part(a);
    let (p, q) = (h[(0, 0)].re, h[(1, 1)].re);
    let w = h[(0, 1)];
    let (values, vectors) = eig2_parts(p, q, w);
    Ok(EigenDecomposition::from_unsorted(
        values.into_iter().zip(vectors).collect(),
    ))
}

fn eig2_parts(p: f64, q: f64, w: C64) -> ([f64; 2], [CVector; 2]) {
    let mean = 0.5 * (p + q);
    let half_diff = 0.5 * (p - q);
    let radius = half_diff.hypot(w.norm());
    if radius == 0.0 {
        return (
            [p, q],
            [
                CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
                CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]),
            ],
        );
    }
    let det = p * q - w.norm_sqr();
    let (hi, lo) = if mean >= 0.0 {
        let hi = mean + radius;
        (hi, if hi != 0.0 { det / hi } else { mean - radius })
    } else {
        let lo = mean - radius;
        (if lo != 0.0 { det / lo } else { mean + radius }, lo)
    };
    // (A − λ)v = 0 gives v ∝ (w, λ − p) from row one and v ∝ (λ − q, w*) from row two.
    let from_row0 = [w, C64::new(hi - p, 0.0)];
    let from_row1 = [C64::new(hi - q, 0.0), w.conj()];
    let n0 = from_row0[0].norm_sqr() + from_row0[1].norm_sqr();
    let n1 = from_row1[0].norm_sqr() + from_row1[1].norm_sqr();
    let (top, norm) = if n0 >= n1 {
        (from_row0, n0.sqrt())
    } else {
        (from_row1, n1.sqrt())
    };
    let top = [top[0] / norm, top[1] / norm];
    let bottom = [-top[1].conj(), top[0].conj()];
    (
        [hi, lo],
        [
            CVector::from_vec(top.to_vec()),
            CVector::from_vec(bottom.to_vec()),
        ],
    )
}

/// Closed-form 3×3 Hermitian eigensolver.
///
/// Eigenvalues come from the trigonometric solution of the depressed
/// characteristic cubic. The best-separated eigenvalue gets its vector from
/// a cross product of two rows of `A − λI`; the remaining pair is solved
/// exactly on the orthogonal complement with [`eig2`] arithmetic, which keeps
/// small eigenvalues accurate next to a dominant one. Pairs whose residual
/// still exceeds `1e-11` are refined by inverse iteration.
pub fn eig3(a: &CMatrix) -> Result<EigenDecomposition> {
    if a.nrows() != 3 {
        return Err(Error::DimensionMismatch {
            what: "eig3 input",
            expected: 3,
            actual: a.nrows(),
        });
    }
    check_hermitian(a)?;
    let h = hermitian_part(a);
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(EigenDecomposition::from_unsorted(
            (0..3)
                .map(|k| (0.0, CMatrix::identity(3, 3).column(k).into_owned()))
                .collect(),
        ));
    }
    let m = h.unscale(scale);

    let shift = (m[(0, 0)].re + m[(1, 1)].re + m[(2, 2)].re) / 3.0;
    let mut shifted = m.clone();
    for i in 0..3 {
        shifted[(i, i)] -= shift;
    }
    let p = (shifted.norm_squared() / 6.0).sqrt();
    if p < 1e-15 {
        return Ok(EigenDecomposition::from_unsorted(
            (0..3)
                .map(|k| (shift * scale, CMatrix::identity(3, 3).column(k).into_owned()))
                .collect(),
        ));
    }
    let r = (det3(&shifted.unscale(p)).re / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let top = shift + 2.0 * p * phi.cos();
    let bottom = shift + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let middle = 3.0 * shift - top - bottom;

    let isolated = if top - middle >= middle - bottom {
        top
    } else {
        bottom
    };
    let v_iso = null_vector3(&m, isolated);
    let (w1, w2) = complement3(&v_iso);
    let basis = CMatrix::from_columns(&[w1, w2]);
    let projected = basis.adjoint() * &m * &basis;
    let (pair_values, pair_vectors) = eig2_parts(
        projected[(0, 0)].re,
        projected[(1, 1)].re,
        projected[(0, 1)],
    );
    let iso_value = (v_iso.adjoint() * &m * &v_iso)[(0, 0)].re;

    let mut pairs = vec![
        (iso_value, v_iso),
        (pair_values[0], &basis * &pair_vectors[0]),
        (pair_values[1], &basis * &pair_vectors[1]),
    ];

    let residual = pairs
        .iter()
        .map(|(value, v)| (&m * v - v.scale(*value)).norm())
        .fold(0.0, f64::max);
    if residual > EIG3_REFINE_TOL {
        pairs = inverse_iteration(&m, pairs);
    }

    for (value, _) in pairs.iter_mut() {
        *value *= scale;
    }
    Ok(EigenDecomposition::from_unsorted(pairs))
}

fn det3(m: &CMatrix) -> C64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

fn row3(m: &CMatrix, i: usize) -> Vector3<C64> {
    Vector3::new(m[(i, 0)], m[(i, 1)], m[(i, 2)])
}

/// Bilinear cross product: orthogonal to both rows under `Σ r_j v_j`.
fn cross3(x: &Vector3<C64>, y: &Vector3<C64>) -> Vector3<C64> {
    Vector3::new(
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    )
}

fn null_vector3(m: &CMatrix, value: f64) -> CVector {
    let mut shifted = m.clone();
    for i in 0..3 {
        shifted[(i, i)] -= value;
    }
    let rows = [row3(&shifted, 0), row3(&shifted, 1), row3(&shifted, 2)];
    let candidates = [
        cross3(&rows[0], &rows[1]),
        cross3(&rows[1], &rows[2]),
        cross3(&rows[2], &rows[0]),
    ];
    let best = candidates
        .iter()
        .max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared()))
        .expect("three candidates");
    let norm = best.norm();
    if norm == 0.0 {
        // A − λI vanishes entirely; any unit vector works.
        return CVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
    }
    CVector::from_iterator(3, best.iter().map(|z| z / norm))
}

/// Two orthonormal vectors spanning the complement of unit vector `v`.
fn complement3(v: &CVector) -> (CVector, CVector) {
    let k = (0..3)
        .min_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
        .expect("three entries");
    let mut e = CVector::zeros(3);
    e[k] = C64::new(1.0, 0.0);
    let overlap = v.dotc(&e);
    let w1 = (e - v * overlap).normalize();
    let vv = Vector3::new(v[0], v[1], v[2]);
    let ww = Vector3::new(w1[0], w1[1], w1[2]);
    let c = cross3(&vv, &ww);
    let w2 = CVector::from_iterator(3, c.iter().map(|z| z.conj())).normalize();
    (w1, w2)
}

fn inverse_iteration(m: &CMatrix, mut pairs: Vec<(f64, CVector)>) -> Vec<(f64, CVector)> {
    let n = m.nrows();
    for (value, v) in pairs.iter_mut() {
        for _ in 0..3 {
            let mut shifted = m.clone();
            let bump = 1e-13 * (1.0 + value.abs());
            for i in 0..n {
                shifted[(i, i)] -= *value + bump;
            }
            match shifted.lu().solve(v) {
                Some(x) if x.norm() > 0.0 && x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                    *v = x.normalize();
                }
                _ => break,
            }
        }
    }
    // Re-orthonormalize in order of decreasing eigenvalue, then refresh values.
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut accepted: Vec<CVector> = Vec::with_capacity(n);
    for (_, v) in pairs.iter_mut() {
        let mut w = v.clone();
        for u in &accepted {
            let c = u.dotc(&w);
            w -= u * c;
        }
        *v = w.normalize();
        accepted.push(v.clone());
    }
    for (value, v) in pairs.iter_mut() {
        *value = v.dotc(&(m * &*v)).re;
    }
    pairs
}

/// Cyclic complex Jacobi for Hermitian matrices up to [`JACOBI_MAX_DIM`].
///
/// Sweeps until the off-diagonal Frobenius norm drops to `1e-13 ‖A‖_F`.
pub fn jacobi_eig(a: &CMatrix) -> Result<EigenDecomposition> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::ZeroDimension { what: "matrix" });
    }
    if n > JACOBI_MAX_DIM {
        return Err(Error::TooLarge {
            dim: n,
            cap: JACOBI_MAX_DIM,
        });
    }
    check_hermitian(a)?;
    let mut m = hermitian_part(a);
    let mut v = CMatrix::identity(n, n);
    let tol = 1e-13 * m.norm();

    let mut converged = false;
    let mut off = off_diagonal_norm(&m);
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        off = off_diagonal_norm(&m);
    }
    if !converged && off > tol {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off_norm: off,
        });
    }
    Ok(EigenDecomposition::from_unsorted(
        (0..n)
            .map(|k| (m[(k, k)].re, v.column(k).into_owned()))
            .collect(),
    ))
}

fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += m[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation zeroing `m[p, q]`: `m ← R† m R`, `v ← v R` with
/// `R = [[c, s], [−s e^{−iφ}, c e^{−iφ}]]` on the `(p, q)` plane.
fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
    let t = if tau.abs() > 1e150 {
        0.5 / tau
    } else {
        let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
        sign / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let pc = phase.conj();
    let n = m.nrows();

    for k in 0..n {
        let (mp, mq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = mp * c - mq * pc * s;
        m[(k, q)] = mp * s + mq * pc * c;
    }
    for k in 0..n {
        let (mp, mq) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = mp * c - mq * phase * s;
        m[(q, k)] = mp * s + mq * phase * c;
    }
    m[(p, q)] = C64::new(0.0, 0.0);
    m[(q, p)] = C64::new(0.0, 0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
    for k in 0..n {
        let (vp, vq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vp * c - vq * pc * s;
        v[(k, q)] = vp * s + vq * pc * c;
    }
}

/// Result of aligning a decomposition with its predecessor.
#[derive(Debug, Clone)]
pub struct Tracked {
    /// `curr` reordered and rephased to follow `prev`.
    pub decomposition: EigenDecomposition,
    /// `permutation[k]` is the column of `curr` now stored at position `k`.
    pub permutation: Vec<usize>,
    /// Positions whose best overlap with any `curr` vector fell below
    /// [`TRACKING_LOSS_OVERLAP`].
    pub lost: Vec<usize>,
}

/// Reorders `curr` to follow `prev` by greedy maximal overlap and rotates
/// each vector's global phase so that `⟨prev_k|curr_k⟩` is real and positive.
/// Both sides may be truncated with [`EigenDecomposition::leading`].
pub fn track(prev: &EigenDecomposition, curr: &EigenDecomposition) -> Result<Tracked> {
    let n = prev.dim();
    if curr.vectors.nrows() != prev.vectors.nrows() {
        return Err(Error::DimensionMismatch {
            what: "tracked vector length",
            expected: prev.vectors.nrows(),
            actual: curr.vectors.nrows(),
        });
    }
    if curr.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "tracked decomposition",
            expected: n,
            actual: curr.dim(),
        });
    }
    let overlaps: Vec<Vec<C64>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| prev.vectors.column(k).dotc(&curr.vectors.column(j)))
                .collect()
        })
        .collect();
    let lost: Vec<usize> = (0..n)
        .filter(|&k| overlaps[k].iter().all(|z| z.norm() < TRACKING_LOSS_OVERLAP))
        .collect();

    let mut entries: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|k| (0..n).map(move |j| (k, j)))
        .map(|(k, j)| (overlaps[k][j].norm(), k, j))
        .collect();
    // Descending overlap; ties resolved by lowest (k, j).
    entries.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut permutation = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, k, j) in entries {
        if permutation[k] == usize::MAX && !taken[j] {
            permutation[k] = j;
            taken[j] = true;
        }
    }

    let mut vectors = CMatrix::zeros(curr.vectors.nrows(), n);
    let mut values = Vec::with_capacity(n);
    for (k, &j) in permutation.iter().enumerate() {
        let overlap = overlaps[k][j];
        let mut col = curr.vectors.column(j).into_owned();
        if overlap.norm() > 0.0 {
            col *= overlap.conj() / overlap.norm();
        }
        vectors.set_column(k, &col);
        values.push(curr.values[j]);
    }
    let degeneracies = find_degeneracies(&values);
    Ok(Tracked {
        decomposition: EigenDecomposition {
            values,
            vectors,
            phase_convention: PhaseConvention::Tracked,
            degeneracies,
        },
        permutation,
        lost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn assert_valid(a: &CMatrix, e: &EigenDecomposition) {
        assert!(e.max_residual(a) <= 1e-10, "residual {}", e.max_residual(a));
        assert!(e.orthonormality_error() <= 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let trace: f64 = (0..a.nrows()).map(|i| a[(i, i)].re).sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() <= 1e-10);
        let diff = (e.reconstruct() - a).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-10);
    }

    #[test]
    fn eig2_diagonal() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = eig2(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 0.0]);
        assert_eq!(e.vectors, CMatrix::identity(2, 2));
    }

    #[test]
    fn eig2_uniform_projector() {
        let h = c(0.5, 0.0);
        let a = CMatrix::from_row_slice(2, 2, &[h, h, h, h]);
        let e = eig2(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!(e.values[1].abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)] - c(s, 0.0)).norm() < 1e-15);
        assert!((e.vectors[(1, 0)] - c(s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eig2_rejects_non_hermitian() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.0), c(0.2, 0.0), c(0.0, 0.0)]);
        assert!(matches!(eig2(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig3_diagonal() {
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(3.0, 0.0);
        a[(2, 2)] = c(2.0, 0.0);
        let e = eig3(&a).unwrap();
        for (x, y) in e.values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((e.vectors[(1, 0)].re - 1.0).abs() < 1e-14);
        assert!((e.vectors[(2, 1)].re - 1.0).abs() < 1e-14);
        assert!((e.vectors[(0, 2)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig3_rank_one_projector() {
        let a = CMatrix::from_element(3, 3, c(1.0 / 3.0, 0.0));
        let e = eig3(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!(e.values[1].abs() < 1e-14 && e.values[2].abs() < 1e-14);
        assert!(e.is_degenerate());
        assert_valid(&a, &e);
    }

    #[test]
    fn eig3_matches_jacobi_on_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_hermitian(3, &mut rng);
            let e = eig3(&a).unwrap();
            let j = jacobi_eig(&a).unwrap();
            assert_valid(&a, &e);
            for (x, y) in e.values.iter().zip(&j.values) {
                assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn eig3_nearly_pure_state_keeps_small_eigenvalues() {
        // ψψ† plus a tiny perturbation in the complement: eigenvalues 1, 2e-9, 1e-9.
        let s = 1.0 / 3f64.sqrt();
        let psi = CVector::from_vec(vec![c(s, 0.0), c(0.0, s), c(-s, 0.0)]);
        let (w1, w2) = complement3(&psi);
        let a = &psi * psi.adjoint() + (&w1 * w1.adjoint()).scale(2e-9) + (&w2 * w2.adjoint()).scale(1e-9);
        let e = eig3(&a).unwrap();
        assert!((e.values[1] - 2e-9).abs() < 1e-18 * 1e3);
        assert!((e.values[2] - 1e-9).abs() < 1e-18 * 1e3);
    }

    #[test]
    fn jacobi_identity() {
        let e = jacobi_eig(&CMatrix::identity(7, 7)).unwrap();
        assert!(e.values.iter().all(|&x| x == 1.0));
        assert!(e.is_degenerate());
    }

    #[test]
    fn jacobi_matches_eig2() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = random_hermitian(2, &mut rng);
            let e = eig2(&a).unwrap();
            let j = jacobi_eig(&a).unwrap();
            for (x, y) in e.values.iter().zip(&j.values) {
                assert!((x - y).abs() <= 1e-10);
            }
            // Same phase convention, so vectors agree componentwise.
            assert!((&e.vectors - &j.vectors).iter().all(|z| z.norm() < 1e-9));
        }
    }

    #[test]
    fn jacobi_random_larger() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [4, 9, 30] {
            let a = random_hermitian(n, &mut rng);
            let e = jacobi_eig(&a).unwrap();
            assert_valid(&a, &e);
        }
    }

    #[test]
    fn jacobi_rejects_oversized() {
        let a = CMatrix::zeros(JACOBI_MAX_DIM + 1, JACOBI_MAX_DIM + 1);
        assert!(matches!(jacobi_eig(&a), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn phase_convention_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_hermitian(5, &mut rng);
        let e = jacobi_eig(&a).unwrap();
        let mut again = e.vectors.clone();
        fix_phases(&mut again);
        assert_eq!(again, e.vectors);
        for col in e.vectors.column_iter() {
            let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pivot = col.iter().position(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap();
            assert!(col[pivot].im == 0.0 && col[pivot].re > 0.0);
        }
    }

    #[test]
    fn track_identity_and_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(4, &mut rng);
        let e = jacobi_eig(&a).unwrap();

        let same = track(&e, &e).unwrap();
        assert_eq!(same.permutation, vec![0, 1, 2, 3]);
        assert!(same.lost.is_empty());
        assert!((&same.decomposition.vectors - &e.vectors).iter().all(|z| z.norm() < 1e-14));

        let mut swapped = e.clone();
        swapped.vectors.swap_columns(1, 2);
        swapped.values.swap(1, 2);
        let t = track(&e, &swapped).unwrap();
        assert_eq!(t.permutation, vec![0, 2, 1, 3]);
        assert_eq!(t.decomposition.values, e.values);
        assert!((&t.decomposition.vectors - &e.vectors).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn track_undoes_phase_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_hermitian(3, &mut rng);
        let e = eig3(&a).unwrap();
        let mut rotated = e.clone();
        for (k, mut col) in rotated.vectors.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, 0.7 * k as f64 + 0.3);
        }
        let t = track(&e, &rotated).unwrap();
        assert!((&t.decomposition.vectors - &e.vectors).iter().all(|z| z.norm() < 1e-13));
        assert_eq!(t.decomposition.phase_convention, PhaseConvention::Tracked);
    }

    #[test]
    fn track_flags_loss_when_bases_are_mutually_unbiased() {
        // Identity vs discrete Fourier basis in 128 dimensions: every overlap is 1/√128 < 0.1.
        let n = 128;
        let prev = jacobi_eig(&CMatrix::identity(n, n)).unwrap();
        let mut curr = prev.clone();
        let norm = (n as f64).sqrt();
        curr.vectors = CMatrix::from_fn(n, n, |i, j| {
            C64::from_polar(1.0 / norm, 2.0 * PI * (i * j) as f64 / n as f64)
        });
        let t = track(&prev, &curr).unwrap();
        assert_eq!(t.lost.len(), n);
    }
}
