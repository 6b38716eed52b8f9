use copycat_core::eigensolve::{eig3, EigenDecomposition};
use copycat_core::evolution::BranchEvolver;
use copycat_core::hilbert::SystemInit;
use copycat_core::model::{AmpMode, DenseBranches, EnvironmentSpec};
use copycat_core::qubit::{eigenpairs_perturbative, rho_perturbative_matrix, QubitPerturbation};
use copycat_core::qutrit::{
    eigenvectors_from_workspace, linear_term_m1, qutrit_eigenvalues, qutrit_eigenvectors, qutrit_params,
    qutrit_params_from_spec, qutrit_workspace, rho_qutrit_matrix, PairParams, QutritPairParams,
};
use copycat_core::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn normalized(v: [C64; 3]) -> SystemInit {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    SystemInit::new(v.iter().map(|z| z / n).collect()).unwrap()
}

fn generic_system() -> SystemInit {
    normalized([c(0.5, 0.2), c(-0.4, 0.5), c(0.3, -0.45)])
}

fn fidelity(v: &nalgebra::DVector<C64>, psi: &[C64; 3]) -> f64 {
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let o: C64 = (0..3).map(|i| v[i].conj() * psi[i]).sum();
    o.norm_sqr() / n
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn spectral_pair_parameters_are_raw_moments() {
    let spec = EnvironmentSpec::sampled(30, 4, 1.2, AmpMode::Random, 0.8, vec![1.0, 0.1, -0.9]).unwrap();
    let q = qutrit_params_from_spec(&spec).unwrap();
    let f = spec.branch_factors();
    for (p, i, j) in q.pairs() {
        // z_ij(t) = Σ w exp(−iθωt) with θ = λ(f_i − f_j).
        let th = spec.lambda() * (f[i] - f[j]);
        let m = |k| spec.power_sum(k);
        assert!((p.beta - (-th * m(1))).abs() < 1e-14);
        assert!((p.eta - c(th * th * m(2) / 2.0, 0.0)).norm() < 1e-14);
        assert!((p.nu - c(th.powi(3) * m(3) / 6.0, 0.0)).norm() < 1e-14);
        assert!((p.kappa - c(th.powi(4) * m(4) / 24.0, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn pair_series_is_fourth_order_accurate() {
    let src = DenseBranches::random(3, 6, 21, 1.0).unwrap();
    let q = qutrit_params(&src, [0, 1, 2]).unwrap();
    let ev = BranchEvolver::new(&src).unwrap();
    let sys = generic_system();
    let mut prev = None;
    for k in 0..4 {
        let delta = 0.05 / 2f64.powi(k);
        let exact = ev.rho(&sys, delta).unwrap();
        let approx = rho_qutrit_matrix(&sys, &q, delta).unwrap();
        let gap = (exact.entries() - approx).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(g) = prev {
            let r: f64 = g / gap;
            assert!((r - 32.0).abs() < 4.0, "ratio {r}");
        }
        prev = Some(gap);
    }
}

#[test]
fn beta_sum_rule_holds() {
    for seed in 0..30 {
        let src = DenseBranches::random(3, 5, seed, 2.0).unwrap();
        let q = qutrit_params(&src, [0, 1, 2]).unwrap();
        let scale = q.p10.beta.abs().max(q.p1m.beta.abs()).max(q.p0m.beta.abs());
        assert!(q.beta_sum_residual().abs() <= 1e-12 * scale);
    }
}

#[test]
fn eigenvalues_and_vectors_against_eig3() {
    let sys = generic_system();
    for seed in 0..8 {
        let src = DenseBranches::random(3, 6, seed, 1.0).unwrap();
        let q = qutrit_params(&src, [0, 1, 2]).unwrap();
        let td = q.decoherence_time().unwrap();
        let mut prev = None;
        for k in 0..4 {
            let delta = 0.05 * td / 2f64.powi(k);
            let e = eig3(&rho_qutrit_matrix(&sys, &q, delta).unwrap()).unwrap();
            let ev = qutrit_eigenvalues(&sys, &q, delta).unwrap();
            let gap = [ev.p1, ev.p2, ev.p3]
                .iter()
                .zip(&e.values)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if let Some(g) = prev {
                let r: f64 = g / gap;
                assert!((r - 8.0).abs() < 2.5, "seed {seed}: ratio {r}");
            }
            prev = Some(gap);
        }
        let delta = 1e-2 * td;
        let e = eig3(&rho_qutrit_matrix(&sys, &q, delta).unwrap()).unwrap();
        let vecs = qutrit_eigenvectors(&sys, &q, delta).unwrap();
        assert!(!vecs.degenerate);
        for j in 0..3 {
            assert!(fidelity(&e.vector(j), &vecs.psi[j]) > 1.0 - 1e-10);
        }
    }
}

#[test]
fn commuting_branches_leave_one_eigenvalue_at_zero() {
    let spec = EnvironmentSpec::sampled(40, 2, 1.0, AmpMode::Random, 1.0, vec![1.0, 0.0, -1.0]).unwrap();
    let q = qutrit_params_from_spec(&spec).unwrap();
    let ev = qutrit_eigenvalues(&generic_system(), &q, 0.01).unwrap();
    assert!(ev.lambda3.abs() < 1e-12 * ev.lambda1);
    assert!((ev.lambda2 - ev.lambda1).abs() < 1e-12 * ev.lambda1);
}

/// Qubit parameters of a pair, embedded as the `(|1⟩, |0⟩)` block.
fn embedded_qubit(p: &PairParams) -> QubitPerturbation {
    QubitPerturbation::from_beta_eta(p.beta, p.eta)
}

#[test]
fn vanishing_third_level_reduces_to_qubit() {
    let src = DenseBranches::random(3, 5, 6, 1.0).unwrap();
    let q = qutrit_params(&src, [0, 1, 2]).unwrap();
    let qb = embedded_qubit(&q.p10);
    let (a, b) = (c(0.6, 0.1), c(-0.3, 0.734));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    let delta = 0.02;
    let sys3 = SystemInit::qutrit(a, b, c(0.0, 0.0)).unwrap();
    let sys2 = SystemInit::qubit(a, b).unwrap();

    let m3 = rho_qutrit_matrix(&sys3, &q, delta).unwrap();
    let m2 = rho_perturbative_matrix(&sys2, &qb, delta).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            // The qutrit series carries third and fourth order terms too.
            let extra = a.norm() * b.norm() * (q.p10.nu.norm() * delta.powi(3) + q.p10.kappa.norm() * delta.powi(4));
            assert!((m3[(i, j)] - m2[(i, j)]).norm() <= extra + 1e-15);
        }
        assert_eq!(m3[(2, i)], c(0.0, 0.0));
    }
    let e3 = qutrit_eigenvalues(&sys3, &q, delta).unwrap();
    let e2 = eigenpairs_perturbative(&sys2, &qb, delta).unwrap();
    assert!((e3.p2 - e2.p2).abs() < 1e-10);
    assert!((e3.p1 - e2.p1).abs() < 1e-10);
    assert!(e3.p3.abs() < 1e-10);

    // The eigenvector gauge divides by c, so approach c = 0 from above.
    let eps: f64 = 1e-6;
    let s = (1.0 - eps * eps).sqrt();
    let sys3 = SystemInit::qutrit(a * s, b * s, c(eps, 0.0)).unwrap();
    let v3 = qutrit_eigenvectors(&sys3, &q, delta).unwrap();
    for (psi3, psi2) in [(v3.psi[0], e2.psi1), (v3.psi[1], e2.psi2)] {
        let n3: f64 = psi3.iter().map(|z| z.norm_sqr()).sum();
        let n2: f64 = psi2.iter().map(|z| z.norm_sqr()).sum();
        let o = psi3[0].conj() * psi2[0] + psi3[1].conj() * psi2[1];
        assert!((o.norm_sqr() / (n3 * n2) - 1.0).abs() < 1e-10);
    }
}

/// `max_k ||ψ_k(Δ)| − |ψ_k(0⁺)||` for numeric eigenvector `j`.
fn real_drift(e: &EigenDecomposition, j: usize, limit: &[C64; 3]) -> f64 {
    let n = limit.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (0..3)
        .map(|k| (e.vectors[(k, j)].norm() - limit[k].norm() / n).abs())
        .fold(0.0, f64::max)
}

fn drift_slopes(sys: &SystemInit, q: &QutritPairParams) -> (f64, f64, f64) {
    let ws = qutrit_workspace(sys, q).unwrap();
    let limit = eigenvectors_from_workspace(&ws, 0.0);
    let td = q.decoherence_time().unwrap();
    let deltas: Vec<f64> = (0..9).map(|k| 1e-3 * td * 10f64.powf(k as f64 / 8.0)).collect();
    let mut d2 = Vec::new();
    let mut d3 = Vec::new();
    let mut p2 = Vec::new();
    for &delta in &deltas {
        let e = eig3(&rho_qutrit_matrix(sys, q, delta).unwrap()).unwrap();
        d2.push(real_drift(&e, 1, &limit.psi[1]));
        d3.push(real_drift(&e, 2, &limit.psi[2]));
        p2.push(e.values[1]);
    }
    (slope(&deltas, &d2), slope(&deltas, &d3), slope(&deltas, &p2))
}

#[test]
fn linear_drift_needs_complex_parameters() {
    let spec = EnvironmentSpec::sampled(64, 1, 1.0, AmpMode::Random, 1.0, vec![1.0, 0.0, -1.0]).unwrap();
    let q = qutrit_params_from_spec(&spec).unwrap();
    let sys = normalized([c(0.6, 0.0), c(0.5, 0.0), c(0.62, 0.0)]);
    assert!(q.is_real(1e-15));
    let ws = qutrit_workspace(&sys, &q).unwrap();
    assert!(linear_term_m1(&ws.second).abs() <= 1e-12);
    assert!(linear_term_m1(&ws.third).abs() <= 1e-12);
    let (s2, _, sp) = drift_slopes(&sys, &q);
    assert!((s2 - 2.0).abs() < 0.1, "real drift slope {s2}");
    assert!((sp - 2.0).abs() < 0.05);

    let twist = |p: PairParams, im: f64| PairParams::new(p.beta, p.eta + c(0.0, im), p.nu, p.kappa);
    let qc = QutritPairParams::new(twist(q.p10, 0.15), twist(q.p1m, -0.2), twist(q.p0m, 0.1)).unwrap();
    let ws = qutrit_workspace(&sys, &qc).unwrap();
    assert!(linear_term_m1(&ws.second).abs() > 1e-3);
    let (s2, s3, sp) = drift_slopes(&sys, &qc);
    assert!((s2 - 1.0).abs() < 0.1 || (s3 - 1.0).abs() < 0.1, "complex drift slopes {s2} {s3}");
    assert!((sp - 2.0).abs() < 0.05, "p2 slope {sp}");
}
