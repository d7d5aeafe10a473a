//! L1 recovery: basis pursuit, basis pursuit denoising and OMP.
//!
//! Basis pursuit and BPDN use the alternating direction method of
//! multipliers with a factorization cached per sensing matrix, so a
//! [`PreparedSolver`] can be reused across every block of an image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky, dot, least_squares, norm1, norm2, Matrix, Signal};

/// Relative tolerance used when deciding that a sensing matrix lacks full row rank.
pub const RANK_TOL: f64 = 1e-10;

/// Support sizes above this are not polished by a least-squares refit.
const POLISH_MAX_SUPPORT: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Bp,
    Bpdn,
    Omp,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bp" => Ok(SolverKind::Bp),
            "bpdn" => Ok(SolverKind::Bpdn),
            "omp" => Ok(SolverKind::Omp),
            _ => Err(Error::InvalidArgument(format!("unknown solver '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// ADMM penalty.
    pub rho: f64,
    /// BPDN regularization weight.
    pub lambda: f64,
    /// OMP atom budget; `None` means up to `min(m, n)` atoms.
    pub omp_sparsity: Option<usize>,
    /// Refit BPDN by least squares on its support, removing the shrinkage bias.
    #[serde(default)]
    pub debias: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Bp,
            max_iters: 2000,
            abs_tol: 1e-7,
            rel_tol: 1e-5,
            rho: 1.0,
            lambda: 0.01,
            omp_sparsity: None,
            debias: false,
        }
    }
}

impl SolverConfig {
    pub fn with_kind(self, kind: SolverKind) -> Self {
        Self { kind, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument("rho must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument("lambda must be non-negative".into()));
        }
        if self.kind == SolverKind::Bpdn && self.lambda <= 0.0 {
            return Err(Error::InvalidArgument(
                "BPDN needs lambda > 0; use basis pursuit for the equality-constrained problem".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub solution: Signal,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

/// Solves `min ‖s‖₁ subject to psi·s = y`.
pub fn basis_pursuit(psi: &Matrix, y: &Signal, cfg: &SolverConfig) -> Result<SolveReport> {
    PreparedSolver::new(psi, &cfg.with_kind(SolverKind::Bp))?.solve(y)
}

/// Solves `min ½‖psi·s − y‖₂² + λ‖s‖₁`.
pub fn bpdn(psi: &Matrix, y: &Signal, cfg: &SolverConfig) -> Result<SolveReport> {
    PreparedSolver::new(psi, &cfg.with_kind(SolverKind::Bpdn))?.solve(y)
}

/// Orthogonal matching pursuit with a least-squares refit after every atom.
pub fn omp(psi: &Matrix, y: &Signal, cfg: &SolverConfig) -> Result<SolveReport> {
    PreparedSolver::new(psi, &cfg.with_kind(SolverKind::Omp))?.solve(y)
}

/// A solver bound to one sensing matrix, with its factorizations cached.
pub struct PreparedSolver {
    psi: Matrix,
    cfg: SolverConfig,
    state: Prepared,
}

enum Prepared {
    /// Row-major `n × m` matrix `psiᵀ (psi psiᵀ)⁻¹`.
    Bp { pinv: Matrix },
    /// Row-major `n × m` matrix `psiᵀ (ρI + psi psiᵀ)⁻¹`.
    Bpdn { woodbury: Matrix },
    Omp { col_norms: Vec<f64> },
}

impl PreparedSolver {
    pub fn new(psi: &Matrix, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let state = match cfg.kind {
            SolverKind::Bp => {
                if psi.rows() > psi.cols() {
                    return Err(Error::RankDeficient(format!(
                        "{}x{} sensing matrix cannot have full row rank",
                        psi.rows(),
                        psi.cols()
                    )));
                }
                let chol = cholesky(&psi.gram_rows(), RANK_TOL, "basis pursuit")?;
                let z = chol.solve(&psi.to_dmatrix());
                Prepared::Bp {
                    pinv: Matrix::from_dmatrix(&z.transpose()),
                }
            }
            SolverKind::Bpdn => {
                let mut g = psi.gram_rows();
                for i in 0..g.rows() {
                    g.set(i, i, g.get(i, i) + cfg.rho);
                }
                let chol = cholesky(&g, 1e-14, "bpdn")?;
                let z = chol.solve(&psi.to_dmatrix());
                Prepared::Bpdn {
                    woodbury: Matrix::from_dmatrix(&z.transpose()),
                }
            }
            SolverKind::Omp => {
                let col_norms: Vec<f64> = (0..psi.cols()).map(|j| norm2(&psi.column(j))).collect();
                if let Some(j) = col_norms.iter().position(|v| *v == 0.0) {
                    return Err(Error::InvalidArgument(format!("OMP requires nonzero columns; column {j} is zero")));
                }
                Prepared::Omp { col_norms }
            }
        };
        Ok(Self {
            psi: psi.clone(),
            cfg: *cfg,
            state,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn solve(&self, y: &Signal) -> Result<SolveReport> {
        if y.dim() != self.psi.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} measurements for a sensing matrix with {} rows",
                y.dim(),
                self.psi.rows()
            )));
        }
        match &self.state {
            Prepared::Bp { pinv } => Ok(self.solve_bp(pinv, y)),
            Prepared::Bpdn { woodbury } => Ok(self.solve_bpdn(woodbury, y)),
            Prepared::Omp { col_norms } => self.solve_omp(col_norms, y),
        }
    }

    fn residual(&self, s: &[f64], y: &[f64]) -> f64 {
        let mut r = vec![0.0; y.len()];
        self.psi.mul_vec_into(s, &mut r);
        r.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    fn solve_bp(&self, pinv: &Matrix, y: &[f64]) -> SolveReport {
        let (m, n) = (self.psi.rows(), self.psi.cols());
        let cfg = &self.cfg;
        let ynorm = norm2(y);
        let feas_tol = 1e-6 * ynorm.max(1.0);
        let conv_tol = cfg.abs_tol * (m as f64).sqrt() + cfg.rel_tol * ynorm;
        let mut q = vec![0.0; n];
        pinv.mul_vec_into(y, &mut q);

        if m == n {
            // The feasible set is a single point.
            let primal = self.residual(&q, y);
            return SolveReport {
                solution: Signal::from_vec_unchecked(q),
                iterations: 0,
                primal_residual: primal,
                dual_residual: 0.0,
                converged: primal <= conv_tol.min(feas_tol),
            };
        }

        // The x-update is a projection that does not involve ρ, so ρ can be
        // rebalanced freely (residual balancing with μ = 10, τ = 2).
        let mut rho = cfg.rho;
        let sqrt_n = (n as f64).sqrt();
        let mut x = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut t = vec![0.0; m];
        let mut w = vec![0.0; n];
        let mut iterations = 0;
        let mut admm_done = false;
        let mut dual = f64::INFINITY;

        for k in 1..=cfg.max_iters {
            iterations = k;
            let thresh = 1.0 / rho;
            for i in 0..n {
                v[i] = z[i] - u[i];
            }
            // x = v − pinv·(psi·v − y) = v − pinv·psi·v + q
            self.psi.mul_vec_into(&v, &mut t);
            pinv.mul_vec_into(&t, &mut w);
            let mut r2 = 0.0;
            let mut s2 = 0.0;
            let (mut x2, mut z2, mut u2) = (0.0, 0.0, 0.0);
            for i in 0..n {
                x[i] = v[i] - w[i] + q[i];
                let zi = soft(x[i] + u[i], thresh);
                let dz = zi - z[i];
                z[i] = zi;
                u[i] += x[i] - zi;
                r2 += (x[i] - zi) * (x[i] - zi);
                s2 += dz * dz;
                x2 += x[i] * x[i];
                z2 += zi * zi;
                u2 += u[i] * u[i];
            }
            let r = r2.sqrt();
            dual = rho * s2.sqrt();
            let eps_pri = sqrt_n * cfg.abs_tol + cfg.rel_tol * x2.sqrt().max(z2.sqrt());
            let eps_dual = sqrt_n * cfg.abs_tol + cfg.rel_tol * rho * u2.sqrt();
            if r < eps_pri && dual < eps_dual {
                admm_done = true;
                break;
            }
            // u is the scaled dual variable, so it rescales with ρ.
            if r > 10.0 * dual {
                rho *= 2.0;
                u.iter_mut().for_each(|ui| *ui *= 0.5);
            } else if dual > 10.0 * r {
                rho *= 0.5;
                u.iter_mut().for_each(|ui| *ui *= 2.0);
            }
        }

        let fallback = if self.residual(&z, y) <= feas_tol.min(conv_tol) {
            z.clone()
        } else {
            // Project the sparse iterate onto {s : psi·s = y}.
            let mut t = vec![0.0; m];
            self.psi.mul_vec_into(&z, &mut t);
            t.iter_mut().zip(y).for_each(|(a, b)| *a -= b);
            let mut corr = vec![0.0; n];
            pinv.mul_vec_into(&t, &mut corr);
            z.iter().zip(&corr).map(|(a, c)| a - c).collect()
        };
        let mut solution = self.polish(&z, y, norm1(&fallback)).unwrap_or(fallback);
        solution.iter_mut().for_each(|v| {
            if *v == 0.0 {
                *v = 0.0; // normalize -0.0
            }
        });
        let primal = self.residual(&solution, y);
        SolveReport {
            solution: Signal::from_vec_unchecked(solution),
            iterations,
            primal_residual: primal,
            dual_residual: dual,
            converged: admm_done && primal <= conv_tol && primal <= feas_tol,
        }
    }

    /// Least-squares refit on the support of `z`, pruned of entries below a
    /// few relative thresholds. A refit is accepted only when it is feasible
    /// to high accuracy, keeps the sign pattern and its L1 norm does not
    /// exceed `l1`, that of the feasible fallback.
    fn polish(&self, z: &[f64], y: &[f64], l1: f64) -> Option<Vec<f64>> {
        let zmax = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if zmax == 0.0 {
            return None;
        }
        let ynorm = norm2(y).max(1.0);
        let mut last: Option<Vec<usize>> = None;
        for rel in [0.0, 1e-9, 1e-7, 1e-5, 1e-4, 1e-3, 1e-2] {
            let support: Vec<usize> = (0..z.len()).filter(|&i| z[i].abs() > rel * zmax).collect();
            if last.as_ref() == Some(&support) {
                continue;
            }
            last = Some(support.clone());
            if support.is_empty() || support.len() > self.psi.rows().min(POLISH_MAX_SUPPORT) {
                continue;
            }
            let sub = self.psi.select_columns(&support);
            let Ok(w) = least_squares(&sub, y) else { continue };
            if support.iter().zip(&w).any(|(&j, wj)| wj.signum() != z[j].signum()) {
                continue;
            }
            let mut s = vec![0.0; z.len()];
            for (&j, &wj) in support.iter().zip(&w) {
                s[j] = wj;
            }
            if self.residual(&s, y) > 1e-10 * ynorm {
                continue;
            }
            if norm1(&s) > l1 + 1e-9 * l1.max(1.0) {
                continue;
            }
            return Some(s);
        }
        None
    }

    fn solve_bpdn(&self, woodbury: &Matrix, y: &[f64]) -> SolveReport {
        let (m, n) = (self.psi.rows(), self.psi.cols());
        let cfg = &self.cfg;
        let aty = self.psi.tr_mul_vec(y).expect("shape checked");
        let ynorm = norm2(y);
        let inf = aty.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if cfg.lambda >= inf {
            // Zero satisfies the optimality condition ‖psiᵀy‖∞ ≤ λ.
            return SolveReport {
                solution: Signal::zeros(n),
                iterations: 0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                converged: true,
            };
        }
        let rho = cfg.rho;
        let thresh = cfg.lambda / rho;
        let sqrt_n = (n as f64).sqrt();
        let conv_tol = cfg.abs_tol * (m as f64).sqrt() + cfg.rel_tol * ynorm;
        let mut x = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut t = vec![0.0; m];
        let mut w = vec![0.0; n];
        let (mut r, mut dual) = (f64::INFINITY, f64::INFINITY);
        let mut iterations = 0;
        let mut converged = false;
        for k in 1..=cfg.max_iters {
            iterations = k;
            for i in 0..n {
                b[i] = aty[i] + rho * (z[i] - u[i]);
            }
            // (psiᵀpsi + ρI)⁻¹ b = (b − W·psi·b) / ρ
            self.psi.mul_vec_into(&b, &mut t);
            woodbury.mul_vec_into(&t, &mut w);
            let (mut r2, mut s2, mut x2, mut z2, mut u2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                x[i] = (b[i] - w[i]) / rho;
                let zi = soft(x[i] + u[i], thresh);
                let dz = zi - z[i];
                z[i] = zi;
                u[i] += x[i] - zi;
                r2 += (x[i] - zi) * (x[i] - zi);
                s2 += dz * dz;
                x2 += x[i] * x[i];
                z2 += zi * zi;
                u2 += u[i] * u[i];
            }
            r = r2.sqrt();
            dual = rho * s2.sqrt();
            let eps_pri = sqrt_n * cfg.abs_tol + cfg.rel_tol * x2.sqrt().max(z2.sqrt());
            let eps_dual = sqrt_n * cfg.abs_tol + cfg.rel_tol * rho * u2.sqrt();
            if r < eps_pri && dual < eps_dual {
                converged = r <= conv_tol;
                break;
            }
        }
        z.iter_mut().for_each(|v| {
            if *v == 0.0 {
                *v = 0.0;
            }
        });
        if cfg.debias {
            let support: Vec<usize> = (0..n).filter(|&j| z[j] != 0.0).collect();
            if !support.is_empty() && support.len() <= m {
                if let Ok(w) = least_squares(&self.psi.select_columns(&support), y) {
                    z.iter_mut().for_each(|v| *v = 0.0);
                    for (&j, wj) in support.iter().zip(w) {
                        z[j] = wj;
                    }
                }
            }
        }
        SolveReport {
            solution: Signal::from_vec_unchecked(z),
            iterations,
            primal_residual: r,
            dual_residual: dual,
            converged,
        }
    }

    fn solve_omp(&self, col_norms: &[f64], y: &[f64]) -> Result<SolveReport> {
        let (m, n) = (self.psi.rows(), self.psi.cols());
        let cfg = &self.cfg;
        let budget = cfg.omp_sparsity.unwrap_or(m.min(n)).min(m.min(n));
        let mut residual = y.to_vec();
        let mut support: Vec<usize> = Vec::new();
        let mut coeffs: Vec<f64> = Vec::new();
        let psi_t = self.psi.transpose();
        let mut rnorm = norm2(&residual);
        while rnorm > cfg.abs_tol && support.len() < budget {
            let mut best = None;
            let mut best_val = -1.0;
            for j in 0..n {
                let c = dot(psi_t.row(j), &residual).abs() / col_norms[j];
                if c > best_val {
                    best_val = c;
                    best = Some(j);
                }
            }
            let j = best.expect("matrix has columns");
            if support.contains(&j) {
                break;
            }
            support.push(j);
            let sub = self.psi.select_columns(&support);
            match least_squares(&sub, y) {
                Ok(w) => coeffs = w,
                Err(_) => {
                    support.pop();
                    break;
                }
            }
            let fit = sub.mul_vec(&coeffs)?;
            residual = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
            rnorm = norm2(&residual);
        }
        let mut s = vec![0.0; n];
        for (&j, &c) in support.iter().zip(&coeffs) {
            s[j] = c;
        }
        Ok(SolveReport {
            solution: Signal::from_vec_unchecked(s),
            iterations: support.len(),
            primal_residual: rnorm,
            dual_residual: 0.0,
            converged: rnorm <= cfg.abs_tol || support.len() == budget,
        })
    }
}

#[inline]
fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{coherence, l0_oracle};
    use crate::measurement::{generate_matrix, MatrixDescriptor, MatrixKind, Scaling, SeededRng};

    fn gaussian(m: usize, n: usize, seed: u64) -> Matrix {
        generate_matrix(&MatrixDescriptor::new(MatrixKind::Gaussian, m, n, seed, Scaling::InvSqrtM).unwrap()).unwrap()
    }

    fn planted(rng: &mut SeededRng, n: usize, k: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for j in rng.sample_indices(n, k) {
            s[j] = rng.next_sign();
        }
        s
    }

    fn sig(v: Vec<f64>) -> Signal {
        Signal::new(v).unwrap()
    }

    #[test]
    fn identity_constraint_is_a_point() {
        let r = basis_pursuit(&Matrix::identity(4), &sig(vec![0.0, 5.0, 0.0, 0.0]), &SolverConfig::default()).unwrap();
        assert_eq!(r.solution.values(), &[0.0, 5.0, 0.0, 0.0]);
        assert!(r.converged);
    }

    #[test]
    fn picks_the_l1_minimal_point_of_a_line() {
        let psi = Matrix::from_rows(&[&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.5]]).unwrap();
        let y = sig(vec![1.0, 0.0]);
        // Feasible family x(t) = (1 − t/2, −t/2, t); grid search over t for the L1 minimum.
        let (mut best_t, mut best) = (0.0, f64::INFINITY);
        for i in -4000..=4000 {
            let t = i as f64 / 1000.0;
            let l1 = (1.0 - 0.5 * t).abs() + (0.5 * t).abs() + t.abs();
            if l1 < best {
                best = l1;
                best_t = t;
            }
        }
        assert_eq!(best_t, 0.0);
        let r = basis_pursuit(&psi, &y, &SolverConfig::default()).unwrap();
        let expect = [1.0, 0.0, 0.0];
        for (a, b) in r.solution.iter().zip(expect) {
            assert!((a - b).abs() < 1e-6, "{:?}", r.solution);
        }
        assert!(r.converged);
    }

    #[test]
    fn planted_recovery_at_50_by_100() {
        let mut rng = SeededRng::new(77);
        let psi = gaussian(50, 100, 3);
        let s = planted(&mut rng, 100, 5);
        let y = sig(psi.mul_vec(&s).unwrap());
        let r = basis_pursuit(&psi, &y, &SolverConfig::default()).unwrap();
        let err = norm2(&crate::matrix::sub(&r.solution, &s)) / norm2(&s);
        assert!(err <= 1e-5, "relative error {err}");
        assert!(r.converged);
        assert!(r.primal_residual <= 1e-6 * norm2(&y).max(1.0));
    }

    #[test]
    fn agrees_with_l0_oracle_on_tiny_instances() {
        let mut rng = SeededRng::new(5);
        for seed in 0..10u64 {
            let psi = gaussian(12, 20, 100 + seed);
            let s = planted(&mut rng, 20, 2);
            let y = sig(psi.mul_vec(&s).unwrap());
            let bp = basis_pursuit(&psi, &y, &SolverConfig::default()).unwrap();
            let l0 = l0_oracle(&psi, &y, 3).unwrap();
            for (a, b) in bp.solution.iter().zip(l0.iter()) {
                assert!((a - b).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn objective_never_exceeds_planted_truth() {
        let mut rng = SeededRng::new(8);
        for seed in 0..10u64 {
            let psi = gaussian(15, 40, seed);
            let s = planted(&mut rng, 40, 6);
            let y = sig(psi.mul_vec(&s).unwrap());
            let r = basis_pursuit(&psi, &y, &SolverConfig::default()).unwrap();
            assert!(norm1(&r.solution) <= norm1(&s) + 1e-5);
            if r.converged {
                assert!(r.primal_residual <= 1e-6 * norm2(&y).max(1.0));
            }
        }
    }

    #[test]
    fn scale_equivariance() {
        let mut rng = SeededRng::new(21);
        let psi = gaussian(20, 40, 9);
        let s = planted(&mut rng, 40, 3);
        let y = psi.mul_vec(&s).unwrap();
        let base = basis_pursuit(&psi, &sig(y.clone()), &SolverConfig::default()).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let yc: Vec<f64> = y.iter().map(|v| v * c).collect();
            let r = basis_pursuit(&psi.scaled(c), &sig(yc), &SolverConfig::default()).unwrap();
            for (a, b) in r.solution.iter().zip(base.solution.iter()) {
                assert!((a - b).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn rank_deficient_matrix_is_rejected() {
        let psi = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]).unwrap();
        let r = basis_pursuit(&psi, &sig(vec![1.0, 2.0]), &SolverConfig::default());
        assert!(matches!(r, Err(Error::RankDeficient(_))));
        let tall = Matrix::zeros(3, 2);
        assert!(basis_pursuit(&tall, &sig(vec![0.0; 3]), &SolverConfig::default()).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let mut rng = SeededRng::new(2);
        let psi = gaussian(20, 60, 4);
        let y = sig((0..20).map(|_| rng.next_normal()).collect());
        let cfg = SolverConfig { max_iters: 3, ..SolverConfig::default() };
        let r = basis_pursuit(&psi, &y, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn bpdn_zero_cases() {
        let psi = gaussian(10, 20, 1);
        let r = bpdn(&psi, &Signal::zeros(10), &SolverConfig::default()).unwrap();
        assert!(r.solution.iter().all(|v| *v == 0.0));
        let y = sig((0..10).map(|i| i as f64 * 0.01).collect());
        let lam = norm_inf_of(&psi.tr_mul_vec(&y).unwrap());
        let cfg = SolverConfig { lambda: lam, ..SolverConfig::default() };
        let r = bpdn(&psi, &y, &cfg).unwrap();
        assert!(r.solution.iter().all(|v| *v == 0.0));
        let bad = SolverConfig { lambda: 0.0, ..SolverConfig::default() };
        assert!(bpdn(&psi, &y, &bad).is_err());
    }

    fn norm_inf_of(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    #[test]
    fn bpdn_recovers_planted_support_under_noise() {
        let sigma = 0.01;
        // Noise-calibrated weight 2σ√(2 ln n), then a least-squares refit.
        let cfg = SolverConfig {
            lambda: 2.0 * sigma * (2.0 * (100f64).ln()).sqrt(),
            debias: true,
            ..SolverConfig::default()
        };
        let mut rng = SeededRng::new(99);
        for seed in 0..20u64 {
            let psi = gaussian(50, 100, 1000 + seed);
            let s = planted(&mut rng, 100, 5);
            let mut y = psi.mul_vec(&s).unwrap();
            y.iter_mut().for_each(|v| *v += sigma * rng.next_normal());
            let r = bpdn(&psi, &sig(y), &cfg).unwrap();
            let truth: Vec<usize> = (0..100).filter(|&j| s[j] != 0.0).collect();
            let mut idx: Vec<usize> = (0..100).collect();
            idx.sort_by(|&a, &b| r.solution[b].abs().total_cmp(&r.solution[a].abs()));
            let mut top = idx[..5].to_vec();
            top.sort_unstable();
            assert_eq!(top, truth, "seed {seed}");
            for j in 0..100 {
                assert!((r.solution[j] - s[j]).abs() <= 5.0 * sigma, "seed {seed} entry {j}: {} vs {} conv {} it {}", r.solution[j], s[j], r.converged, r.iterations);
            }
        }
    }

    #[test]
    fn omp_one_sparse_and_zero() {
        let psi = gaussian(10, 30, 6);
        let mut s = vec![0.0; 30];
        s[17] = -2.5;
        let y = sig(psi.mul_vec(&s).unwrap());
        let r = omp(&psi, &y, &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.solution[17] + 2.5).abs() < 1e-12);
        let z = omp(&psi, &Signal::zeros(10), &SolverConfig::default()).unwrap();
        assert_eq!(z.iterations, 0);
        assert!(z.solution.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn omp_rejects_zero_columns() {
        let psi = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert!(omp(&psi, &sig(vec![1.0, 0.0]), &SolverConfig::default()).is_err());
    }

    /// `[I_32 | H_32/√32]` with columns permuted and sign-flipped per seed;
    /// its coherence is 1/√32 < 1/5.
    fn identity_hadamard_frame(rng: &mut SeededRng) -> Matrix {
        let n = 32;
        let mut h = vec![vec![1.0f64]];
        while h.len() < n {
            let k = h.len();
            let mut next = vec![vec![0.0; 2 * k]; 2 * k];
            for i in 0..k {
                for j in 0..k {
                    next[i][j] = h[i][j];
                    next[i][j + k] = h[i][j];
                    next[i + k][j] = h[i][j];
                    next[i + k][j + k] = -h[i][j];
                }
            }
            h = next;
        }
        let scale = 1.0 / (n as f64).sqrt();
        let perm = rng.sample_indices(2 * n, 2 * n);
        let mut order: Vec<usize> = perm;
        for i in (1..order.len()).rev() {
            let j = rng.below(i + 1);
            order.swap(i, j);
        }
        let signs: Vec<f64> = (0..2 * n).map(|_| rng.next_sign()).collect();
        Matrix::from_fn(n, 2 * n, |i, j| {
            let c = order[j];
            let v = if c < n {
                if i == c { 1.0 } else { 0.0 }
            } else {
                h[i][c - n] * scale
            };
            v * signs[j]
        })
    }

    #[test]
    fn omp_recovers_three_sparse_with_low_coherence() {
        let mut rng = SeededRng::new(31);
        for _ in 0..20 {
            let psi = identity_hadamard_frame(&mut rng);
            assert!(coherence(&psi).unwrap() < 0.2);
            let s = planted(&mut rng, psi.cols(), 3);
            let y = sig(psi.mul_vec(&s).unwrap());
            let r = omp(&psi, &y, &SolverConfig { omp_sparsity: Some(3), ..SolverConfig::default() }).unwrap();
            for j in 0..psi.cols() {
                assert!((r.solution[j] - s[j]).abs() < 1e-9);
            }
        }
    }
}
