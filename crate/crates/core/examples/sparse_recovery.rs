//! Basis pursuit, BPDN and OMP on a planted sparse signal, checked against
//! the exhaustive l0 search on a small instance.

use dkstp_cs::analysis::l0_oracle;
use dkstp_cs::matrix::{norm2, sub, Signal};
use dkstp_cs::measurement::{generate_matrix, MatrixDescriptor, MatrixKind, Scaling, SeededRng};
use dkstp_cs::solver::{basis_pursuit, bpdn, omp, SolverConfig, SolverKind};

fn main() -> dkstp_cs::Result<()> {
    let (m, n, k) = (40, 100, 5);
    let psi = generate_matrix(&MatrixDescriptor::new(MatrixKind::Gaussian, m, n, 11, Scaling::InvSqrtM)?)?;
    let mut rng = SeededRng::new(12);
    let mut s = vec![0.0; n];
    for j in rng.sample_indices(n, k) {
        s[j] = rng.next_normal();
    }
    let y = Signal::new(psi.mul_vec(&s)?)?;

    let cfg = SolverConfig::default();
    let err = |x: &[f64]| norm2(&sub(x, &s)) / norm2(&s);
    let r = basis_pursuit(&psi, &y, &cfg)?;
    println!("BP   rel. error {:.2e}, {} iterations, converged {}", err(r.solution.values()), r.iterations, r.converged);
    let r = omp(&psi, &y, &cfg.with_kind(SolverKind::Omp))?;
    println!("OMP  rel. error {:.2e}", err(r.solution.values()));

    // Noisy measurements: BPDN with a least-squares refit on its support.
    let sigma = 0.01;
    let noisy = Signal::new(y.values().iter().map(|v| v + sigma * rng.next_normal()).collect())?;
    let lambda = 2.0 * sigma * (2.0 * (n as f64).ln()).sqrt();
    let cfg_dn = SolverConfig { lambda, debias: true, ..cfg.with_kind(SolverKind::Bpdn) };
    let r = bpdn(&psi, &noisy, &cfg_dn)?;
    println!("BPDN rel. error {:.2e} at noise sigma {sigma}", err(r.solution.values()));

    // Tiny instance: BP agrees with exhaustive l0 minimization.
    let small = generate_matrix(&MatrixDescriptor::new(MatrixKind::Gaussian, 8, 12, 5, Scaling::InvSqrtM)?)?;
    let mut t = vec![0.0; 12];
    t[3] = 1.5;
    let yt = Signal::new(small.mul_vec(&t)?)?;
    let l0 = l0_oracle(&small, &yt, 2)?;
    let bp = basis_pursuit(&small, &yt, &cfg)?;
    println!("l0 oracle vs BP max difference {:.1e}", norm2(&sub(l0.values(), bp.solution.values())));
    Ok(())
}
