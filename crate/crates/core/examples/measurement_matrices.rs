//! Seeded measurement matrices and the three sensing schemes.

use dkstp_cs::matrix::Signal;
use dkstp_cs::measurement::{build_operator, generate_matrix, MatrixDescriptor, MatrixKind, Method, Scaling, SensingScheme};

fn main() -> dkstp_cs::Result<()> {
    for kind in [MatrixKind::Gaussian, MatrixKind::Bernoulli, MatrixKind::Toeplitz] {
        let d = MatrixDescriptor::new(kind, 3, 5, 42, Scaling::Unit)?;
        let a = generate_matrix(&d)?;
        println!("{} 3x5, seed 42:", kind.name());
        for i in 0..a.rows() {
            println!("  {:>7.3?}", a.row(i));
        }
        // Same descriptor, same matrix: only the 18-byte descriptor is transmitted.
        assert_eq!(generate_matrix(&MatrixDescriptor::from_bytes(&d.to_bytes())?)?, a);
    }

    // A 256-dimensional block sampled at ratio 0.25 under each scheme.
    let p = 256;
    let x = Signal::new((0..p).map(|i| (i as f64 / 17.0).sin()).collect())?;
    for method in Method::ALL {
        let scheme = SensingScheme::new(method, 2, MatrixKind::Gaussian, 7)?;
        let m = scheme.measurement_count(p, 0.25)?;
        let op = build_operator(&scheme, p, m)?;
        let a = op.stored_matrix();
        let y = op.apply(&x)?;
        println!(
            "{:>5}: stored matrix {}x{} ({} values), y has {} entries",
            method.name(),
            a.rows(),
            a.cols(),
            op.transmitted_params(),
            y.dim()
        );
    }
    Ok(())
}
