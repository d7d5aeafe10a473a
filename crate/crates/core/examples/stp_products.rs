//! Kronecker, STP and DK-STP products, group sums, and the implicit
//! `A ⊗ ε_γᵀ` operator.

use dkstp_cs::matrix::{Matrix, Signal};
use dkstp_cs::stp::{apply_dkstp_operator, dkstp_unweighted, dkstp_weighted, equalize, expand_dkstp, group_sum, kronecker, stp};

fn show(name: &str, m: &Matrix) {
    println!("{name} ({}x{}):", m.rows(), m.cols());
    for i in 0..m.rows() {
        println!("  {:?}", m.row(i));
    }
}

fn main() -> dkstp_cs::Result<()> {
    let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]])?;
    let b = Matrix::from_rows(&[&[0.0, 1.0, 1.0, 0.0]])?;
    let c = Matrix::column_vector(&[1.0, 2.0, 3.0, 4.0])?;

    show("kron(A, B)", &kronecker(&a, &b)?);
    show("A ⋉ c (STP, mismatched 2 vs 4)", &stp(&a, &c)?);
    show("A ⊙ B' (DK-STP, shape kept)", &dkstp_unweighted(&a, &Matrix::identity(4))?);
    show("weighted DK-STP", &dkstp_weighted(&a, &Matrix::identity(4))?);

    // Group sums and their equalized inverse.
    let x = Signal::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])?;
    let xg = group_sum(&x, 2)?;
    println!("group_sum(x, 2) = {:?}", xg.values());
    println!("equalize        = {:?}", equalize(&xg).values());

    // The implicit operator never forms the expanded matrix.
    let m = Matrix::from_rows(&[&[1.0, -1.0, 0.5], &[0.0, 2.0, 1.0]])?;
    let implicit = apply_dkstp_operator(&m, 2, &x)?;
    let dense = expand_dkstp(&m, 2)?.mul_vec(x.values())?;
    println!("implicit {:?}", implicit.values());
    println!("expanded {dense:?}");
    Ok(())
}
