//! Spark, coherence, RIP estimates and uniqueness bounds, before and after
//! DK-STP expansion.

use dkstp_cs::analysis::{coherence, intra_group_check, rip_constant, spark, uniqueness_bounds, welch_bound, RipMode};
use dkstp_cs::measurement::{generate_matrix, MatrixDescriptor, MatrixKind, Scaling};
use dkstp_cs::stp::expand_dkstp;

fn main() -> dkstp_cs::Result<()> {
    let a = generate_matrix(&MatrixDescriptor::new(MatrixKind::Gaussian, 6, 8, 3, Scaling::InvSqrtM)?)?;
    let b = uniqueness_bounds(&a, 7)?;
    println!("A (6x8): spark {:?}, coherence {:.3} (Welch {:.3})", b.spark, b.coherence, welch_bound(6, 8));
    println!("  unique below k = {} (spark), k = {} (coherence)", b.k_spark, b.k_mu);
    let rip = rip_constant(&a, 2, RipMode::Exhaustive, 0)?;
    println!("  delta_2 = {:.3} over {} supports", rip.delta, rip.supports_checked);

    // Expanding with γ = 2 duplicates every column.
    let e = expand_dkstp(&a, 2)?;
    let s = spark(&e, 3)?;
    println!("A ⊗ ε_2ᵀ (6x16): spark {:?} witness {:?}, coherence {:.3}", s.spark, s.witness, coherence(&e)?);
    let g = intra_group_check(&e, 2, None)?;
    println!(
        "  identical columns within groups: {}, cross-group coherence {:.3} < tau {:.3}: {}",
        g.within_group_equal, g.cross_group_coherence, g.tau, g.holds
    );
    Ok(())
}
