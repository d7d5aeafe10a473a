//! Block-wise compression and reconstruction of a grayscale image with each
//! sensing scheme. Writes the reconstructions next to the target directory.
//!
//! `cargo run --release --example image_pipeline [image.pgm] [cr]`

use std::path::PathBuf;

use dkstp_cs::io::{read_pgm, write_pgm};
use dkstp_cs::pipeline::{basis_for, compress, reconstruct, BlockLayout};
use dkstp_cs::{MatrixKind, Method, SensingScheme, SolverConfig};

fn main() -> dkstp_cs::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/camera.pgm"));
    let cr: f64 = args.next().map_or(0.5, |s| s.parse().expect("cr must be a number"));

    let image = read_pgm(&path)?;
    let layout = BlockLayout::square(&image, 16)?;
    let out_dir = std::env::temp_dir();
    for method in Method::ALL {
        let scheme = SensingScheme::new(method, 2, MatrixKind::Gaussian, 2024)?;
        let packet = compress(&image, &scheme, &layout, cr)?;
        let report = reconstruct(&packet, &basis_for(&packet)?, &SolverConfig::default())?;
        let eval = report.evaluate(&image)?;
        let out = out_dir.join(format!("recon_{}.pgm", method.name()));
        write_pgm(&report.image, &out)?;
        println!(
            "{:>5}: m = {:>3} per block, PSNR {:.2} dB, MAE {:.2}, all blocks converged: {} -> {}",
            method.name(),
            packet.measurements(),
            eval.quality.psnr_db,
            eval.quality.mae,
            report.all_converged(),
            out.display()
        );
    }
    Ok(())
}
