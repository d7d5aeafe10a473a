//! Splitting the reconstruction error into distribution, CS and original
//! terms, and the error map of equalizing a whole image.

use std::path::PathBuf;

use dkstp_cs::io::read_pgm;
use dkstp_cs::matrix::Signal;
use dkstp_cs::metrics::{decompose_error, mean_reconstruction_error_map};
use dkstp_cs::pipeline::{run_once, BlockLayout};
use dkstp_cs::{MatrixKind, Method, SensingScheme, SolverConfig};

fn main() -> dkstp_cs::Result<()> {
    let x = Signal::new(vec![0.2, 0.4, 0.9, 0.1])?;
    let x_star = Signal::new(vec![0.25, 0.3, 0.5, 0.5])?;
    let d = decompose_error(&x, &x_star, 2)?;
    println!("{d:#?}");

    let image = read_pgm(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/camera.pgm"))?;
    let map = mean_reconstruction_error_map(&image, 2)?;
    let mode = map.histogram.mode();
    println!("equalization error map: MAE {:.4} on [0,1], histogram mode bin {mode} {:?}", map.mae, map.histogram.bin_edges(mode));

    let scheme = SensingScheme::new(Method::DkStpCs, 2, MatrixKind::Gaussian, 1)?;
    let layout = BlockLayout::square(&image, 16)?;
    let (_, eval) = run_once(&image, &image, &scheme, &layout, 0.5, &SolverConfig::default())?;
    let s = &eval.decomposition;
    println!("pipeline run over {} blocks (terms are summed L1 norms, total is L2):", eval.per_block.len());
    println!("{s:#?}");
    Ok(())
}
