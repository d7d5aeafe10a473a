//! Property-based invariants.

use dkstp_cs::io::{decode_packet, decode_pgm, encode_packet, encode_pgm};
use dkstp_cs::matrix::{Matrix, Signal};
use dkstp_cs::metrics::decompose_error;
use dkstp_cs::pipeline::{compress, BlockLayout};
use dkstp_cs::sparsity::DctBasis;
use dkstp_cs::stp::{apply_dkstp_operator, equalize, expand_dkstp, group_sum, kronecker, stp};
use dkstp_cs::{GrayImage, MatrixKind, Method, SensingScheme};
use proptest::prelude::*;

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| values(r * c).prop_map(move |v| Matrix::new(r, c, v).unwrap()))
}

proptest! {
    #[test]
    fn group_sum_of_equalize_is_identity(v in values(12), gamma in 1usize..5) {
        let n = 12 / gamma * gamma;
        let xg = group_sum(&Signal::new(v[..n].to_vec()).unwrap(), gamma).unwrap();
        let back = group_sum(&equalize(&xg), gamma).unwrap();
        for (a, b) in back.values().iter().zip(xg.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn group_sum_does_not_increase_support(v in values(12), mask in prop::collection::vec(any::<bool>(), 12), gamma in prop::sample::select(vec![1usize, 2, 3, 4, 6])) {
        let x: Vec<f64> = v.iter().zip(&mask).map(|(a, m)| if *m { *a } else { 0.0 }).collect();
        let x = Signal::new(x).unwrap();
        prop_assert!(group_sum(&x, gamma).unwrap().into_signal().l0() <= x.l0());
    }

    #[test]
    fn implicit_operator_matches_expansion(a in matrix(5, 5), gamma in 1usize..5, seed in values(20)) {
        let n = a.cols() * gamma;
        let x = Signal::new(seed.iter().cycle().take(n).copied().collect()).unwrap();
        let implicit = apply_dkstp_operator(&a, gamma, &x).unwrap();
        let dense = expand_dkstp(&a, gamma).unwrap().mul_vec(x.values()).unwrap();
        let scale = dense.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (u, v) in implicit.values().iter().zip(&dense) {
            prop_assert!((u - v).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn stp_reduces_to_matmul_when_shapes_agree(a in matrix(4, 4), cols in 1usize..4, seed in values(16)) {
        let b = Matrix::new(a.cols(), cols, seed.iter().cycle().take(a.cols() * cols).copied().collect()).unwrap();
        prop_assert_eq!(stp(&a, &b).unwrap(), a.matmul(&b).unwrap());
    }

    #[test]
    fn kronecker_shape(a in matrix(3, 3), b in matrix(3, 3)) {
        let k = kronecker(&a, &b).unwrap();
        prop_assert_eq!((k.rows(), k.cols()), (a.rows() * b.rows(), a.cols() * b.cols()));
        prop_assert_eq!(k.get(0, 0), a.get(0, 0) * b.get(0, 0));
    }

    #[test]
    fn dct_round_trip(v in values(16)) {
        let basis = DctBasis::new(16).unwrap();
        let x = Signal::new(v.clone()).unwrap();
        let back = basis.synthesize(&basis.analyze(&x).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn safe_bound_always_holds(gamma in 1usize..5, groups in 1usize..16, v in values(128)) {
        let n = gamma * groups;
        let x = Signal::new(v[..n].to_vec()).unwrap();
        let xs = Signal::new(v[64..64 + n].to_vec()).unwrap();
        let d = decompose_error(&x, &xs, gamma).unwrap();
        prop_assert!(d.total_l2 <= d.bound_safe + 1e-12 * (1.0 + d.bound_safe));
    }

    #[test]
    fn pgm_round_trip(w in 1usize..20, h in 1usize..20, px in prop::collection::vec(any::<u8>(), 400)) {
        let img = GrayImage::new(w, h, px[..w * h].to_vec()).unwrap();
        prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn packet_round_trip(
        method in prop::sample::select(Method::ALL.to_vec()),
        gamma in prop::sample::select(vec![1usize, 2, 4]),
        cr in 0.1..1.0f64,
        seed in any::<u64>(),
        px in prop::collection::vec(any::<u8>(), 256),
    ) {
        let img = GrayImage::new(16, 16, px).unwrap();
        let layout = BlockLayout::square(&img, 8).unwrap();
        let scheme = SensingScheme::new(method, gamma, MatrixKind::Gaussian, seed).unwrap();
        let packet = compress(&img, &scheme, &layout, cr).unwrap();
        let bytes = encode_packet(&packet).unwrap();
        prop_assert_eq!(&decode_packet(&bytes).unwrap(), &packet);
        prop_assert_eq!(encode_packet(&decode_packet(&bytes).unwrap()).unwrap(), bytes);
    }
}
