//! Packet serialization and transmission cost compared to sending a dense
//! matrix.

use dkstp_cs::io::{decode_packet, encode_packet, PACKET_HEADER_LEN};
use dkstp_cs::pipeline::{compress, BlockLayout, TransmissionCost};
use dkstp_cs::{GrayImage, MatrixKind, Method, SensingScheme};

fn main() -> dkstp_cs::Result<()> {
    let image = GrayImage::from_fn(64, 64, |r, c| ((r * 3 + c * 5) % 256) as u8)?;
    let layout = BlockLayout::square(&image, 16)?;
    let scheme = SensingScheme::new(Method::DkStpCs, 2, MatrixKind::Bernoulli, 5)?;
    let packet = compress(&image, &scheme, &layout, 0.5)?;

    let bytes = encode_packet(&packet)?;
    let back = decode_packet(&bytes)?;
    assert_eq!(back, packet);
    println!("packet: {} bytes ({PACKET_HEADER_LEN} header), round trip exact", bytes.len());

    let d = packet.descriptor();
    let ours = TransmissionCost::of_packet(&packet);
    let p = layout.block_dim();
    let dense_cs = TransmissionCost::dense(Method::Cs, 1, p, packet.measurements(), layout.block_count())?;
    let dense_dk = TransmissionCost::dense(Method::DkStpCs, 2, p, packet.measurements(), layout.block_count())?;
    println!("descriptor regenerates a {}x{} matrix", d.rows(), d.cols());
    println!("DK-STP packet: {ours:?} total {}", ours.total());
    println!("dense CS:    {dense_cs:?} total {}", dense_cs.total());
    println!("dense DK-STP: {dense_dk:?} total {}", dense_dk.total());

    match decode_packet(&bytes[..bytes.len() - 3]) {
        Err(e) => println!("truncated packet rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
