mod common;

use cvil_core::protocol::{decode, encode, FreshnessFilter};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn golden_bytes_are_stable() {
    let records = common::golden_records();
    let packets = common::golden_packets();
    assert_eq!(records.len(), packets.len());
    for (bytes, packet) in records.iter().zip(&packets) {
        assert_eq!(&encode(packet), bytes, "{packet:?}");
        assert_eq!(&decode(bytes).unwrap(), packet);
    }
}

#[test]
fn roundtrip_random_messages() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100_000 {
        let p = common::random_packet(&mut rng);
        let bytes = encode(&p);
        let back = decode(&bytes).unwrap();
        assert_eq!(encode(&back), bytes);
        assert_eq!(back, p);
    }
}

#[test]
fn freshness_under_permutation_and_duplication() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let mut ticks: Vec<u32> = (0..1000).collect();
        let dups: Vec<u32> = (0..rng.random_range(0..300))
            .map(|_| rng.random_range(0..1000))
            .collect();
        ticks.extend(dups);
        ticks.shuffle(&mut rng);
        let mut f = FreshnessFilter::new();
        let accepted: Vec<u32> = ticks.into_iter().filter(|&t| f.accept(t)).collect();
        assert!(accepted.windows(2).all(|w| w[0] < w[1]));
    }
}
