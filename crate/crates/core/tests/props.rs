use patchvid::config::RunConfig;
use patchvid::dynamics::decode_flo;
use patchvid::io::{decode_ppm, decode_y4m};
use patchvid::{fold_median, unfold, Dims, PatchShape, Video};
use proptest::prelude::*;

proptest! {
    #[test]
    fn y4m_decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode_y4m(&bytes);
    }

    #[test]
    fn y4m_decoder_survives_mangled_headers(w in 0usize..5, h in 0usize..5, tail in proptest::collection::vec(any::<u8>(), 0..120)) {
        let mut bytes = format!("YUV4MPEG2 W{w} H{h} C444\n").into_bytes();
        bytes.extend(tail);
        let _ = decode_y4m(&bytes);
    }

    #[test]
    fn ppm_decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode_ppm(&bytes);
        let mut p6 = b"P6 ".to_vec();
        p6.extend(&bytes);
        let _ = decode_ppm(&p6);
    }

    #[test]
    fn flo_decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode_flo(&bytes);
        let mut b = b"PIEH".to_vec();
        b.extend(&bytes);
        let _ = decode_flo(&b);
    }

    #[test]
    fn config_parser_never_panics(text in "[a-z_.= 0-9,#\\n-]{0,120}") {
        let _ = RunConfig::parse(&text);
    }

    #[test]
    fn fold_of_unfold_is_identity(
        t in 1usize..5, h in 1usize..7, w in 1usize..7,
        pt in 1usize..4, ph in 1usize..4, pw in 1usize..4,
        seed in any::<u64>(),
    ) {
        prop_assume!(pt <= t && ph <= h && pw <= w);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = Video::from_fn(Dims::new(t, h, w), 2, |_, _, _, _| rng.gen()).unwrap();
        let shape = PatchShape::new(pt, ph, pw);
        prop_assert_eq!(fold_median(&unfold(&v, shape).unwrap(), v.dims(), shape).unwrap(), v);
    }
}
