#![no_main]

use libfuzzer_sys::fuzz_target;
use patchvid::io::{decode_ppm, encode_ppm};

fuzz_target!(|data: &[u8]| {
    if let Ok(v) = decode_ppm(data) {
        let bytes = encode_ppm(&v, 0).expect("decoded frame encodes");
        assert_eq!(decode_ppm(&bytes).expect("encoded frame decodes"), v);
    }
});
