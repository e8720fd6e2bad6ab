#![no_main]

use libfuzzer_sys::fuzz_target;
use patchvid::io::{decode_y4m, encode_y4m};

fuzz_target!(|data: &[u8]| {
    if let Ok(y) = decode_y4m(data) {
        // anything accepted must re-encode to a stream of the same size
        let bytes = encode_y4m(&y.video, y.rate).expect("decoded video encodes");
        let again = decode_y4m(&bytes).expect("encoded stream decodes");
        assert_eq!(again.video.dims(), y.video.dims());
    }
});
