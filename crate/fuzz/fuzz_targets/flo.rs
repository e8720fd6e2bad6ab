#![no_main]

use libfuzzer_sys::fuzz_target;
use patchvid::dynamics::decode_flo;

fuzz_target!(|data: &[u8]| {
    let _ = decode_flo(data);
});
