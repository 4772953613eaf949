#![no_main]

use auvdiff::nn::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = io::decode(data) {
        let bytes = io::encode(&params);
        assert_eq!(io::decode(&bytes).expect("re-decode"), params);
    }
});
