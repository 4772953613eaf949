#![no_main]

use auvdiff::harness::checkpoint::CheckpointHeader;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = CheckpointHeader::parse(data);
});
