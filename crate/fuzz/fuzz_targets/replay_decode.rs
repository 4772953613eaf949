#![no_main]

use auvdiff::rl::ReplayBuffer;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // First byte picks the capacity so eviction on load is exercised too.
    let Some((&cap, rest)) = data.split_first() else { return };
    if let Ok(buf) = ReplayBuffer::decode(rest, cap as usize + 1) {
        assert!(buf.len() <= buf.capacity());
        let again = ReplayBuffer::decode(&buf.encode(), buf.capacity()).expect("re-decode");
        assert_eq!(again.len(), buf.len());
    }
});
