#![no_main]

use libfuzzer_sys::fuzz_target;
use sampdens::pointsets::{parse_pointset, write_pointset};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(set) = parse_pointset(text) {
        // Accepted sets survive a write and reparse unchanged.
        let again = parse_pointset(&write_pointset(&set)).expect("written set reparses");
        assert_eq!(again.len(), set.len());
    }
});
