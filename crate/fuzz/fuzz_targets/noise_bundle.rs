#![no_main]

use gfield_core::noise::io::{format_csv, format_meta, parse_bundle};
use libfuzzer_sys::fuzz_target;

// Input: metadata, a NUL byte, then the increment CSV.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (meta, csv) = text.split_once('\0').unwrap_or((text, ""));
    if let Ok(noise) = parse_bundle(csv, meta) {
        let back = parse_bundle(&format_csv(&noise), &format_meta(&noise)).expect("written bundle parses");
        assert_eq!(format_csv(&back), format_csv(&noise));
    }
});
