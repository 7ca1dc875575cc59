#![no_main]

use gfield_core::svg::{parse_plot_csv, plot_table};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_plot_csv(text) {
        if table.rows.len() * table.columns.len() <= 1 << 16 {
            if let Ok(svg) = plot_table("fuzz", &table) {
                assert!(svg.ends_with("</svg>\n"));
            }
        }
    }
});
