//! Report decoding: any report that parses re-emits to JSON that parses back
//! to the same report.
#![no_main]

use libfuzzer_sys::fuzz_target;
use mkc_lab::config::Format;
use mkc_lab::report::{emit_report, RunReport};

fuzz_target!(|data: &[u8]| {
    let Ok(report) = serde_json::from_slice::<RunReport>(data) else { return };
    let json = emit_report(&report, Format::Json);
    let _ = emit_report(&report, Format::Csv);
    let _ = emit_report(&report, Format::Text);
    // NaN has no JSON form, so only finite reports must round-trip.
    if let Ok(back) = serde_json::from_str::<RunReport>(&json) {
        assert_eq!(emit_report(&back, Format::Json), json);
    }
});
