#![no_main]

use harmosc::design::design;
use harmosc::io::parse_design_spec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_design_spec(text) {
        if spec.order <= 16 {
            let _ = design(&spec);
        }
    }
});
