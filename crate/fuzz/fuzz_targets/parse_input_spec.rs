#![no_main]

use harmosc::io::parse_input_spec;
use harmosc::sim::make_input;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(input) = parse_input_spec(text) {
        let _ = make_input(&input, 10.0, 0.1);
    }
});
