#![no_main]

use harmosc::io::{parse_signal_csv, write_signal_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(signal) = parse_signal_csv(text) {
        // anything accepted must survive a write/read round trip
        let again = parse_signal_csv(&write_signal_csv(&signal)).expect("round trip");
        assert_eq!(again.samples, signal.samples);
    }
});
