#![no_main]

use harmosc::io::parse_coefficients;
use harmosc::Polynomial;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(coeffs) = parse_coefficients(text) {
        assert!(coeffs.iter().all(|c| c.is_finite()));
        if let Ok(poly) = Polynomial::new(coeffs) {
            if poly.degree() <= 16 {
                let _ = poly.roots();
            }
        }
    }
});
