#![no_main]

use irs_secrecy::scenario::parse_theta_text;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = parse_theta_text(text) {
            assert!(!v.is_empty() && v.iter().all(|t| t.is_finite()));
        }
    }
});
