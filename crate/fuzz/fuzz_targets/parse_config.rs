#![no_main]

use std::path::Path;

use irs_secrecy::scenario::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ScenarioConfig::from_json_str(text) else {
        return;
    };
    // building is cubic in the dimensions; keep executions short
    let d = &cfg.dimensions;
    let small = d.m <= 8 && d.l <= 16 && d.n_b <= 8 && d.k_eves <= 3 && d.n_e.iter().all(|&n| n <= 8);
    if small && cfg.validate().is_ok() {
        let _ = cfg.build(Path::new("."));
    }
});
