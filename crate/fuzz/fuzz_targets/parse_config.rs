#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Err(errors) = tvvi_cli::parse_config(text) {
            assert!(!errors.0.is_empty());
        }
    }
});
