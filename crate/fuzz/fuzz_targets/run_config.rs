#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use lispray_cli::{parse_config, CliError};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match parse_config(text, Path::new("/nonexistent")) {
        Ok(cfg) => assert!(cfg.integrator.abs_tol > 0.0 && cfg.integrator.rel_tol > 0.0),
        Err(CliError::Parse { line, column, .. }) => assert!(line >= 1 && column >= 1),
        Err(e) => assert!(e.exit_code() != 0),
    }
});
