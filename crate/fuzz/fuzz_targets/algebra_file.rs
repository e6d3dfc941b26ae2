#![no_main]

use libfuzzer_sys::fuzz_target;
use lispray::lie_algebra::file;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(alg) = file::parse(text) else { return };
    let _ = alg.validate();
    let back = file::parse(&file::write(&alg)).expect("written file parses");
    assert_eq!(back.dim(), alg.dim());
    assert_eq!(
        back.constants().iter().map(|c| c.to_bits()).collect::<Vec<_>>(),
        alg.constants().iter().map(|c| c.to_bits()).collect::<Vec<_>>()
    );
});
