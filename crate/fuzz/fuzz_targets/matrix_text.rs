#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowlab::fplinalg::Matrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Parsing must never panic, and anything accepted must round-trip.
    if let Ok(m) = Matrix::from_text(text) {
        let reparsed = Matrix::from_text(&m.to_text()).expect("serialized matrix parses");
        assert_eq!(reparsed, m);
    }
});
