#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowlab::io::{orbit_from_json, orbit_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(po) = orbit_from_json(text) {
        let json = orbit_to_json(&po);
        let again = orbit_from_json(&json).expect("serialized orbit parses");
        assert_eq!(orbit_to_json(&again), json);
    }
});
