#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowlab::io::{subshift_from_json, subshift_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sig) = subshift_from_json(text) {
        // One serialization round must stabilize to a fixed point.
        let json = subshift_to_json(&sig);
        let again = subshift_from_json(&json).expect("serialized subshift parses");
        assert_eq!(subshift_to_json(&again), json);
    }
});
