#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowlab::io::{exhaustion_from_json, exhaustion_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = exhaustion_from_json(text) {
        if let Ok(json) = exhaustion_to_json(&e) {
            let again = exhaustion_from_json(&json).expect("serialized exhaustion parses");
            assert_eq!(exhaustion_to_json(&again).unwrap(), json);
        }
    }
});
