#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowlab::io::{instance_from_json, instance_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inst) = instance_from_json(text) {
        if let Ok(json) = instance_to_json(&inst) {
            let again = instance_from_json(&json).expect("serialized instance parses");
            assert_eq!(instance_to_json(&again).unwrap(), json);
        }
    }
});
