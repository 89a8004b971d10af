#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowlab::fplinalg::FieldSpec;
use shadowlab::io::{ca_from_json, ca_to_json};
use shadowlab::shiftspace::Alphabet;

fuzz_target!(|data: &[u8]| {
    let Some((prefix, rest)) = data.split_at_checked(2) else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let p = [2u64, 3, 5, 7][usize::from(prefix[0]) % 4];
    let k = usize::from(prefix[1]) % 3 + 1;
    let alphabet = Alphabet::new(FieldSpec::new(p).unwrap(), k).unwrap();
    if let Ok(t) = ca_from_json(text, alphabet) {
        let json = ca_to_json(&t);
        let again = ca_from_json(&json, alphabet).expect("serialized CA parses");
        assert_eq!(again, t);
    }
});
