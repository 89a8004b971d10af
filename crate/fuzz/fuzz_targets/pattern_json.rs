#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowlab::fplinalg::FieldSpec;
use shadowlab::io::{pattern_from_json, pattern_to_json};
use shadowlab::shiftspace::Alphabet;

fuzz_target!(|data: &[u8]| {
    let Some((prefix, rest)) = data.split_at_checked(2) else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let p = [2u64, 3, 5, 7][usize::from(prefix[0]) % 4];
    let k = usize::from(prefix[1]) % 3 + 1;
    let alphabet = Alphabet::new(FieldSpec::new(p).unwrap(), k).unwrap();
    if let Ok(x) = pattern_from_json(text, alphabet) {
        let json = pattern_to_json(&x);
        let again = pattern_from_json(&json, alphabet).expect("serialized pattern parses");
        assert_eq!(again, x);
    }
});
