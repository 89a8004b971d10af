#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowlab::lattice::SiteSet;

fuzz_target!(|data: &[u8]| {
    let Some((&first, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    // The free-rank parser: never panics, and accepted sets round-trip.
    if let Ok(s) = SiteSet::from_text(text) {
        let reparsed = SiteSet::from_text(&s.to_text()).expect("serialized site set parses");
        assert_eq!(reparsed, s);
    }
    // The rank-pinned parser, with the rank drawn from the first byte.
    let r = usize::from(first) % 5;
    if let Ok(s) = SiteSet::from_text_with_dims(text, r) {
        assert_eq!(s.dims(), r);
        let reparsed =
            SiteSet::from_text_with_dims(&s.to_text(), r).expect("serialized site set parses");
        assert_eq!(reparsed, s);
    }
});
