#![no_main]

use gauge_nlse::snapshot::{decode_all, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(snaps) = decode_all(text) else { return };
    // anything accepted must survive a re-encode
    for s in &snaps {
        let again = decode_all(&encode(s)).expect("re-encoded snapshot decodes");
        assert_eq!(again.len(), 1);
        assert_eq!(again[0].leg, s.leg);
        assert_eq!(again[0].t.to_bits(), s.t.to_bits());
    }
});
