#![no_main]

use gauge_nlse::{parse, Scope};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if src.len() > 4096 {
        return;
    }
    let mut scope = Scope::new();
    scope.insert("g".into(), 0.5);
    scope.insert("alpha".into(), -1.25);
    if let Ok(e) = parse(src, &scope) {
        let shown = e.to_string();
        let again = parse(&shown, &Scope::new()).expect("display output reparses");
        assert_eq!(again.to_string(), shown);
    }
});
