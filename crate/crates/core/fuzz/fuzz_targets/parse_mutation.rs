#![no_main]

use libfuzzer_sys::fuzz_target;
use symradio::harness::Mutation;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if text.parse::<Mutation>().is_ok() {
        assert!(Mutation::NAMES.contains(&text));
    }
});
