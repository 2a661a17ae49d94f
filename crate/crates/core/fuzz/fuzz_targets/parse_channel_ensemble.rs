#![no_main]

use libfuzzer_sys::fuzz_target;
use symradio::channel::ChannelEnsemble;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ens) = ChannelEnsemble::from_json(text) {
        assert!(ens.realizations.iter().all(|ch| ch.antennas() == ens.antennas));
        let again = ChannelEnsemble::from_json(&ens.to_json()).expect("serialized form parses");
        assert_eq!(ens, again);
    }
});
