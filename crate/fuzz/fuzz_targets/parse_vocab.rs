#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(vocab) = bigcn::features::read_vocabulary(text) {
            // Accepted vocabularies must re-serialize cleanly.
            let mut buf = Vec::new();
            let _ = bigcn::features::write_vocabulary(&vocab, &mut buf);
        }
    }
});
