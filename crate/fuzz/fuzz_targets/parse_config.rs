#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = bigcn_cli::RunConfig::from_kv(text) {
            // The canonical rendering of an accepted config re-parses to the
            // same config.
            let rendered = config.render();
            assert_eq!(bigcn_cli::RunConfig::from_kv(&rendered).unwrap(), config);
        }
    }
});
