// Binary params decoder: arbitrary bytes must never panic or over-allocate.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = bigcn::model::read_params(data) {
        let mut buf = Vec::new();
        if bigcn::model::write_params(&params, &mut buf).is_ok() {
            // Decode-encode round trip is stable.
            assert_eq!(bigcn::model::read_params(&buf).unwrap(), params);
        }
    }
});
