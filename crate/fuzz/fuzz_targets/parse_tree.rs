// Tree file parser must never panic on arbitrary input; it may return Err.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((posts, edges)) = bigcn::dataio::parse_tree(text, "fuzz") {
            // Anything the parser accepts must survive full validation or be
            // rejected there, never crash.
            let event = bigcn::graph::PropagationEvent {
                id: "fuzz".into(),
                posts,
                edges,
                label: bigcn::graph::ClassLabel::TrueRumor,
            };
            if event.validate().is_ok() {
                let _ = bigcn::graph::build_adjacency(&event);
                let _ = bigcn::dataio::slice_by_deadline(&event, 1.0);
            }
        }
    }
});
