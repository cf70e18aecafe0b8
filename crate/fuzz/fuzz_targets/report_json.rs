#![no_main]
use libfuzzer_sys::fuzz_target;

use gsr_core::cli::{decode_document, encode_document};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(doc) = decode_document(&text) {
        let again = encode_document(&doc);
        assert_eq!(decode_document(&again).ok(), Some(doc));
    }
});
