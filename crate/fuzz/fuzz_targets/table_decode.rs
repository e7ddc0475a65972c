//! Fuzz the binary divisor-table decoder: arbitrary bytes must either
//! decode into a table that re-encodes to the same bytes, or return a
//! clean error — never panic, never over-allocate from a lying header.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = d3ap::divisor::decode_table(data) {
        // round trip: accepted bytes are a canonical encoding
        assert_eq!(d3ap::divisor::encode_table(&table), data);
        // the accessor contract holds on whatever was accepted
        assert_eq!(table.get(1), 1);
    }
});
