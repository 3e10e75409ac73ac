#![no_main]

use libfuzzer_sys::fuzz_target;
use outlab::output::{read_csv_rows, write_csv_rows};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_csv_rows(data) {
        let mut bytes = Vec::new();
        write_csv_rows(&rows, &mut bytes).expect("writing parsed rows");
        let again = read_csv_rows(bytes.as_slice()).expect("re-reading written rows");
        assert_eq!(rows.len(), again.len());
    }
});
