#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((profile, contract)) = ehcontract::io::parse_contract_csv(text) {
            let _ = ehcontract::verify::verify(&contract, &profile, 1e-9);
        }
    }
});
