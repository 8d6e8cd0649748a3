#![no_main]

use libfuzzer_sys::fuzz_target;
use twistbench::circuit::Circuit;
use twistbench::lattice::{Boundary, Lattice};

// The parser must never panic, and anything it accepts must survive a
// serialize/reparse round trip and validate on some lattice.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(circuit) = Circuit::from_text(text) else { return };
    let again = Circuit::from_text(&circuit.to_text()).expect("round trip");
    assert_eq!(circuit.layers, again.layers);
    if let Ok(lattice) = Lattice::new(64, 64, Boundary::Open) {
        // validation may reject (out-of-range sites, locality) but not panic
        let _ = circuit.validate(&lattice);
    }
});
