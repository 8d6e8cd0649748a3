#![no_main]

use libfuzzer_sys::fuzz_target;
use twistbench::lattice::{Boundary, Lattice};
use twistbench::pauli::PauliOp;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(lattice) = Lattice::new(8, 8, Boundary::Open) else { return };
    let Ok(p) = PauliOp::from_text(lattice, text) else { return };
    let again = PauliOp::from_text(lattice, &p.to_text()).expect("round trip");
    assert_eq!(p, again);
});
