use std::path::Path;

use photonchip::circuit::{bundled, Netlist, PhaseSettings};

fn data(name: &str) -> Netlist {
    Netlist::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)).unwrap()
}

#[test]
fn bundled_files_load_and_round_trip() {
    for (name, bundled) in [
        ("generation_core.json", bundled::generation_core()),
        ("pnr_cascade.json", bundled::pnr_cascade()),
        ("chip8.json", bundled::chip8()),
    ] {
        let loaded = data(name);
        assert_eq!(loaded, bundled, "{name}");
        assert_eq!(Netlist::from_json(&loaded.to_json()).unwrap(), loaded, "{name}");
    }
}

#[test]
fn chip8_starts_with_core_and_ends_with_cascade_on_herald() {
    let chip = bundled::chip8();
    let core = bundled::generation_core();
    let cascade = Netlist::new(4, vec![]).unwrap().attach(&bundled::pnr_cascade(), 4).unwrap();
    assert_eq!(chip.modes, 8);
    assert_eq!(chip.elements[..core.elements.len()], core.elements[..]);
    assert_eq!(chip.elements[chip.elements.len() - cascade.elements.len()..], cascade.elements[..]);
    assert_eq!(chip.compose(&PhaseSettings::new()).unwrap().modes(), 8);
}
