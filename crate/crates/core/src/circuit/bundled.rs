//! Reference netlists shipped with the crate.
//!
//! * `generation_core.json`: five-mode heralded generation circuit, phase
//!   shifters `theta_pi2` (default π/2) and `theta_alpha` (default 0).
//! * `pnr_cascade.json`: four-mode tree of balanced couplers that splits one
//!   herald mode over four click detectors. Input on mode 0.
//! * `chip8.json`: full eight-mode chip, the five-mode circuit with the cascade
//!   attached to its herald output (mode 4 feeds cascade mode 0).

use super::{CircuitElement, Netlist};

const GENERATION_CORE: &str = include_str!("../../data/generation_core.json");
const PNR_CASCADE: &str = include_str!("../../data/pnr_cascade.json");
const CHIP8: &str = include_str!("../../data/chip8.json");

pub fn generation_core() -> Netlist {
    Netlist::from_json(GENERATION_CORE).expect("bundled generation netlist is valid")
}

pub fn pnr_cascade() -> Netlist {
    Netlist::from_json(PNR_CASCADE).expect("bundled cascade netlist is valid")
}

pub fn chip8() -> Netlist {
    Netlist::from_json(CHIP8).expect("bundled chip netlist is valid")
}

/// Cascade with arbitrary reflectivities `[first split, upper branch, lower branch]`.
pub fn pnr_cascade_with(reflectivities: [f64; 3]) -> Result<Netlist, super::CircuitError> {
    Netlist::new(
        4,
        vec![
            CircuitElement::dc(0, 1, reflectivities[0], 0),
            CircuitElement::crosser(1, 2, 1),
            CircuitElement::dc(0, 1, reflectivities[1], 2),
            CircuitElement::dc(2, 3, reflectivities[2], 2),
        ],
    )?
    .with_role("pnr-cascade", vec![0, 1, 2, 3])
    .map(|n| n.named("pnr-cascade"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::chip::{ChipModelParams, ChipPhases, HERALD_MODE};
    use crate::circuit::element::ElementKind;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn generation_core_matches_chip_model() {
        let expected = ChipModelParams::ideal().generation_netlist(FRAC_PI_2, 0.0);
        assert_eq!(generation_core(), expected);
    }

    #[test]
    fn cascade_matches_builder() {
        assert_eq!(pnr_cascade(), pnr_cascade_with([0.5; 3]).unwrap());
    }

    #[test]
    fn chip8_element_counts() {
        let chip = chip8();
        assert_eq!(chip.modes, 8);
        let count = |f: fn(&ElementKind) -> bool| chip.elements.iter().filter(|e| f(&e.kind)).count();
        assert_eq!(count(|k| matches!(k, ElementKind::DirectionalCoupler { .. })), 13);
        assert_eq!(count(|k| matches!(k, ElementKind::Crosser { .. })), 3);
        assert_eq!(count(|k| matches!(k, ElementKind::PhaseShifter { .. })), 6);
        let expected = ChipModelParams::ideal()
            .netlist(&ChipPhases::default().with_generation(FRAC_PI_2, 0.0))
            .attach(&pnr_cascade(), HERALD_MODE)
            .unwrap()
            .named("chip8");
        assert_eq!(chip, expected);
    }

    #[test]
    fn bundled_files_round_trip_exactly() {
        for text in [GENERATION_CORE, PNR_CASCADE, CHIP8] {
            assert_eq!(Netlist::from_json(text).unwrap().to_json(), text);
        }
    }
}
