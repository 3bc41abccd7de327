use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::element::{CircuitElement, ElementKind};
use super::CircuitError;
use crate::fock::ModeUnitary;

/// Schema identifier written into every netlist file.
pub const NETLIST_SCHEMA: &str = "photonchip.netlist/v1";

/// Ordered list of circuit elements in propagation order.
///
/// Files are JSON objects:
///
/// ```json
/// {
///   "schema": "photonchip.netlist/v1",
///   "name": "mzi",
///   "modes": 2,
///   "elements": [
///     { "kind": "directional-coupler", "modes": [0, 1], "reflectivity": 0.5, "layer": 0 },
///     { "kind": "phase-shifter", "id": "theta", "mode": 0, "phase": 0.0, "layer": 1 },
///     { "kind": "directional-coupler", "modes": [0, 1], "reflectivity": 0.5, "layer": 2 }
///   ],
///   "roles": { "mzi": [0, 1, 2] }
/// }
/// ```
///
/// `roles` names sub-circuits by element index. Crossers use `"kind": "crosser"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Netlist {
    pub schema: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub modes: usize,
    pub elements: Vec<CircuitElement>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub roles: BTreeMap<String, Vec<usize>>,
}

/// Phase-shifter values keyed by shifter id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseSettings(pub BTreeMap<String, f64>);

impl PhaseSettings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: impl Into<String>, phase: f64) -> Self {
        self.0.insert(id.into(), phase);
        self
    }

    pub fn set(&mut self, id: impl Into<String>, phase: f64) {
        self.0.insert(id.into(), phase);
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.0.get(id).copied()
    }
}

impl Netlist {
    pub fn new(modes: usize, elements: Vec<CircuitElement>) -> Result<Self, CircuitError> {
        let n = Self {
            schema: NETLIST_SCHEMA.to_string(),
            name: String::new(),
            modes,
            elements,
            roles: BTreeMap::new(),
        };
        n.validate()?;
        Ok(n)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_role(mut self, role: impl Into<String>, indices: Vec<usize>) -> Result<Self, CircuitError> {
        self.roles.insert(role.into(), indices);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.schema != NETLIST_SCHEMA {
            return Err(CircuitError::Schema {
                found: self.schema.clone(),
                expected: NETLIST_SCHEMA,
            });
        }
        if self.modes == 0 {
            return Err(CircuitError::Invalid("netlist needs at least one mode".into()));
        }
        let mut ids = HashSet::new();
        for (i, e) in self.elements.iter().enumerate() {
            e.validate(self.modes)
                .map_err(|err| CircuitError::Element { index: i, source: Box::new(err) })?;
            if let ElementKind::PhaseShifter { id, .. } = &e.kind {
                if !ids.insert(id.as_str()) {
                    return Err(CircuitError::DuplicatePhaseShifter(id.clone()));
                }
            }
        }
        for (role, indices) in &self.roles {
            if let Some(&bad) = indices.iter().find(|&&i| i >= self.elements.len()) {
                return Err(CircuitError::Invalid(format!(
                    "role '{role}' refers to element {bad}, netlist has {}",
                    self.elements.len()
                )));
            }
        }
        Ok(())
    }

    pub fn phase_shifter_ids(&self) -> Vec<&str> {
        self.elements
            .iter()
            .filter_map(|e| match &e.kind {
                ElementKind::PhaseShifter { id, .. } => Some(id.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Copy restricted to the elements of `role`, in their original order.
    pub fn role(&self, role: &str) -> Result<Netlist, CircuitError> {
        let indices = self
            .roles
            .get(role)
            .ok_or_else(|| CircuitError::UnknownRole(role.to_string()))?;
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        Ok(Netlist {
            schema: self.schema.clone(),
            name: format!("{}#{role}", self.name),
            modes: self.modes,
            elements: sorted.iter().map(|&i| self.elements[i].clone()).collect(),
            roles: BTreeMap::new(),
        })
    }

    /// Block-diagonal combination; `other`'s modes are shifted past this netlist's.
    pub fn direct_sum(&self, other: &Netlist) -> Result<Netlist, CircuitError> {
        self.attach(other, self.modes)
    }

    /// Appends `other` after this netlist with its mode 0 placed on `first_mode`.
    /// The mode count grows as needed, so an output mode of this circuit can feed
    /// an input of `other`.
    pub fn attach(&self, other: &Netlist, first_mode: usize) -> Result<Netlist, CircuitError> {
        let shift = first_mode;
        let offset = self.elements.len();
        let mut elements = self.elements.clone();
        for e in &other.elements {
            let kind = match &e.kind {
                ElementKind::DirectionalCoupler { modes: [a, b], reflectivity } => {
                    ElementKind::DirectionalCoupler {
                        modes: [a + shift, b + shift],
                        reflectivity: *reflectivity,
                    }
                }
                ElementKind::PhaseShifter { id, mode, phase } => ElementKind::PhaseShifter {
                    id: id.clone(),
                    mode: mode + shift,
                    phase: *phase,
                },
                ElementKind::Crosser { modes: [a, b] } => ElementKind::Crosser {
                    modes: [a + shift, b + shift],
                },
            };
            elements.push(CircuitElement { kind, layer: e.layer });
        }
        let mut roles = self.roles.clone();
        for (role, indices) in &other.roles {
            roles
                .entry(role.clone())
                .or_default()
                .extend(indices.iter().map(|i| i + offset));
        }
        let n = Netlist {
            schema: NETLIST_SCHEMA.to_string(),
            name: format!("{}+{}", self.name, other.name),
            modes: self.modes.max(first_mode + other.modes),
            elements,
            roles,
        };
        n.validate()?;
        Ok(n)
    }

    /// Product of all element transforms in propagation order. Phase shifters take
    /// their value from `settings` when present, else their stored default.
    pub fn compose(&self, settings: &PhaseSettings) -> Result<ModeUnitary, CircuitError> {
        self.validate()?;
        let known: HashSet<&str> = self.phase_shifter_ids().into_iter().collect();
        if let Some(unknown) = settings.0.keys().find(|k| !known.contains(k.as_str())) {
            return Err(CircuitError::UnknownPhaseShifter(unknown.clone()));
        }
        let mut u = DMatrix::identity(self.modes, self.modes);
        for e in &self.elements {
            let phase = match &e.kind {
                ElementKind::PhaseShifter { id, phase, .. } => settings.get(id).unwrap_or(*phase),
                _ => 0.0,
            };
            e.apply_left(&mut u, phase);
        }
        Ok(ModeUnitary::from_matrix_unchecked(u))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("netlist serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let n: Netlist = serde_json::from_str(text)?;
        n.validate()?;
        Ok(n)
    }

    pub fn load(path: &Path) -> Result<Self, CircuitError> {
        let text = std::fs::read_to_string(path).map_err(|e| CircuitError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), CircuitError> {
        std::fs::write(path, self.to_json()).map_err(|e| CircuitError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}
