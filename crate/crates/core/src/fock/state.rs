use std::fmt;

use serde::{Deserialize, Serialize};

use super::FockError;

/// Occupation numbers over a fixed set of optical modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FockState {
    occupations: Vec<usize>,
}

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Result<Self, FockError> {
        if occupations.is_empty() {
            return Err(FockError::NoModes);
        }
        Ok(Self { occupations })
    }

    pub(crate) fn from_occupations_unchecked(occupations: Vec<usize>) -> Self {
        Self { occupations }
    }

    pub fn vacuum(modes: usize) -> Self {
        assert!(modes > 0);
        Self {
            occupations: vec![0; modes],
        }
    }

    pub fn single_photon(modes: usize, mode: usize) -> Self {
        let mut s = Self::vacuum(modes);
        s.occupations[mode] = 1;
        s
    }

    pub fn modes(&self) -> usize {
        self.occupations.len()
    }

    pub fn photons(&self) -> usize {
        self.occupations.iter().sum()
    }

    pub fn occupation(&self, mode: usize) -> usize {
        self.occupations[mode]
    }

    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    /// Each mode index repeated once per photon it holds, in ascending order.
    pub fn mode_list(&self) -> Vec<usize> {
        self.occupations
            .iter()
            .enumerate()
            .flat_map(|(i, &k)| std::iter::repeat_n(i, k))
            .collect()
    }

    /// All `C(n+m-1, n)` patterns of `photons` photons in `modes` modes, ordered
    /// with the first mode most significant and descending occupation.
    pub fn all_with_photons(photons: usize, modes: usize) -> Vec<FockState> {
        assert!(modes > 0);
        let mut out = Vec::new();
        let mut current = vec![0usize; modes];
        fill(&mut out, &mut current, 0, photons);
        out
    }

    /// Parses compact notation such as `|11101>` or `11101` (single-digit occupations).
    pub fn parse(text: &str) -> Result<Self, FockError> {
        let trimmed = text
            .trim()
            .trim_start_matches('|')
            .trim_end_matches(['>', '⟩']);
        let occupations: Option<Vec<usize>> = trimmed
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect();
        match occupations {
            Some(occ) => Self::new(occ),
            None => Err(FockError::NoModes),
        }
    }
}

fn fill(out: &mut Vec<FockState>, current: &mut Vec<usize>, mode: usize, left: usize) {
    let last = current.len() - 1;
    if mode == last {
        current[mode] = left;
        out.push(FockState {
            occupations: current.clone(),
        });
        current[mode] = 0;
        return;
    }
    for k in (0..=left).rev() {
        current[mode] = k;
        fill(out, current, mode + 1, left - k);
    }
    current[mode] = 0;
}

impl TryFrom<Vec<usize>> for FockState {
    type Error = FockError;

    fn try_from(value: Vec<usize>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<FockState> for Vec<usize> {
    fn from(value: FockState) -> Self {
        value.occupations
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.occupations.iter().all(|&k| k < 10) {
            write!(f, "|")?;
            for k in &self.occupations {
                write!(f, "{k}")?;
            }
            write!(f, "⟩")
        } else {
            let parts: Vec<String> = self.occupations.iter().map(|k| k.to_string()).collect();
            write!(f, "|{}⟩", parts.join(","))
        }
    }
}

/// Probabilities of every output pattern of an n-photon sector.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    modes: usize,
    photons: usize,
    entries: Vec<(FockState, f64)>,
}

impl OutputDistribution {
    pub(crate) fn from_entries(modes: usize, photons: usize, entries: Vec<(FockState, f64)>) -> Self {
        Self {
            modes,
            photons,
            entries,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability(&self, pattern: &FockState) -> f64 {
        self.entries
            .iter()
            .find(|(s, _)| s == pattern)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockState, f64)> {
        self.entries.iter().map(|(s, p)| (s, *p))
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}
