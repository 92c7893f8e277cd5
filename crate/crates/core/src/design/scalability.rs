//! Star rating of neuromorphic photonic architectures from five yes/no aspects.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScalabilityFlags {
    pub footprint: bool,
    pub packaging: bool,
    pub wdm: bool,
    pub fab_maturity: bool,
    /// Layers cascade without optical amplification.
    pub cascadable: bool,
}

impl ScalabilityFlags {
    pub fn count(&self) -> u8 {
        [
            self.footprint,
            self.packaging,
            self.wdm,
            self.fab_maturity,
            self.cascadable,
        ]
        .iter()
        .filter(|&&f| f)
        .count() as u8
    }
}

/// Number of satisfied aspects, at least one star.
pub fn scalability_score(flags: &ScalabilityFlags) -> u8 {
    flags.count().max(1)
}

pub fn stars(n: u8) -> String {
    "★".repeat(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert_eq!(scalability_score(&ScalabilityFlags::default()), 1);
        let all = ScalabilityFlags {
            footprint: true,
            packaging: true,
            wdm: true,
            fab_maturity: true,
            cascadable: true,
        };
        assert_eq!(scalability_score(&all), 5);
        assert_eq!(stars(3), "★★★");
    }
}
