use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Category label attached to every series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    Services,
    Healthcare,
    Utilities,
    Financial,
    #[serde(rename = "Consumer Goods")]
    ConsumerGoods,
    #[serde(rename = "Basic Materials")]
    BasicMaterials,
    Conglomerates,
    #[serde(rename = "Industrial Goods")]
    IndustrialGoods,
    Technology,
}

impl Sector {
    pub const ALL: [Sector; 9] = [
        Sector::Services,
        Sector::Healthcare,
        Sector::Utilities,
        Sector::Financial,
        Sector::ConsumerGoods,
        Sector::BasicMaterials,
        Sector::Conglomerates,
        Sector::IndustrialGoods,
        Sector::Technology,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sector::Services => "Services",
            Sector::Healthcare => "Healthcare",
            Sector::Utilities => "Utilities",
            Sector::Financial => "Financial",
            Sector::ConsumerGoods => "Consumer Goods",
            Sector::BasicMaterials => "Basic Materials",
            Sector::Conglomerates => "Conglomerates",
            Sector::IndustrialGoods => "Industrial Goods",
            Sector::Technology => "Technology",
        }
    }

    /// Round-robin assignment used by the synthetic generator.
    pub fn nth(i: usize) -> Sector {
        Sector::ALL[i % Sector::ALL.len()]
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown sector {0:?}")]
pub struct UnknownSector(pub String);

impl FromStr for Sector {
    type Err = UnknownSector;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Sector::ALL
            .iter()
            .copied()
            .find(|sector| sector.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownSector(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_sectors_round_trip_through_names() {
        assert_eq!(Sector::ALL.len(), 9);
        for sector in Sector::ALL {
            assert_eq!(sector.name().parse::<Sector>().unwrap(), sector);
            let json = serde_json::to_string(&sector).unwrap();
            assert_eq!(json, format!("\"{}\"", sector.name()));
        }
        assert!("Energy".parse::<Sector>().is_err());
    }
}
