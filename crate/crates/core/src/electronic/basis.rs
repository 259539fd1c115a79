use serde::{Deserialize, Serialize};

/// Spinless orbital basis per site.
///
/// Orbital order within a site block:
/// - `s`: `[s]`
/// - `sp3s*`: `[s, px, py, pz, s*]`
/// - `sp3d5s*`: `[s, px, py, pz, dxy, dyz, dzx, dx2-y2, dz2, s*]`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisTier {
    #[serde(rename = "s")]
    SOnly,
    #[serde(rename = "sp3s*")]
    Sp3s,
    #[serde(rename = "sp3d5s*")]
    Sp3d5s,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orbital {
    S,
    Px,
    Py,
    Pz,
    Dxy,
    Dyz,
    Dzx,
    Dx2y2,
    Dz2,
    SStar,
}

/// Angular shell an orbital belongs to, with `s*` kept apart from `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shell {
    S = 0,
    P = 1,
    D = 2,
    SStar = 3,
}

pub const SHELLS: [Shell; 4] = [Shell::S, Shell::P, Shell::D, Shell::SStar];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bond {
    Sigma = 0,
    Pi = 1,
    Delta = 2,
}

impl Shell {
    pub fn l(self) -> u8 {
        match self {
            Shell::S | Shell::SStar => 0,
            Shell::P => 1,
            Shell::D => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Shell::S => "s",
            Shell::P => "p",
            Shell::D => "d",
            Shell::SStar => "sstar",
        }
    }
}

impl Bond {
    pub fn as_str(self) -> &'static str {
        match self {
            Bond::Sigma => "sigma",
            Bond::Pi => "pi",
            Bond::Delta => "delta",
        }
    }
}

impl Orbital {
    pub fn shell(self) -> Shell {
        match self {
            Orbital::S => Shell::S,
            Orbital::SStar => Shell::SStar,
            Orbital::Px | Orbital::Py | Orbital::Pz => Shell::P,
            _ => Shell::D,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orbital::S => "s",
            Orbital::Px => "px",
            Orbital::Py => "py",
            Orbital::Pz => "pz",
            Orbital::Dxy => "dxy",
            Orbital::Dyz => "dyz",
            Orbital::Dzx => "dzx",
            Orbital::Dx2y2 => "dx2-y2",
            Orbital::Dz2 => "dz2",
            Orbital::SStar => "s*",
        }
    }
}

const S_ONLY: [Orbital; 1] = [Orbital::S];
const SP3S: [Orbital; 5] = [Orbital::S, Orbital::Px, Orbital::Py, Orbital::Pz, Orbital::SStar];
const SP3D5S: [Orbital; 10] = [
    Orbital::S,
    Orbital::Px,
    Orbital::Py,
    Orbital::Pz,
    Orbital::Dxy,
    Orbital::Dyz,
    Orbital::Dzx,
    Orbital::Dx2y2,
    Orbital::Dz2,
    Orbital::SStar,
];

impl BasisTier {
    pub fn orbitals(self) -> &'static [Orbital] {
        match self {
            BasisTier::SOnly => &S_ONLY,
            BasisTier::Sp3s => &SP3S,
            BasisTier::Sp3d5s => &SP3D5S,
        }
    }

    pub fn norb(self) -> usize {
        self.orbitals().len()
    }

    pub fn shells(self) -> &'static [Shell] {
        match self {
            BasisTier::SOnly => &[Shell::S],
            BasisTier::Sp3s => &[Shell::S, Shell::P, Shell::SStar],
            BasisTier::Sp3d5s => &[Shell::S, Shell::P, Shell::D, Shell::SStar],
        }
    }

    /// Filled bands per two-atom cell, so the conduction edge at Gamma is
    /// eigenvalue number `valence_bands()` counting from zero.
    pub fn valence_bands(self) -> usize {
        match self {
            BasisTier::SOnly => 0,
            _ => 4,
        }
    }

    /// Index of the s orbital in a site block.
    pub fn s_index(self) -> usize {
        0
    }

    /// Index of the s* orbital, if the tier has one.
    pub fn s_star_index(self) -> Option<usize> {
        match self {
            BasisTier::SOnly => None,
            t => Some(t.norb() - 1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BasisTier::SOnly => "s",
            BasisTier::Sp3s => "sp3s*",
            BasisTier::Sp3d5s => "sp3d5s*",
        }
    }
}

impl std::str::FromStr for BasisTier {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "s" | "s-only" => Ok(BasisTier::SOnly),
            "sp3s*" | "sp3s" => Ok(BasisTier::Sp3s),
            "sp3d5s*" | "sp3d5s" => Ok(BasisTier::Sp3d5s),
            other => Err(format!("unknown basis tier {other:?}")),
        }
    }
}

impl std::fmt::Display for BasisTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
