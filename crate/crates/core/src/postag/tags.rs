use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The ten part-of-speech classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosType {
    Noun,
    Verb,
    Conj,
    Adj,
    Adv,
    Num,
    Modal,
    Pron,
    Prep,
    Aux,
}

impl PosType {
    pub const ALL: [PosType; 10] = [
        PosType::Noun,
        PosType::Verb,
        PosType::Conj,
        PosType::Adj,
        PosType::Adv,
        PosType::Num,
        PosType::Modal,
        PosType::Pron,
        PosType::Prep,
        PosType::Aux,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosType::Noun => "NOUN",
            PosType::Verb => "VERB",
            PosType::Conj => "CONJ",
            PosType::Adj => "ADJ",
            PosType::Adv => "ADV",
            PosType::Num => "NUM",
            PosType::Modal => "MODAL",
            PosType::Pron => "PRON",
            PosType::Prep => "PREP",
            PosType::Aux => "AUX",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PosType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// BIO tag over [`PosType`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    O,
    B(PosType),
    I(PosType),
}

pub const TAG_COUNT: usize = 1 + 2 * PosType::ALL.len();

impl PosTag {
    /// All tags in declaration order: `O`, then `B-`/`I-` per type.
    pub fn all() -> Vec<PosTag> {
        std::iter::once(PosTag::O)
            .chain(PosType::ALL.iter().flat_map(|&t| [PosTag::B(t), PosTag::I(t)]))
            .collect()
    }

    /// Position in [`PosTag::all`].
    pub fn index(self) -> usize {
        match self {
            PosTag::O => 0,
            PosTag::B(t) => 1 + 2 * t.index(),
            PosTag::I(t) => 2 + 2 * t.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<PosTag> {
        match i {
            0 => Some(PosTag::O),
            i if i < TAG_COUNT => {
                let t = PosType::ALL[(i - 1) / 2];
                Some(if i % 2 == 1 { PosTag::B(t) } else { PosTag::I(t) })
            }
            _ => None,
        }
    }

    pub fn pos_type(self) -> Option<PosType> {
        match self {
            PosTag::O => None,
            PosTag::B(t) | PosTag::I(t) => Some(t),
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosTag::O => f.write_str("O"),
            PosTag::B(t) => write!(f, "B-{t}"),
            PosTag::I(t) => write!(f, "I-{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTag(pub String);

impl fmt::Display for UnknownTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown tag {}", self.0)
    }
}

impl std::error::Error for UnknownTag {}

impl FromStr for PosTag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(PosTag::O);
        }
        let unknown = || UnknownTag(s.to_string());
        let (prefix, name) = s.split_once('-').ok_or_else(unknown)?;
        let t = PosType::ALL
            .iter()
            .copied()
            .find(|t| t.name() == name)
            .ok_or_else(unknown)?;
        match prefix {
            "B" => Ok(PosTag::B(t)),
            "I" => Ok(PosTag::I(t)),
            _ => Err(unknown()),
        }
    }
}

impl Serialize for PosTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PosTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
