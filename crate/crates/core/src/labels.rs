//! Closed label sets: the four basic emotions, the three social domains and
//! their groups.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Basic emotion. The derived `Ord` is the fixed total order
/// `anger < fear < joy < sadness`, which is also the argmax tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Fear,
    Joy,
    Sadness,
}

impl Emotion {
    pub const ALL: [Emotion; 4] = [Emotion::Anger, Emotion::Fear, Emotion::Joy, Emotion::Sadness];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
        }
    }

    /// Capitalized form used in table headers.
    pub fn title(self) -> &'static str {
        match self {
            Emotion::Anger => "Anger",
            Emotion::Fear => "Fear",
            Emotion::Joy => "Joy",
            Emotion::Sadness => "Sadness",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} label `{value}`")]
pub struct UnknownLabel {
    pub kind: &'static str,
    pub value: String,
}

impl UnknownLabel {
    fn new(kind: &'static str, value: &str) -> Self {
        UnknownLabel { kind, value: value.to_string() }
    }
}

impl FromStr for Emotion {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anger" => Ok(Emotion::Anger),
            "fear" => Ok(Emotion::Fear),
            "joy" => Ok(Emotion::Joy),
            "sadness" => Ok(Emotion::Sadness),
            _ => Err(UnknownLabel::new("emotion", s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Gender,
    Race,
    Religion,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Gender, Domain::Race, Domain::Religion];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Gender => "gender",
            Domain::Race => "race",
            Domain::Religion => "religion",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Domain::Gender => "Gender",
            Domain::Race => "Race",
            Domain::Religion => "Religion",
        }
    }

    pub fn groups(self) -> &'static [Group] {
        match self {
            Domain::Gender => &[Group::M, Group::F, Group::Nb],
            Domain::Race => &[Group::EA, Group::AA],
            Domain::Religion => &[Group::Ch, Group::Mu, Group::Jw],
        }
    }

    /// Group pairs evaluated for this domain, in reporting order, oriented
    /// as `(group_a, group_b)`.
    pub fn canonical_pairings(self) -> &'static [(Group, Group)] {
        match self {
            Domain::Gender => &[(Group::M, Group::F), (Group::M, Group::Nb), (Group::F, Group::Nb)],
            Domain::Race => &[(Group::EA, Group::AA)],
            Domain::Religion => &[(Group::Ch, Group::Mu), (Group::Ch, Group::Jw), (Group::Mu, Group::Jw)],
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gender" => Ok(Domain::Gender),
            "race" => Ok(Domain::Race),
            "religion" => Ok(Domain::Religion),
            _ => Err(UnknownLabel::new("domain", s)),
        }
    }
}

/// Social group. Each group belongs to exactly one [`Domain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    M,
    F,
    Nb,
    EA,
    AA,
    Ch,
    Mu,
    Jw,
}

impl Group {
    pub const ALL: [Group; 8] =
        [Group::M, Group::F, Group::Nb, Group::EA, Group::AA, Group::Ch, Group::Mu, Group::Jw];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn domain(self) -> Domain {
        match self {
            Group::M | Group::F | Group::Nb => Domain::Gender,
            Group::EA | Group::AA => Domain::Race,
            Group::Ch | Group::Mu | Group::Jw => Domain::Religion,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Group::M => "M",
            Group::F => "F",
            Group::Nb => "Nb",
            Group::EA => "EA",
            Group::AA => "AA",
            Group::Ch => "Ch",
            Group::Mu => "Mu",
            Group::Jw => "Jw",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Group {
    type Err = UnknownLabel;

    /// Accepts the short codes case-insensitively plus common spelled-out
    /// names ("male", "european american", "jewish", ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == '_' || c == '-' { ' ' } else { c })
            .collect();
        let group = match key.as_str() {
            "m" | "male" | "man" | "men" => Group::M,
            "f" | "female" | "woman" | "women" => Group::F,
            "nb" | "non binary" | "nonbinary" => Group::Nb,
            "ea" | "european american" | "european" | "white" => Group::EA,
            "aa" | "african american" | "african" | "black" => Group::AA,
            "ch" | "christian" => Group::Ch,
            "mu" | "muslim" => Group::Mu,
            "jw" | "jewish" | "jew" => Group::Jw,
            _ => return Err(UnknownLabel::new("group", s)),
        };
        Ok(group)
    }
}
