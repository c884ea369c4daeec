use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The binary label space every dataset is mapped onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryLabel {
    Hate,
    Neutral,
}

impl BinaryLabel {
    pub fn is_hate(self) -> bool {
        self == BinaryLabel::Hate
    }

    pub fn flipped(self) -> Self {
        match self {
            BinaryLabel::Hate => BinaryLabel::Neutral,
            BinaryLabel::Neutral => BinaryLabel::Hate,
        }
    }

    /// 1 for Hate, 0 for Neutral.
    pub fn as_target(self) -> u8 {
        u8::from(self.is_hate())
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinaryLabel::Hate => "Hate",
            BinaryLabel::Neutral => "Neutral",
        })
    }
}

/// ISO-639-3 language code of a record. Codes outside the four studied
/// languages collapse to `Other`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Eng,
    Deu,
    Spa,
    Vie,
    #[serde(other)]
    #[default]
    Other,
}

impl Language {
    pub const ALL: [Language; 5] = [
        Language::Eng,
        Language::Deu,
        Language::Spa,
        Language::Vie,
        Language::Other,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Language::Eng => "eng",
            Language::Deu => "deu",
            Language::Spa => "spa",
            Language::Vie => "vie",
            Language::Other => "other",
        }
    }

    /// Stable small index, used to derive per-language RNG streams.
    pub fn index(self) -> u64 {
        match self {
            Language::Eng => 0,
            Language::Deu => 1,
            Language::Spa => 2,
            Language::Vie => 3,
            Language::Other => 4,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "eng" | "en" => Language::Eng,
            "deu" | "de" | "ger" => Language::Deu,
            "spa" | "es" => Language::Spa,
            "vie" | "vi" => Language::Vie,
            _ => Language::Other,
        })
    }
}
