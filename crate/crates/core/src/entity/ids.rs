use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::EntityError;

fn parse_numeric(raw: &str, prefix: char) -> Option<u64> {
    let digits = raw.strip_prefix(prefix)?;
    let first = digits.chars().next()?;
    if !('1'..='9').contains(&first) || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

macro_rules! numeric_id {
    ($name:ident, $prefix:literal, $what:literal) => {
        #[doc = concat!("A `", $prefix, "<digits>` ", $what, " identifier.")]
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(u64);

        impl $name {
            pub fn new(number: u64) -> Result<Self, EntityError> {
                if number == 0 {
                    return Err(EntityError::InvalidIdentifier(format!("{}0", $prefix)));
                }
                Ok(Self(number))
            }

            pub fn number(self) -> u64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, self.0)
            }
        }

        impl FromStr for $name {
            type Err = EntityError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_numeric(s, $prefix)
                    .map(Self)
                    .ok_or_else(|| EntityError::InvalidIdentifier(s.to_owned()))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(deserializer)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

numeric_id!(ItemId, 'Q', "item");
numeric_id!(PropertyId, 'P', "property");

/// Either kind of identifier that can carry an English label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Identifier {
    Item(ItemId),
    Property(PropertyId),
}

impl From<ItemId> for Identifier {
    fn from(id: ItemId) -> Self {
        Identifier::Item(id)
    }
}

impl From<PropertyId> for Identifier {
    fn from(id: PropertyId) -> Self {
        Identifier::Property(id)
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identifier::Item(id) => id.fmt(f),
            Identifier::Property(id) => id.fmt(f),
        }
    }
}

impl FromStr for Identifier {
    type Err = EntityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.starts_with('Q') {
            s.parse().map(Identifier::Item)
        } else if s.starts_with('P') {
            s.parse().map(Identifier::Property)
        } else {
            Err(EntityError::InvalidIdentifier(s.to_owned()))
        }
    }
}

impl Serialize for Identifier {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Identifier {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Lowercase ASCII language code with optional hyphenated subtags
/// (`en`, `de-ch`, `zh-hans`, `be-tarask`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Result<Self, EntityError> {
        let code = code.into();
        let valid = !code.is_empty()
            && code.split('-').all(|part| {
                !part.is_empty()
                    && part
                        .bytes()
                        .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
            });
        if valid {
            Ok(Self(code))
        } else {
            Err(EntityError::InvalidLanguage(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_english(&self) -> bool {
        self.0 == "en" || self.0.starts_with("en-")
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LanguageCode {
    type Err = EntityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl Serialize for LanguageCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for LanguageCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Self::new(raw).map_err(serde::de::Error::custom)
    }
}
