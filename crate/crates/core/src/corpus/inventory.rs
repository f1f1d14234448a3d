use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved epsilon symbol. Never a member of an inventory.
pub const EPSILON_SYMBOL: &str = "<eps>";
/// Reserved end-of-sequence symbol emitted by sequence models.
pub const EOS_SYMBOL: &str = "<eos>";

const ARPABET39: &str = include_str!("../../data/arpabet39.txt");

/// A phone symbol such as `s` or `ae`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Phone(String);

impl Phone {
    pub fn new(symbol: impl Into<String>) -> Self {
        Phone(symbol.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Phone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Phone {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Phone {
    fn from(s: &str) -> Self {
        Phone(s.to_string())
    }
}

/// Parses a whitespace-separated phone string (`"k ae t"`).
pub fn phones(s: &str) -> Vec<Phone> {
    s.split_whitespace().map(Phone::from).collect()
}

/// Renders a phone sequence as a space-separated string.
pub fn phones_to_string(seq: &[Phone]) -> String {
    let parts: Vec<&str> = seq.iter().map(Phone::as_str).collect();
    parts.join(" ")
}

/// The set of phones a model is allowed to use, each with a binary
/// articulatory feature vector.
///
/// Feature vectors all have the same length and are pairwise distinct, so a
/// Hamming distance over them is zero only between a phone and itself.
#[derive(Debug, Clone)]
pub struct PhoneInventory {
    phones: Vec<Phone>,
    features: Vec<Vec<bool>>,
    index: HashMap<Phone, usize>,
}

impl PhoneInventory {
    /// The bundled 39-phone ARPAbet-style inventory.
    pub fn arpabet() -> Self {
        Self::parse(ARPABET39, "<bundled arpabet39>").expect("bundled inventory is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses `phone<ws>bits` lines; `#` starts a comment line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(symbol), Some(bits), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(source, lineno + 1, "expected `phone bits`"));
            };
            let features = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::parse(source, lineno + 1, format!("bad feature bit {c:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push((symbol.to_string(), features));
        }
        Self::from_features(entries).map_err(|e| match e {
            Error::Contract(m) => Error::parse(source, 0, m),
            other => other,
        })
    }

    pub fn from_features<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<bool>)>,
        S: Into<String>,
    {
        let mut phones = Vec::new();
        let mut features: Vec<Vec<bool>> = Vec::new();
        let mut index = HashMap::new();
        let mut seen_vectors = HashSet::new();
        for (symbol, vector) in entries {
            let symbol: String = symbol.into();
            if symbol.is_empty() || symbol == EPSILON_SYMBOL || symbol == EOS_SYMBOL {
                return Err(Error::Contract(format!("invalid phone symbol {symbol:?}")));
            }
            if let Some(first) = features.first() {
                if first.len() != vector.len() {
                    return Err(Error::Contract(format!(
                        "phone {symbol} has {} features, expected {}",
                        vector.len(),
                        first.len()
                    )));
                }
            }
            if !seen_vectors.insert(vector.clone()) {
                return Err(Error::Contract(format!(
                    "phone {symbol} duplicates another phone's feature vector"
                )));
            }
            let phone = Phone(symbol);
            if index.insert(phone.clone(), phones.len()).is_some() {
                return Err(Error::Contract(format!("duplicate phone {phone}")));
            }
            phones.push(phone);
            features.push(vector);
        }
        if phones.is_empty() {
            return Err(Error::Contract("empty phone inventory".into()));
        }
        Ok(PhoneInventory {
            phones,
            features,
            index,
        })
    }

    pub fn phones(&self) -> &[Phone] {
        &self.phones
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    pub fn feature_len(&self) -> usize {
        self.features[0].len()
    }

    pub fn contains(&self, phone: &Phone) -> bool {
        self.index.contains_key(phone)
    }

    pub fn get(&self, symbol: &str) -> Result<&Phone> {
        self.index
            .get_key_value(&Phone::from(symbol))
            .map(|(p, _)| p)
            .ok_or_else(|| Error::Inventory(symbol.to_string()))
    }

    pub fn features(&self, phone: &Phone) -> Result<&[bool]> {
        self.index
            .get(phone)
            .map(|&i| self.features[i].as_slice())
            .ok_or_else(|| Error::Inventory(phone.to_string()))
    }

    pub fn check(&self, phone: &Phone) -> Result<()> {
        if self.contains(phone) {
            Ok(())
        } else {
            Err(Error::Inventory(phone.to_string()))
        }
    }

    /// Writes the inventory in the same format [`PhoneInventory::parse`] reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (phone, bits) in self.phones.iter().zip(&self.features) {
            let bits: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            out.push_str(&format!("{phone}\t{bits}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_inventory_has_39_phones() {
        let inv = PhoneInventory::arpabet();
        assert_eq!(inv.len(), 39);
        assert!(inv.phones().iter().all(|p| p.as_str() != EOS_SYMBOL));
        assert!(inv.get("zh").is_ok());
        assert!(matches!(inv.get("q9"), Err(Error::Inventory(_))));
    }

    #[test]
    fn reserved_symbols_rejected() {
        let err = PhoneInventory::from_features(vec![(EOS_SYMBOL, vec![true])]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn ragged_features_rejected() {
        let err = PhoneInventory::parse("a 01\nb 011\n", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn text_round_trip() {
        let inv = PhoneInventory::arpabet();
        let again = PhoneInventory::parse(&inv.to_text(), "t").unwrap();
        assert_eq!(inv.phones(), again.phones());
    }
}
