use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::inventory::{Phone, PhoneInventory};
use crate::error::{Error, Result};

/// Word to pronunciations map. Words are stored lowercased; pronunciations
/// keep the order in which they were listed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Vec<Phone>>>,
}

/// How a single pronunciation is picked for words with several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PronunciationPolicy {
    #[default]
    First,
    /// Uniform choice driven by a seeded generator.
    Sample { seed: u64 },
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one pronunciation, appending to any already listed for `word`.
    pub fn insert(
        &mut self,
        word: &str,
        pronunciation: Vec<Phone>,
        inventory: &PhoneInventory,
    ) -> Result<()> {
        if pronunciation.is_empty() {
            return Err(Error::Contract(format!("empty pronunciation for {word}")));
        }
        for p in &pronunciation {
            inventory.check(p)?;
        }
        self.entries
            .entry(word.to_lowercase())
            .or_default()
            .push(pronunciation);
        Ok(())
    }

    pub fn parse(text: &str, source: &str, inventory: &PhoneInventory) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(";;;") {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("nonempty line");
            let pron: Vec<Phone> = fields.map(Phone::from).collect();
            if pron.is_empty() {
                return Err(Error::parse(
                    source,
                    lineno + 1,
                    format!("word {word} has no phones"),
                ));
            }
            lex.insert(word, pron, inventory)?;
        }
        if lex.entries.is_empty() {
            return Err(Error::parse(source, 0, "lexicon is empty"));
        }
        Ok(lex)
    }

    pub fn pronunciations(&self, word: &str) -> Option<&[Vec<Phone>]> {
        self.entries
            .get(word)
            .or_else(|| self.entries.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.pronunciations(word).is_some()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Vec<Phone>])> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One line per pronunciation, in the format [`load_lexicon`] reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, prons) in &self.entries {
            for pron in prons {
                out.push_str(word);
                for p in pron {
                    out.push(' ');
                    out.push_str(p.as_str());
                }
                out.push('\n');
            }
        }
        out
    }
}

pub fn load_lexicon(path: impl AsRef<Path>, inventory: &PhoneInventory) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::parse(&text, &path.display().to_string(), inventory)
}

/// Concatenates one pronunciation per word.
pub fn words_to_phones<S: AsRef<str>>(
    words: &[S],
    lexicon: &Lexicon,
    policy: PronunciationPolicy,
) -> Result<Vec<Phone>> {
    let mut rng = match policy {
        PronunciationPolicy::First => None,
        PronunciationPolicy::Sample { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut out = Vec::new();
    for word in words {
        let word = word.as_ref();
        let prons = lexicon
            .pronunciations(word)
            .ok_or_else(|| Error::MissingWord(word.to_string()))?;
        let pick = match rng.as_mut() {
            Some(rng) if prons.len() > 1 => rng.gen_range(0..prons.len()),
            _ => 0,
        };
        out.extend(prons[pick].iter().cloned());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::inventory::phones;
    use proptest::prelude::*;

    fn inv() -> PhoneInventory {
        PhoneInventory::arpabet()
    }

    #[test]
    fn single_entry() {
        let lex = Lexicon::parse("CAT k ae t\n", "t", &inv()).unwrap();
        assert_eq!(lex.pronunciations("CAT").unwrap(), &[phones("k ae t")]);
    }

    #[test]
    fn repeated_words_accumulate_in_order() {
        let lex = Lexicon::parse("THE dh ah\nTHE dh iy\n", "t", &inv()).unwrap();
        assert_eq!(
            lex.pronunciations("the").unwrap(),
            &[phones("dh ah"), phones("dh iy")]
        );
    }

    #[test]
    fn unknown_phone_is_inventory_error() {
        let err = Lexicon::parse("CAT k q9 t\n", "t", &inv()).unwrap_err();
        assert!(matches!(err, Error::Inventory(ref p) if p == "q9"));
    }

    #[test]
    fn word_without_phones_is_parse_error() {
        let err = Lexicon::parse("CAT k ae t\nDOG\n", "lex.txt", &inv()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn phones_for_words() {
        let lex = Lexicon::parse("CAT k ae t\nTHE dh ah\nTHE dh iy\n", "t", &inv()).unwrap();
        let first = PronunciationPolicy::First;
        assert_eq!(words_to_phones(&["CAT"], &lex, first).unwrap(), phones("k ae t"));
        assert_eq!(
            words_to_phones(&["THE", "CAT"], &lex, first).unwrap(),
            phones("dh ah k ae t")
        );
        let err = words_to_phones(&["DOG"], &lex, first).unwrap_err();
        assert!(matches!(err, Error::MissingWord(ref w) if w == "DOG"));
    }

    #[test]
    fn sampled_policy_is_reproducible_and_varies() {
        let lex = Lexicon::parse("THE dh ah\nTHE dh iy\n", "t", &inv()).unwrap();
        let words = vec!["the"; 24];
        let a = words_to_phones(&words, &lex, PronunciationPolicy::Sample { seed: 7 }).unwrap();
        let b = words_to_phones(&words, &lex, PronunciationPolicy::Sample { seed: 7 }).unwrap();
        assert_eq!(a, b);
        assert!(a.contains(&Phone::from("ah")) && a.contains(&Phone::from("iy")));
    }

    fn arb_lexicon() -> impl Strategy<Value = Lexicon> {
        let inv = inv();
        let symbols: Vec<Phone> = inv.phones().to_vec();
        prop::collection::vec(
            (
                "[a-z]{1,6}",
                prop::collection::vec(prop::sample::select(symbols), 1..6),
            ),
            1..20,
        )
        .prop_map(move |entries| {
            let mut lex = Lexicon::new();
            for (w, p) in entries {
                lex.insert(&w, p, &inv).unwrap();
            }
            lex
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(lex in arb_lexicon()) {
            let again = Lexicon::parse(&lex.to_text(), "t", &inv()).unwrap();
            prop_assert_eq!(lex, again);
        }

        #[test]
        fn phone_count_is_sum_of_chosen_lengths(lex in arb_lexicon(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..8), seed in any::<u64>()) {
            let words: Vec<&str> = lex.words().collect();
            let sentence: Vec<&str> = picks.iter().map(|i| *i.get(&words)).collect();
            let first = words_to_phones(&sentence, &lex, PronunciationPolicy::First).unwrap();
            let expected: usize = sentence.iter().map(|w| lex.pronunciations(w).unwrap()[0].len()).sum();
            prop_assert_eq!(first.len(), expected);
            let sampled = words_to_phones(&sentence, &lex, PronunciationPolicy::Sample { seed }).unwrap();
            let again = words_to_phones(&sentence, &lex, PronunciationPolicy::Sample { seed }).unwrap();
            prop_assert_eq!(sampled, again);
        }
    }
}
