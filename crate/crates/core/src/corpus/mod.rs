//! Ingestion of phone inventories, lexicons and parallel transcripts.

mod inventory;
mod lexicon;
mod parallel;

pub use inventory::{
    phones, phones_to_string, Phone, PhoneInventory, EOS_SYMBOL, EPSILON_SYMBOL,
};
pub use lexicon::{load_lexicon, words_to_phones, Lexicon, PronunciationPolicy};
pub use parallel::{load_parallel_corpus, ParallelCorpus, ParallelItem, TextNormalizer};
