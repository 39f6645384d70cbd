//! Token normalization applied when reconciling spec terms with a vocabulary.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

const TATWEEL: char = '\u{0640}';
const SUPERSCRIPT_ALEF: char = '\u{0670}';
const TEH_MARBUTA: char = '\u{0629}';
const HEH: char = '\u{0647}';
const ALEF: char = '\u{0627}';

/// Harakat, tanween, shadda and sukun (U+064B..=U+0652), plus the
/// superscript alef and tatweel.
fn is_arabic_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{0652}') || c == SUPERSCRIPT_ALEF || c == TATWEEL
}

/// Alef with madda, hamza above, hamza below and wasla.
fn is_alef_variant(c: char) -> bool {
    matches!(c, '\u{0622}' | '\u{0623}' | '\u{0625}' | '\u{0671}')
}

/// Which rewrites to apply to a token before vocabulary lookup.
///
/// The default keeps deliberately encoded letter forms intact (alef and teh
/// marbuta unification off) and only removes presentation noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationPolicy {
    pub strip_diacritics: bool,
    pub normalize_alef: bool,
    pub normalize_teh_marbuta: bool,
    pub unicode_nfc: bool,
    pub lowercase: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self {
            strip_diacritics: true,
            normalize_alef: false,
            normalize_teh_marbuta: false,
            unicode_nfc: true,
            lowercase: false,
        }
    }
}

impl NormalizationPolicy {
    /// A policy that leaves every string untouched.
    pub fn identity() -> Self {
        Self {
            strip_diacritics: false,
            normalize_alef: false,
            normalize_teh_marbuta: false,
            unicode_nfc: false,
            lowercase: false,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Normalize `input`. Idempotent for every policy.
    pub fn normalize(&self, input: &str) -> String {
        if self.is_identity() {
            return input.to_owned();
        }
        // NFC first so that alef + combining hamza composes into a letter
        // before the mark could be treated as removable.
        let mut s: String = if self.unicode_nfc {
            input.nfc().collect()
        } else {
            input.to_owned()
        };
        if self.lowercase {
            s = s.to_lowercase();
        }
        if self.strip_diacritics || self.normalize_alef || self.normalize_teh_marbuta {
            s = s
                .chars()
                .filter(|&c| !(self.strip_diacritics && is_arabic_diacritic(c)))
                .map(|c| {
                    if self.normalize_alef && is_alef_variant(c) {
                        ALEF
                    } else if self.normalize_teh_marbuta && c == TEH_MARBUTA {
                        HEH
                    } else {
                        c
                    }
                })
                .collect();
        }
        // Removing marks or lowercasing can expose new compositions.
        if self.unicode_nfc {
            s = s.nfc().collect();
        }
        s
    }
}
