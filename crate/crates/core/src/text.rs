use unicode_normalization::UnicodeNormalization;

/// NFC composition without trimming; offsets are taken over this form.
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// NFC plus trimmed surrounding whitespace. Used wherever two texts are
/// compared for identity (golden-reference dedup, annotator accuracy).
pub fn normalize(text: &str) -> String {
    text.nfc().collect::<String>().trim().to_string()
}
