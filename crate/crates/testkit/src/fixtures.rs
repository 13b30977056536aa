use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use gecwork::corruptor::ConfusionSets;
use gecwork::tokenize::Lexicon;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Common characters used to build synthetic sentences.
pub const CHARS: &str = "的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动同工也能下过子说产种面而方后多定行学法所民得经十三之进着等部度家电力里如水化高自二理起小物现实加量都两体制机当使点从业本去把性好应开它合还因由其些然前外天政四日那社义事平形相全表间样与关各重新线内数正心反你明看原又么利比或但质气第向道命此变条只没结解问意建月公无系军很情者最立代想已通并提直题党程展五果料象员革位入常文总次品式活设及管特件长求老头基资边流路级少图山统接知较将组见计别她手角期根论运农指几九区强放决西被干做必战先回则任取据处世车";

/// ASCII fragments mixed into sentences so that spacing is exercised.
const LATIN: &[&str] = &["GPU", "AI", "3.5", "ok", "Wi-Fi", "2024"];

pub fn char_vocab() -> Vec<String> {
    CHARS.chars().map(String::from).collect()
}

/// Two-character words formed from adjacent characters of [`CHARS`].
pub fn words() -> Vec<String> {
    let cs: Vec<char> = CHARS.chars().collect();
    cs.chunks(2)
        .filter(|c| c.len() == 2)
        .map(|c| c.iter().collect())
        .collect()
}

pub fn lexicon() -> Lexicon {
    Lexicon::new(words())
}

/// Each of the first 150 characters is confusable with the next two; each
/// word is confusable with the word after it.
pub fn confusion_sets() -> ConfusionSets {
    let cs = char_vocab();
    let mut char_map = HashMap::new();
    for i in 0..150 {
        char_map.insert(cs[i].clone(), vec![cs[i + 1].clone(), cs[i + 2].clone()]);
    }
    let ws = words();
    let mut word_map = HashMap::new();
    for pair in ws.windows(2) {
        word_map.insert(pair[0].clone(), vec![pair[1].clone()]);
    }
    ConfusionSets::new(char_map, word_map, cs).expect("fixture confusion sets are valid")
}

/// A random sentence: mostly CJK characters and lexicon words, now and then
/// a spaced Latin token or a comma, ending in a full stop.
pub fn sentence<R: Rng>(rng: &mut R, min_len: usize, max_len: usize) -> String {
    let cs: Vec<char> = CHARS.chars().collect();
    let ws = words();
    let len = rng.gen_range(min_len..=max_len);
    let mut s = String::new();
    while s.chars().count() < len {
        match rng.gen_range(0..20) {
            0 => {
                s.push(' ');
                s.push_str(LATIN.choose(rng).unwrap());
                s.push(' ');
            }
            1 => s.push('，'),
            2..=9 => s.push_str(ws.choose(rng).unwrap()),
            _ => s.push(cs[rng.gen_range(0..cs.len())]),
        }
    }
    let mut s = s.trim().to_string();
    s.push('。');
    s
}

/// `count` sentences of 8 to 40 characters.
pub fn sentences(seed: u64, count: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sentence(&mut rng, 8, 40)).collect()
}

/// Sentences totalling at least `min_chars` characters.
pub fn corpus(seed: u64, min_chars: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    let mut total = 0;
    while total < min_chars {
        let s = sentence(&mut rng, 8, 40);
        total += s.chars().count();
        lines.push(s);
    }
    lines
}

/// Paths of the fixture resources written out as files.
pub struct ResourceFiles {
    pub char_confusions: PathBuf,
    pub word_confusions: PathBuf,
    pub vocab: PathBuf,
    pub lexicon: PathBuf,
}

fn confusion_tsv(map: &HashMap<String, Vec<String>>) -> String {
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    keys.iter()
        .map(|k| format!("{k}\t{}\n", map[*k].join(" ")))
        .collect()
}

/// Writes [`confusion_sets`], its vocabulary and [`lexicon`] into `dir` in
/// the formats the command line reads.
pub fn write_resources(dir: &Path) -> io::Result<ResourceFiles> {
    let conf = confusion_sets();
    let files = ResourceFiles {
        char_confusions: dir.join("char_confusions.tsv"),
        word_confusions: dir.join("word_confusions.tsv"),
        vocab: dir.join("vocab.txt"),
        lexicon: dir.join("lexicon.txt"),
    };
    fs::write(&files.char_confusions, confusion_tsv(&conf.char_map))?;
    fs::write(&files.word_confusions, confusion_tsv(&conf.word_map))?;
    fs::write(&files.vocab, conf.vocab.join("\n") + "\n")?;
    fs::write(&files.lexicon, words().join("\n") + "\n")?;
    Ok(files)
}
