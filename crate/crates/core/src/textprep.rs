//! Abstract text → token stream.
//!
//! Stage order is fixed: tokenize, strip punctuation/digits, drop stopwords,
//! lemmatize, drop short tokens, POS filter, n-grams.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const BUILTIN_LEXICON: &str = include_str!("../data/lemmas.tsv");

pub type TokenStream = Vec<String>;

/// Coarse part of speech carried by the lemma lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Other,
}

impl Pos {
    pub fn from_code(code: &str) -> Option<Pos> {
        Some(match code {
            "n" => Pos::Noun,
            "v" => Pos::Verb,
            "a" => Pos::Adjective,
            "r" => Pos::Adverb,
            "x" => Pos::Other,
            _ => return None,
        })
    }

    pub fn content_classes() -> BTreeSet<Pos> {
        [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb].into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub lowercase: bool,
    pub strip_punct: bool,
    pub strip_digits: bool,
    pub remove_stopwords: bool,
    pub lemmatize: bool,
    pub pos_filter: Option<BTreeSet<Pos>>,
    pub ngram_range: (usize, usize),
    /// Tokens with fewer characters are dropped after lemmatization.
    pub min_token_len: usize,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            lowercase: true,
            strip_punct: true,
            strip_digits: true,
            remove_stopwords: true,
            lemmatize: true,
            pos_filter: None,
            ngram_range: (1, 1),
            min_token_len: 2,
        }
    }
}

impl PrepConfig {
    /// Every optional stage off; output equals bare tokenization.
    pub fn bare() -> Self {
        PrepConfig {
            lowercase: true,
            strip_punct: false,
            strip_digits: false,
            remove_stopwords: false,
            lemmatize: false,
            pos_filter: None,
            ngram_range: (1, 1),
            min_token_len: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.ngram_range;
        if !(1 <= lo && lo <= hi && hi <= 3) {
            return Err(Error::InvalidConfig(format!(
                "ngram_range must satisfy 1 <= min <= max <= 3, got ({lo}, {hi})"
            )));
        }
        if matches!(&self.pos_filter, Some(keep) if keep.is_empty()) {
            return Err(Error::InvalidConfig("pos_filter must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stoplist { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn builtin() -> Arc<Stoplist> {
        static LIST: OnceLock<Arc<Stoplist>> = OnceLock::new();
        LIST.get_or_init(|| Arc::new(Stoplist::parse(BUILTIN_STOPWORDS))).clone()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub lemma: String,
    pub pos: Pos,
}

/// Word form → (lemma, coarse POS). Ambiguous forms resolve by
/// noun > verb > adjective > adverb > other.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, LexEntry>,
}

impl Lexicon {
    /// Parses `form<TAB>lemma<TAB>pos` rows with pos in {n,v,a,r,x}.
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut entries: HashMap<String, LexEntry> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |message: &str| Error::Parse {
                context: context.to_string(),
                line: i + 1,
                message: message.to_string(),
            };
            if cols.len() != 3 {
                return Err(bad("expected form<TAB>lemma<TAB>pos"));
            }
            let pos = Pos::from_code(cols[2].trim()).ok_or_else(|| bad("pos must be one of n,v,a,r,x"))?;
            let form = cols[0].trim().to_lowercase();
            let lemma = cols[1].trim().to_lowercase();
            if form.is_empty() || lemma.is_empty() {
                return Err(bad("empty form or lemma"));
            }
            match entries.get(&form) {
                Some(existing) if existing.pos <= pos => {}
                _ => {
                    entries.insert(form, LexEntry { lemma, pos });
                }
            }
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn builtin() -> Arc<Lexicon> {
        static LEX: OnceLock<Arc<Lexicon>> = OnceLock::new();
        LEX.get_or_init(|| Arc::new(Lexicon::parse(BUILTIN_LEXICON, "builtin lexicon").expect("builtin lexicon parses")))
            .clone()
    }

    pub fn get(&self, form: &str) -> Option<&LexEntry> {
        self.entries.get(form)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Splits text into maximal runs of letters and apostrophes (plus digits
/// when `strip_digits` is off). With `strip_punct`, apostrophes are removed
/// from the resulting tokens.
pub fn tokenize(text: &str, config: &PrepConfig) -> TokenStream {
    let keep = |c: char| {
        if c.is_numeric() {
            !config.strip_digits
        } else {
            c.is_alphabetic() || c == '\'' || c == '\u{2019}'
        }
    };
    text.split(|c: char| !keep(c))
        .filter_map(|raw| {
            let tok: String = if config.strip_punct {
                raw.chars().filter(|&c| c != '\'' && c != '\u{2019}').collect()
            } else {
                raw.trim_matches(|c| c == '\'' || c == '\u{2019}').replace('\u{2019}', "'")
            };
            if tok.is_empty() {
                None
            } else if config.lowercase {
                Some(tok.to_lowercase())
            } else {
                Some(tok)
            }
        })
        .collect()
}

pub fn remove_stopwords(tokens: TokenStream, stoplist: &Stoplist) -> TokenStream {
    tokens.into_iter().filter(|t| !stoplist.contains(t)).collect()
}

pub fn lemmatize(tokens: TokenStream, lexicon: &Lexicon) -> TokenStream {
    tokens
        .into_iter()
        .map(|t| match lexicon.get(&t) {
            Some(e) => e.lemma.clone(),
            None => t,
        })
        .collect()
}

/// Keeps tokens whose lexicon POS is in `keep`; tokens missing from the
/// lexicon are kept.
pub fn pos_filter(tokens: TokenStream, lexicon: &Lexicon, keep: &BTreeSet<Pos>) -> TokenStream {
    tokens
        .into_iter()
        .filter(|t| lexicon.get(t).is_none_or(|e| keep.contains(&e.pos)))
        .collect()
}

/// All contiguous windows for each n in `range`, joined with `_`, in
/// (n, position) order.
pub fn ngrams(tokens: &[String], range: (usize, usize)) -> TokenStream {
    let (lo, hi) = range;
    let mut out = Vec::new();
    for n in lo.max(1)..=hi {
        if n == 1 {
            out.extend(tokens.iter().cloned());
        } else {
            out.extend(tokens.windows(n).map(|w| w.join("_")));
        }
    }
    out
}

/// Borrowed resources for [`preprocess`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Resources<'a> {
    pub stoplist: Option<&'a Stoplist>,
    pub lexicon: Option<&'a Lexicon>,
}

pub fn preprocess(text: &str, config: &PrepConfig, res: Resources<'_>) -> Result<TokenStream> {
    config.validate()?;
    let stoplist = match (config.remove_stopwords, res.stoplist) {
        (true, None) => return Err(Error::MissingResource("stopword list")),
        (_, s) => s,
    };
    let needs_lexicon = config.lemmatize || config.pos_filter.is_some();
    if needs_lexicon && res.lexicon.is_none() {
        return Err(Error::MissingResource("lemma lexicon"));
    }
    Ok(run_stages(text, config, stoplist, res.lexicon))
}

fn run_stages(text: &str, config: &PrepConfig, stoplist: Option<&Stoplist>, lexicon: Option<&Lexicon>) -> TokenStream {
    let mut tokens = tokenize(text, config);
    if let (true, Some(s)) = (config.remove_stopwords, stoplist) {
        tokens = remove_stopwords(tokens, s);
    }
    if let (true, Some(l)) = (config.lemmatize, lexicon) {
        tokens = lemmatize(tokens, l);
    }
    if config.min_token_len > 1 {
        tokens.retain(|t| t.chars().count() >= config.min_token_len);
    }
    if let (Some(keep), Some(l)) = (&config.pos_filter, lexicon) {
        tokens = pos_filter(tokens, l, keep);
    }
    if config.ngram_range == (1, 1) {
        tokens
    } else {
        ngrams(&tokens, config.ngram_range)
    }
}

/// Validated config plus owned resources; cheap to clone and share.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PrepConfig,
    stoplist: Option<Arc<Stoplist>>,
    lexicon: Option<Arc<Lexicon>>,
}

impl Preprocessor {
    pub fn new(config: PrepConfig, stoplist: Option<Arc<Stoplist>>, lexicon: Option<Arc<Lexicon>>) -> Result<Self> {
        preprocess(
            "",
            &config,
            Resources {
                stoplist: stoplist.as_deref(),
                lexicon: lexicon.as_deref(),
            },
        )?;
        Ok(Preprocessor {
            config,
            stoplist,
            lexicon,
        })
    }

    /// Uses the bundled stopword list and lexicon.
    pub fn with_builtin(config: PrepConfig) -> Result<Self> {
        Self::new(config, Some(Stoplist::builtin()), Some(Lexicon::builtin()))
    }

    pub fn config(&self) -> &PrepConfig {
        &self.config
    }

    pub fn process(&self, text: &str) -> TokenStream {
        run_stages(text, &self.config, self.stoplist.as_deref(), self.lexicon.as_deref())
    }
}
