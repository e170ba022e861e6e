//! Alphabets, words and quasi-lexicographic bases.
//!
//! Words are sequences of symbol indices into an [`Alphabet`]; symbols
//! themselves are short tokens (`a`, `b`, `12`, ...) so numeric alphabets
//! read naturally in files. A [`Basis`] is the complete set `Σ^{≤l}` in
//! quasi-lexicographic order (length first, then lexicographic in the
//! alphabet order), with ranks computed arithmetically.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A word over an alphabet, as symbol indices.
pub type Word = Vec<usize>;

/// Default cap on the number of strings a [`Basis`] may enumerate.
pub const DEFAULT_BASIS_CAP: usize = 50_000_000;

#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidArgument("alphabet must not be empty".into()));
        }
        let mut lookup = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == '#') {
                return Err(Error::InvalidArgument(format!(
                    "symbol {s:?} must be non-empty, without whitespace or '#'"
                )));
            }
            if lookup.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Alphabet { symbols, lookup })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.lookup.get(symbol).copied().ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    /// Encodes a sequence of symbol tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Word> {
        tokens.iter().map(|t| self.index_of(t.as_ref())).collect()
    }

    /// Parses a whitespace-separated word. The empty string is ε.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        text.split_whitespace().map(|t| self.index_of(t)).collect()
    }

    /// Renders a word as space-separated symbols (ε renders as "").
    pub fn render_word(&self, word: &[usize]) -> String {
        word.iter().map(|&x| self.symbols[x].as_str()).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.symbols).finish()
    }
}

/// All words of length at most `max_len`, in quasi-lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    alphabet: Alphabet,
    max_len: usize,
    // offsets[n] = rank of the first word of length n; offsets[max_len + 1] = len
    offsets: Vec<usize>,
    // powers[n] = |Σ|^n
    powers: Vec<usize>,
}

impl Basis {
    pub fn new(alphabet: &Alphabet, max_len: usize) -> Result<Self> {
        Self::with_cap(alphabet, max_len, DEFAULT_BASIS_CAP)
    }

    pub fn with_cap(alphabet: &Alphabet, max_len: usize, cap: usize) -> Result<Self> {
        let k = alphabet.len() as u128;
        let mut total: u128 = 0;
        let mut power: u128 = 1;
        for _ in 0..=max_len {
            total = total.saturating_add(power);
            if total > cap as u128 {
                return Err(Error::TooLarge { requested: total, cap });
            }
            power = power.saturating_mul(k);
        }
        let mut offsets = Vec::with_capacity(max_len + 2);
        let mut powers = Vec::with_capacity(max_len + 1);
        let mut acc = 0usize;
        let mut p = 1usize;
        for _ in 0..=max_len {
            offsets.push(acc);
            powers.push(p);
            acc += p;
            p = p.saturating_mul(alphabet.len());
        }
        offsets.push(acc);
        Ok(Basis { alphabet: alphabet.clone(), max_len, offsets, powers })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.offsets[self.max_len + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Rank of `word`, or `None` if it is longer than `max_len` or uses
    /// symbols outside the alphabet.
    pub fn index_of(&self, word: &[usize]) -> Option<usize> {
        if word.len() > self.max_len {
            return None;
        }
        let k = self.alphabet.len();
        let mut rank = 0usize;
        for &x in word {
            if x >= k {
                return None;
            }
            rank = rank * k + x;
        }
        Some(self.offsets[word.len()] + rank)
    }

    pub fn contains(&self, word: &[usize]) -> bool {
        self.index_of(word).is_some()
    }

    /// Length of the word at `index`.
    pub fn word_len(&self, index: usize) -> usize {
        assert!(index < self.len(), "basis index {index} out of range");
        // offsets is sorted; find n with offsets[n] <= index < offsets[n+1]
        self.offsets.partition_point(|&o| o <= index) - 1
    }

    pub fn word(&self, index: usize) -> Word {
        let n = self.word_len(index);
        let k = self.alphabet.len();
        let mut rank = index - self.offsets[n];
        let mut w = vec![0; n];
        for slot in w.iter_mut().rev() {
            *slot = rank % k;
            rank /= k;
        }
        w
    }

    /// For a non-empty word `u·x` at `index`, returns `(rank of u, x)`.
    pub fn split_last(&self, index: usize) -> Option<(usize, usize)> {
        let n = self.word_len(index);
        if n == 0 {
            return None;
        }
        let k = self.alphabet.len();
        let r = index - self.offsets[n];
        Some((self.offsets[n - 1] + r / k, r % k))
    }

    /// For a non-empty word `x·v` at `index`, returns `(x, rank of v)`.
    pub fn split_first(&self, index: usize) -> Option<(usize, usize)> {
        let n = self.word_len(index);
        if n == 0 {
            return None;
        }
        let r = index - self.offsets[n];
        let p = self.powers[n - 1];
        Some((r / p, self.offsets[n - 1] + r % p))
    }

    pub fn iter(&self) -> impl Iterator<Item = Word> + '_ {
        (0..self.len()).map(move |i| self.word(i))
    }

    pub fn strings(&self) -> Vec<Word> {
        self.iter().collect()
    }
}

/// Number of decompositions `w = x·u·y`, i.e. occurrences of `u` in `w`
/// counted with overlap. The empty word occurs `|w| + 1` times.
pub fn factor_occurrences<T: PartialEq>(w: &[T], u: &[T]) -> usize {
    if u.is_empty() {
        return w.len() + 1;
    }
    if u.len() > w.len() {
        return 0;
    }
    w.windows(u.len()).filter(|win| *win == u).count()
}

pub fn is_prefix<T: PartialEq>(u: &[T], w: &[T]) -> bool {
    w.starts_with(u)
}
