//! Drawing i.i.d. strings from a probabilistic automaton.
//!
//! String `i` of a sample with seed `s` is generated by a ChaCha8 stream
//! seeded with `splitmix64(s ^ i)`, so samples are reproducible and can be
//! generated in parallel without changing their content.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lang::Word;
use crate::wfa::PfaForm;

/// Strings longer than this abort generation.
pub const MAX_STRING_LENGTH: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub strings: Vec<Word>,
    pub seed: u64,
    /// Identifier of the generating model.
    pub source: String,
}

impl Sample {
    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

/// SplitMix64 finaliser, used to derive per-string seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Event {
    Stop,
    Emit { symbol: usize, next: usize },
}

struct Table {
    // cumulative probabilities, in (stop, symbol x state) order
    cumulative: Vec<f64>,
    events: Vec<Event>,
}

impl Table {
    fn pick(&self, u: f64) -> &Event {
        let i = self.cumulative.partition_point(|&c| c <= u);
        &self.events[i.min(self.events.len() - 1)]
    }
}

struct Generator {
    start: Vec<f64>,
    states: Vec<Table>,
}

impl Generator {
    fn new(pfa: &PfaForm) -> Self {
        let rep = pfa.rep();
        let d = rep.dim();
        let mut acc = 0.0;
        let start = rep
            .initial()
            .iter()
            .map(|&p| {
                acc += p.max(0.0);
                acc
            })
            .collect();
        let states = (0..d)
            .map(|i| {
                let mut cumulative = Vec::new();
                let mut events = Vec::new();
                let mut acc = 0.0;
                let mut push = |p: f64, e: Event| {
                    if p > 0.0 {
                        acc += p;
                        cumulative.push(acc);
                        events.push(e);
                    }
                };
                push(rep.final_weights()[i], Event::Stop);
                for (symbol, m) in rep.transitions().iter().enumerate() {
                    for next in 0..d {
                        push(m[(i, next)], Event::Emit { symbol, next });
                    }
                }
                Table { cumulative, events }
            })
            .collect();
        Generator { start, states }
    }

    fn generate(&self, rng: &mut impl Rng) -> Result<Word> {
        let u: f64 = rng.random();
        let mut state = self.start.partition_point(|&c| c <= u).min(self.start.len() - 1);
        let mut word = Vec::new();
        loop {
            let table = &self.states[state];
            if table.events.is_empty() {
                return Err(Error::Generation(format!("state {state} has no outgoing mass")));
            }
            match table.pick(rng.random()) {
                Event::Stop => return Ok(word),
                Event::Emit { symbol, next } => {
                    if word.len() >= MAX_STRING_LENGTH {
                        return Err(Error::Generation(format!(
                            "string exceeded {MAX_STRING_LENGTH} symbols"
                        )));
                    }
                    word.push(*symbol);
                    state = *next;
                }
            }
        }
    }
}

/// Draws `n` strings from `pfa`.
pub fn sample(pfa: &PfaForm, n: usize, seed: u64) -> Result<Sample> {
    let generator = Generator::new(pfa);
    let strings = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ i as u64));
            generator.generate(&mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sample { strings, seed, source: "model".into() })
}

/// Relative frequency of each distinct string.
pub fn empirical_distribution(strings: &[Word]) -> Result<BTreeMap<Word, f64>> {
    if strings.is_empty() {
        return Err(Error::InvalidArgument("sample must not be empty".into()));
    }
    let mut counts: BTreeMap<Word, usize> = BTreeMap::new();
    for w in strings {
        *counts.entry(w.clone()).or_insert(0) += 1;
    }
    let n = strings.len() as f64;
    Ok(counts.into_iter().map(|(w, c)| (w, c as f64 / n)).collect())
}
