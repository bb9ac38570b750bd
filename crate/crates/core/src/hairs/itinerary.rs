use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::HairError;

/// A word over `{0, 1}`: a finite prefix followed by an optional periodic
/// cycle.
///
/// Textual forms: `0110` (finite), `0110*` (the pure cycle `(0110)^∞`) and
/// `01(10)` (prefix `01`, then `10` repeated).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Itinerary {
    prefix: Vec<u8>,
    cycle: Vec<u8>,
}

fn check(w: &[u8]) -> Result<(), HairError> {
    match w.iter().find(|&&s| s > 1) {
        Some(s) => Err(HairError::InvalidItinerary(format!("symbol {s} is not 0 or 1"))),
        None => Ok(()),
    }
}

impl Itinerary {
    pub fn new(prefix: Vec<u8>, cycle: Vec<u8>) -> Result<Self, HairError> {
        check(&prefix)?;
        check(&cycle)?;
        Ok(Itinerary { prefix, cycle })
    }

    pub fn finite(word: Vec<u8>) -> Result<Self, HairError> {
        Self::new(word, Vec::new())
    }

    pub fn periodic(cycle: Vec<u8>) -> Result<Self, HairError> {
        if cycle.is_empty() {
            return Err(HairError::InvalidItinerary("empty cycle".into()));
        }
        Self::new(Vec::new(), cycle)
    }

    /// `0^∞`.
    pub fn zeros() -> Self {
        Itinerary { prefix: Vec::new(), cycle: vec![0] }
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[u8] {
        &self.cycle
    }

    pub fn is_infinite(&self) -> bool {
        !self.cycle.is_empty()
    }

    /// Number of defined symbols, `None` when infinite.
    pub fn len(&self) -> Option<usize> {
        if self.is_infinite() {
            None
        } else {
            Some(self.prefix.len())
        }
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.cycle.is_empty()
    }

    /// `a_n`.
    pub fn symbol(&self, n: usize) -> Option<u8> {
        if n < self.prefix.len() {
            Some(self.prefix[n])
        } else if self.cycle.is_empty() {
            None
        } else {
            Some(self.cycle[(n - self.prefix.len()) % self.cycle.len()])
        }
    }

    /// `a_0 .. a_{n-1}`, failing if the word is shorter.
    pub fn take(&self, n: usize) -> Result<Vec<u8>, HairError> {
        (0..n)
            .map(|i| self.symbol(i))
            .collect::<Option<Vec<_>>>()
            .ok_or(HairError::ItineraryTooShort { needed: n, available: self.prefix.len() })
    }

    /// First `n` symbols as a string of digits (shorter if finite).
    pub fn prefix_string(&self, n: usize) -> String {
        (0..n).map_while(|i| self.symbol(i)).map(|s| char::from(b'0' + s)).collect()
    }

    /// The left shift `σ`.
    pub fn shift(&self) -> Self {
        if !self.prefix.is_empty() {
            return Itinerary { prefix: self.prefix[1..].to_vec(), cycle: self.cycle.clone() };
        }
        let mut cycle = self.cycle.clone();
        if !cycle.is_empty() {
            cycle.rotate_left(1);
        }
        Itinerary { prefix: Vec::new(), cycle }
    }

    /// `σ^k`.
    pub fn shift_by(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |a, _| a.shift())
    }
}

fn digits(s: &str) -> Result<Vec<u8>, HairError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(HairError::InvalidItinerary(format!("unexpected character {c:?}"))),
        })
        .collect()
}

impl FromStr for Itinerary {
    type Err = HairError;

    fn from_str(s: &str) -> Result<Self, HairError> {
        let s = s.trim();
        if let Some(w) = s.strip_suffix('*') {
            return Itinerary::periodic(digits(w)?);
        }
        if let Some(open) = s.find('(') {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| HairError::InvalidItinerary(format!("unbalanced parentheses in {s:?}")))?;
            let cycle = digits(inner)?;
            if cycle.is_empty() {
                return Err(HairError::InvalidItinerary("empty cycle".into()));
            }
            return Itinerary::new(digits(&s[..open])?, cycle);
        }
        Itinerary::finite(digits(s)?)
    }
}

impl fmt::Display for Itinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |w: &[u8]| w.iter().map(|&s| char::from(b'0' + s)).collect::<String>();
        match (self.prefix.is_empty(), self.cycle.is_empty()) {
            (true, false) => write!(f, "{}*", show(&self.cycle)),
            (_, true) => write!(f, "{}", show(&self.prefix)),
            (false, false) => write!(f, "{}({})", show(&self.prefix), show(&self.cycle)),
        }
    }
}

impl Serialize for Itinerary {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Itinerary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
