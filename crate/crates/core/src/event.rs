//! Events, alphabets and the on-disk stream formats.
//!
//! Two formats are understood:
//!
//! * CSV (canonical): header `timestamp,type`, one event per line, LF endings.
//!   The header is optional on input.
//! * JSON-lines: one `{"timestamp": <int>, "type": "<name>"}` object per line.
//!
//! The format is sniffed from the first non-blank line: a leading `{` selects
//! JSON-lines.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "timestamp,type";

/// Name of an event type, e.g. `a` or `card_declined`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventType(String);

impl EventType {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(EventType(name))
        } else {
            Err(Error::InvalidName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Ordered set of event types. The position of a type is its symbol id, which
/// fixes the column order of every table built downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<EventType>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    /// Builds an alphabet keeping the given order.
    pub fn new(symbols: Vec<EventType>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.0.clone(), i).is_some() {
                return Err(Error::DuplicateName(s.to_string()));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// Builds an alphabet from names, keeping their order.
    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols = names
            .into_iter()
            .map(EventType::new)
            .collect::<Result<Vec<_>>>()?;
        Alphabet::new(symbols)
    }

    /// Parses a comma separated list such as `a,b,c`.
    pub fn parse_list(list: &str) -> Result<Self> {
        Alphabet::from_names(list.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[EventType] {
        &self.symbols
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(EventType::as_str)
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        self.symbols[id].as_str()
    }
}

/// One stream element. `symbol` is the id of the event type in the stream's
/// alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub symbol: usize,
    pub timestamp: u64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    alphabet: Alphabet,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream from `(timestamp, symbol id)` pairs, assigning indices.
    pub fn new(alphabet: Alphabet, items: impl IntoIterator<Item = (u64, usize)>) -> Result<Self> {
        let mut events = Vec::new();
        let mut previous = 0;
        for (index, (timestamp, symbol)) in items.into_iter().enumerate() {
            if symbol >= alphabet.len() {
                return Err(Error::InvalidParameter(format!(
                    "symbol id {symbol} outside alphabet of size {}",
                    alphabet.len()
                )));
            }
            if timestamp < previous {
                return Err(Error::DecreasingTimestamp {
                    line: index + 1,
                    timestamp,
                    previous,
                });
            }
            previous = timestamp;
            events.push(Event {
                symbol,
                timestamp,
                index,
            });
        }
        Ok(EventStream { alphabet, events })
    }

    /// Builds a stream from whitespace separated names with timestamps 0, 1, 2, ...
    pub fn from_symbols(alphabet: Alphabet, text: &str) -> Result<Self> {
        let ids = text
            .split_whitespace()
            .enumerate()
            .map(|(i, name)| {
                alphabet.id(name).ok_or_else(|| Error::UnknownType {
                    name: name.to_owned(),
                    line: i + 1,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EventStream::new(alphabet, ids.into_iter().enumerate().map(|(t, s)| (t as u64, s)))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = usize> + '_ {
        self.events.iter().map(|e| e.symbol)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonEvent {
    timestamp: u64,
    #[serde(rename = "type")]
    kind: String,
}

/// Reads a stream in CSV or JSON-lines format. With `alphabet = None` the
/// alphabet is inferred as the sorted set of distinct types in the file.
pub fn read_stream(path: impl AsRef<Path>, alphabet: Option<&Alphabet>) -> Result<EventStream> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_stream(&text, alphabet)
}

pub fn parse_stream(text: &str, alphabet: Option<&Alphabet>) -> Result<EventStream> {
    let json = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .is_some_and(|l| l.starts_with('{'));

    let mut raw: Vec<(usize, u64, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (timestamp, name) = if json {
            let ev: JsonEvent = serde_json::from_str(line).map_err(|e| Error::Malformed {
                line: lineno,
                message: e.to_string(),
            })?;
            if !is_identifier(&ev.kind) {
                return Err(Error::Malformed {
                    line: lineno,
                    message: format!("invalid event type {:?}", ev.kind),
                });
            }
            (ev.timestamp, ev.kind)
        } else {
            if raw.is_empty() && line.trim() == CSV_HEADER {
                continue;
            }
            parse_csv_line(line, lineno)?
        };
        raw.push((lineno, timestamp, name));
    }

    let inferred;
    let alphabet = match alphabet {
        Some(a) => a,
        None => {
            let names: BTreeSet<&str> = raw.iter().map(|(_, _, n)| n.as_str()).collect();
            if names.is_empty() {
                return Err(Error::EmptyAlphabet);
            }
            inferred = Alphabet::from_names(names)?;
            &inferred
        }
    };

    let mut events = Vec::with_capacity(raw.len());
    let mut previous = 0;
    for (index, (line, timestamp, name)) in raw.into_iter().enumerate() {
        let symbol = alphabet
            .id(&name)
            .ok_or(Error::UnknownType { name, line })?;
        if timestamp < previous {
            return Err(Error::DecreasingTimestamp {
                line,
                timestamp,
                previous,
            });
        }
        previous = timestamp;
        events.push(Event {
            symbol,
            timestamp,
            index,
        });
    }
    Ok(EventStream {
        alphabet: alphabet.clone(),
        events,
    })
}

fn parse_csv_line(line: &str, lineno: usize) -> Result<(u64, String)> {
    let malformed = |message: String| Error::Malformed {
        line: lineno,
        message,
    };
    let mut fields = line.split(',');
    let (ts, name) = match (fields.next(), fields.next(), fields.next()) {
        (Some(ts), Some(name), None) => (ts.trim(), name.trim()),
        _ => return Err(malformed("expected `timestamp,type`".into())),
    };
    let timestamp = ts
        .parse::<u64>()
        .map_err(|_| malformed(format!("timestamp {ts:?} is not a nonnegative integer")))?;
    if !is_identifier(name) {
        return Err(malformed(format!("invalid event type {name:?}")));
    }
    Ok((timestamp, name.to_owned()))
}

/// Writes the canonical CSV form.
pub fn write_stream(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_csv(stream, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_csv(stream: &EventStream, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for e in &stream.events {
        writeln!(out, "{},{}", e.timestamp, stream.alphabet.name(e.symbol))?;
    }
    Ok(())
}
