//! Serial token kinds and their reserved string forms.
//!
//! A serialized stream renders channel-change tokens as `<cc>` (toggle
//! scheme) or `<cc1>`..`<ccM>` (explicit scheme). Every other entry is the
//! lexical token text itself. The reserved forms never collide with lexical
//! tokens because transcript validation rejects them on input.

use alloc::string::{String, ToString};

use core::fmt;

/// Serialization scheme of a token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// One `<cc>` token alternates between two channels.
    Toggle,
    /// `<cc_m>` tokens select one of M channels directly.
    Explicit,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Toggle => "toggle",
            Mode::Explicit => "explicit",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One entry of a serialized token stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SerialToken {
    /// Ordinary recognition token text.
    Lexical(String),
    /// `<cc>`: flip between channels 1 and 2.
    ChannelToggle,
    /// `<cc_m>`: subsequent tokens go to channel `m` (1-based).
    ChannelSelect(u32),
}

impl SerialToken {
    pub fn is_channel(&self) -> bool {
        !matches!(self, SerialToken::Lexical(_))
    }

    pub fn lexical(&self) -> Option<&str> {
        match self {
            SerialToken::Lexical(text) => Some(text),
            _ => None,
        }
    }

    /// Renders the token in its stream string form.
    pub fn render(&self) -> String {
        match self {
            SerialToken::Lexical(text) => text.clone(),
            SerialToken::ChannelToggle => TOGGLE_FORM.to_string(),
            SerialToken::ChannelSelect(m) => {
                let mut s = String::from("<cc");
                push_u32(&mut s, *m);
                s.push('>');
                s
            }
        }
    }

    /// Parses one stream entry. Reserved forms become channel tokens,
    /// anything else is lexical. Returns `Err` with a description for
    /// strings that look like a channel token but are malformed
    /// (`<cc0>`, `<cc01>`); those are reserved and never lexical.
    pub fn parse(s: &str) -> Result<SerialToken, TokenParseError> {
        if s == TOGGLE_FORM {
            return Ok(SerialToken::ChannelToggle);
        }
        match select_index(s) {
            Some(Ok(m)) => Ok(SerialToken::ChannelSelect(m)),
            Some(Err(())) => Err(TokenParseError {
                token: s.to_string(),
            }),
            None => Ok(SerialToken::Lexical(s.to_string())),
        }
    }
}

impl fmt::Display for SerialToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SerialToken::Lexical(text) => f.write_str(text),
            other => f.write_str(&other.render()),
        }
    }
}

/// Malformed channel-change token (reserved shape, invalid index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenParseError {
    pub token: String,
}

impl fmt::Display for TokenParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed channel token {:?}", self.token)
    }
}

impl core::error::Error for TokenParseError {}

const TOGGLE_FORM: &str = "<cc>";

/// True for `<cc>` and for every `<cc…>` digit form, valid or not.
/// Transcript validation uses this to keep lexical tokens out of the
/// channel-token namespace.
pub fn is_reserved_token(s: &str) -> bool {
    s == TOGGLE_FORM || select_index(s).is_some()
}

/// `Some(Ok(m))` for a well-formed `<ccM>` (no leading zeros, m >= 1),
/// `Some(Err(()))` for a degenerate digit form, `None` otherwise.
fn select_index(s: &str) -> Option<Result<u32, ()>> {
    let digits = s.strip_prefix("<cc")?.strip_suffix('>')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.starts_with('0') {
        return Some(Err(()));
    }
    match digits.parse::<u32>() {
        Ok(m) if m >= 1 => Some(Ok(m)),
        _ => Some(Err(())),
    }
}

fn push_u32(s: &mut String, v: u32) {
    let mut buf = [0u8; 10];
    let mut i = buf.len();
    let mut v = v;
    loop {
        i -= 1;
        buf[i] = b'0' + (v % 10) as u8;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    for &b in &buf[i..] {
        s.push(b as char);
    }
}
