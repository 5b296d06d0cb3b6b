//! Character classes used by `charset_inject` and by crash predicates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharClass {
    Control,
    NullByte,
    Emoji,
    RtlOverride,
    Combining,
    SqlMeta,
    FormatSpecifier,
    Whitespace,
    Punctuation,
}

impl CharClass {
    pub const ALL: [CharClass; 9] = [
        CharClass::Control,
        CharClass::NullByte,
        CharClass::Emoji,
        CharClass::RtlOverride,
        CharClass::Combining,
        CharClass::SqlMeta,
        CharClass::FormatSpecifier,
        CharClass::Whitespace,
        CharClass::Punctuation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CharClass::Control => "control",
            CharClass::NullByte => "null_byte",
            CharClass::Emoji => "emoji",
            CharClass::RtlOverride => "rtl_override",
            CharClass::Combining => "combining",
            CharClass::SqlMeta => "sql_meta",
            CharClass::FormatSpecifier => "format_specifier",
            CharClass::Whitespace => "whitespace",
            CharClass::Punctuation => "punctuation",
        }
    }

    /// Fixed injection table. `charset_inject` cycles through it in order.
    pub fn pieces(self) -> &'static [&'static str] {
        match self {
            CharClass::Control => &["\u{0000}", "\u{0001}", "\u{0008}", "\u{001B}", "\u{007F}"],
            CharClass::NullByte => &["\u{0000}"],
            CharClass::Emoji => &["\u{1F600}", "\u{1F4A9}", "\u{1F525}"],
            CharClass::RtlOverride => &["\u{202E}"],
            CharClass::Combining => &["\u{0301}", "\u{0308}", "\u{0336}"],
            CharClass::SqlMeta => &["'", "\"", ";", "--", "/*"],
            CharClass::FormatSpecifier => &["%s", "%n", "{0}"],
            CharClass::Whitespace => &[" ", "\t", "\n", "\u{00A0}", "\u{200B}"],
            CharClass::Punctuation => &["!", "@", "#", "$", "%", "^", "&", "*"],
        }
    }

    /// Whether `text` contains something from this class.
    pub fn occurs_in(self, text: &str) -> bool {
        match self {
            CharClass::Control => text.chars().any(char::is_control),
            CharClass::NullByte => text.contains('\0'),
            CharClass::Emoji => text.chars().any(|c| {
                matches!(u32::from(c), 0x1F000..=0x1FAFF | 0x2600..=0x27BF)
            }),
            CharClass::RtlOverride => text
                .chars()
                .any(|c| matches!(c, '\u{202B}' | '\u{202E}' | '\u{2067}' | '\u{200F}')),
            CharClass::Combining => text.chars().any(|c| {
                matches!(u32::from(c), 0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF)
            }),
            CharClass::SqlMeta => ["'", "\"", ";", "--", "/*"].iter().any(|m| text.contains(m)),
            CharClass::FormatSpecifier => {
                let b = text.as_bytes();
                let percent = b
                    .windows(2)
                    .any(|w| w[0] == b'%' && matches!(w[1], b's' | b'n' | b'd' | b'x' | b'f' | b'@'));
                let brace = b.windows(3).any(|w| w[0] == b'{' && w[1].is_ascii_digit() && w[2] == b'}');
                percent || brace
            }
            CharClass::Whitespace => text.chars().any(|c| c.is_whitespace() || c == '\u{200B}'),
            CharClass::Punctuation => text.chars().any(|c| c.is_ascii_punctuation()),
        }
    }
}

impl fmt::Display for CharClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CharClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CharClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown character class `{s}`"))
    }
}
