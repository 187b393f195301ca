//! Line-based `key: value` documents shared by method and scenario files.
//!
//! `#` starts a comment that runs to the end of the line. Blank lines are
//! ignored. Lines without a colon are bare rows (used for matrix bodies).

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry<'a> {
    Field {
        line: usize,
        key: &'a str,
        value: &'a str,
    },
    Row {
        line: usize,
        text: &'a str,
    },
}

pub fn entries(text: &str) -> impl Iterator<Item = Entry<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            return None;
        }
        Some(match content.split_once(':') {
            Some((key, value)) => Entry::Field {
                line,
                key: key.trim(),
                value: value.trim(),
            },
            None => Entry::Row { line, text: content },
        })
    })
}
