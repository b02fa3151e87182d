use super::ast::Span;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    Str(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Kw(k) => format!("`{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "def", "data", "forall", "Type", "Unit", "unit", "Up", "Down", "force", "thunk", "susp",
    "store", "load", "in", "match", "with",
];

/// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "/\\", "->", "-o", "|-", "=>", "\\", ".", ",", ":", "(", ")", "[", "]", "{", "}", "<", ">",
    "=", "|", "@", "#",
];

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            out.push((tok, span));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse().map_err(|_| ParseError {
                span,
                expected: vec!["a number that fits in 64 bits".into()],
                found: digits.clone(),
            })?;
            out.push((Tok::Num(n), span));
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let start = i;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            if chars.get(i) != Some(&'"') {
                return Err(ParseError {
                    span,
                    expected: vec!["closing `\"`".into()],
                    found: "end of line".into(),
                });
            }
            let s: String = chars[start..i].iter().collect();
            advance(&mut i, &mut line, &mut col, '"');
            out.push((Tok::Str(s), span));
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            let sc: Vec<char> = s.chars().collect();
            chars[i..].starts_with(&sc)
                // `-o` only when not followed by an identifier character
                && !(**s == "-o" && chars.get(i + 2).is_some_and(|c| is_ident_char(*c)))
        });
        match sym {
            Some(s) => {
                for ch in s.chars() {
                    advance(&mut i, &mut line, &mut col, ch);
                }
                out.push((Tok::Sym(s), span));
            }
            None => {
                return Err(ParseError {
                    span,
                    expected: vec!["a token".into()],
                    found: format!("character `{c}`"),
                })
            }
        }
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn lexes_symbols_keywords_and_comments() {
        assert_eq!(
            toks("/\\a . \\x -> y -o z -- note\n|- 3@P"),
            vec![
                Tok::Sym("/\\"),
                Tok::Ident("a".into()),
                Tok::Sym("."),
                Tok::Sym("\\"),
                Tok::Ident("x".into()),
                Tok::Sym("->"),
                Tok::Ident("y".into()),
                Tok::Sym("-o"),
                Tok::Ident("z".into()),
                Tok::Sym("|-"),
                Tok::Num(3),
                Tok::Sym("@"),
                Tok::Ident("P".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("force x'")[0], Tok::Kw("force"));
    }

    #[test]
    fn tracks_positions() {
        let t = lex("a\n  b").unwrap();
        assert_eq!(t[1].1, Span { line: 2, col: 3 });
    }

    #[test]
    fn rejects_stray_characters() {
        let e = lex("a $").unwrap_err();
        assert_eq!(e.span, Span { line: 1, col: 3 });
    }
}
