//! Tokenizer for the expression DSL.

use std::fmt;

use super::ExprError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    Paren,
    Comma,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TokenKind::Number => "number",
            TokenKind::Identifier => "identifier",
            TokenKind::Operator => "operator",
            TokenKind::Paren => "paren",
            TokenKind::Comma => "comma",
        };
        f.write_str(name)
    }
}

/// A lexeme together with its character offset in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub position: usize,
}

impl Token {
    fn new(kind: TokenKind, lexeme: impl Into<String>, position: usize) -> Self {
        Token {
            kind,
            lexeme: lexeme.into(),
            position,
        }
    }

    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }
}

/// Splits `source` into tokens. Whitespace separates tokens and is dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = source.chars().collect();
    if chars.iter().all(|c| c.is_whitespace()) {
        return Err(ExprError::Empty);
    }

    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '0'..='9' | '.' => {
                i = scan_number(&chars, i)?;
                let lexeme: String = chars[start..i].iter().collect();
                match lexeme.parse::<f64>() {
                    Ok(v) if v.is_finite() => {
                        tokens.push(Token::new(TokenKind::Number, lexeme, start))
                    }
                    _ => {
                        return Err(ExprError::Lex {
                            offset: start,
                            found: c,
                        })
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let lexeme: String = chars[start..i].iter().collect();
                tokens.push(Token::new(TokenKind::Identifier, lexeme, start));
            }
            '+' | '-' | '*' | '/' | '^' => {
                i += 1;
                tokens.push(Token::new(TokenKind::Operator, c.to_string(), start));
            }
            '<' | '>' | '=' | '!' => {
                let two = chars.get(i + 1) == Some(&'=');
                let lexeme = match (c, two) {
                    ('<', false) => "<",
                    ('>', false) => ">",
                    ('<', true) => "<=",
                    ('>', true) => ">=",
                    ('=', true) => "==",
                    ('!', true) => "!=",
                    _ => {
                        return Err(ExprError::Lex {
                            offset: start,
                            found: c,
                        })
                    }
                };
                i += lexeme.len();
                tokens.push(Token::new(TokenKind::Operator, lexeme, start));
            }
            '(' | ')' => {
                i += 1;
                tokens.push(Token::new(TokenKind::Paren, c.to_string(), start));
            }
            ',' => {
                i += 1;
                tokens.push(Token::new(TokenKind::Comma, ",", start));
            }
            _ => {
                return Err(ExprError::Lex {
                    offset: start,
                    found: c,
                })
            }
        }
    }
    Ok(tokens)
}

// digits [ '.' digits ] [ ('e'|'E') ['+'|'-'] digits ], with at least one mantissa digit
fn scan_number(chars: &[char], start: usize) -> Result<usize, ExprError> {
    let mut i = start;
    let mut mantissa_digits = 0;
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
        mantissa_digits += 1;
    }
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
            mantissa_digits += 1;
        }
    }
    if mantissa_digits == 0 {
        return Err(ExprError::Lex {
            offset: start,
            found: chars[start],
        });
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        let exp_start = j;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j == exp_start {
            return Err(ExprError::Lex {
                offset: i,
                found: chars[i],
            });
        }
        i = j;
    }
    Ok(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_lexemes(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn abs_call() {
        use TokenKind::*;
        let got = kinds_and_lexemes("abs(x-y)");
        let want = vec![
            (Identifier, "abs"),
            (Paren, "("),
            (Identifier, "x"),
            (Operator, "-"),
            (Identifier, "y"),
            (Paren, ")"),
        ];
        assert_eq!(got.len(), want.len());
        for ((gk, gl), (wk, wl)) in got.iter().zip(want) {
            assert_eq!(*gk, wk);
            assert_eq!(gl, wl);
        }
    }

    #[test]
    fn polynomial_term() {
        let toks = tokenize("x^2*y^2").unwrap();
        assert_eq!(toks.len(), 7);
        let tail: Vec<_> = toks[4..]
            .iter()
            .map(|t| (t.kind, t.lexeme.as_str()))
            .collect();
        assert_eq!(
            tail,
            vec![
                (TokenKind::Identifier, "y"),
                (TokenKind::Operator, "^"),
                (TokenKind::Number, "2")
            ]
        );
    }

    #[test]
    fn invalid_character_offset() {
        assert_eq!(
            tokenize("x $ y"),
            Err(ExprError::Lex {
                offset: 2,
                found: '$'
            })
        );
    }

    #[test]
    fn positions_strictly_increase() {
        let toks = tokenize("if(x >= 1, x/3, 0) + 1.5e-3").unwrap();
        assert!(toks.windows(2).all(|w| w[0].position < w[1].position));
        assert!(toks.iter().any(|t| t.is(TokenKind::Operator, ">=")));
        assert!(toks.iter().any(|t| t.is(TokenKind::Number, "1.5e-3")));
    }

    #[test]
    fn lexemes_reproduce_source() {
        let src = "max(t, 1 - t) / (2.5 * t) ^ -1";
        let joined: String = tokenize(src)
            .unwrap()
            .iter()
            .map(|t| t.lexeme.as_str())
            .collect();
        let stripped: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        assert_eq!(joined, stripped);
    }

    #[test]
    fn malformed_numbers() {
        assert!(tokenize(".").is_err());
        assert!(tokenize("1e").is_err());
        assert!(tokenize("1e999").is_err());
        assert!(tokenize("= 1").is_err());
        assert_eq!(tokenize("   "), Err(ExprError::Empty));
    }
}
