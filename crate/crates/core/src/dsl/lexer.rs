use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(String),
    Sym(char),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(s) => format!("number `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &str = "+-*/^(),:={}[];";

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (start_line, start_col) = (line, col);
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                col += 1;
            }
        } else if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                s.push(d);
                chars.next();
                col += 1;
            }
            out.push(Token { tok: Tok::Int(s), line: start_line, col: start_col });
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_alphanumeric() || **d == '_') {
                s.push(d);
                chars.next();
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: start_line, col: start_col });
        } else if SYMBOLS.contains(c) {
            chars.next();
            col += 1;
            out.push(Token { tok: Tok::Sym(c), line: start_line, col: start_col });
        } else {
            return Err(ParseError::new(line, col, format!("unexpected character `{c}`"), Vec::new()));
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("equation heat : D(u,t) # comment\r\n  = 0").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("equation".into()));
        let eq = toks.iter().find(|t| t.tok == Tok::Sym('=')).unwrap();
        assert_eq!((eq.line, eq.col), (2, 3));
        assert_eq!(toks.last().unwrap().tok, Tok::Eof);
        let err = tokenize("x $ y").unwrap_err();
        assert_eq!((err.line, err.col), (1, 3));
    }
}
