//! Text syntax for polynomials: terms like `3*x1^2*x7 - 0.5`, whitespace
//! insensitive, `^` for powers, variables written `x<id>`.

use super::{MultiIndex, Polynomial, VarId};
use crate::error::{Error, Result};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(input: &'a str) -> Self {
        Self {
            bytes: input.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            at: self.pos,
            msg: msg.into(),
        }
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an integer"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error("integer out of range"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && matches!(self.bytes[self.pos], b'0'..=b'9' | b'.')
        {
            self.pos += 1;
        }
        // exponent suffix such as 1e-3
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        if self.pos == start {
            return Err(self.error("expected a number"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error("malformed number"))
    }

    /// number | x<id>[^exp], multiplied into (coeff, index)
    fn factor(&mut self, coeff: &mut f64, index: &mut MultiIndex) -> Result<()> {
        match self.peek() {
            Some(b'x') | Some(b'X') => {
                self.bump();
                let var = self.integer()?;
                let var: VarId = var
                    .try_into()
                    .map_err(|_| self.error("variable id out of range"))?;
                let exp = if self.peek() == Some(b'^') {
                    self.bump();
                    let e = self.integer()?;
                    u32::try_from(e).map_err(|_| self.error("exponent out of range"))?
                } else {
                    1
                };
                *index = index.mul(&MultiIndex::single(var, exp));
                Ok(())
            }
            Some(b'0'..=b'9') | Some(b'.') => {
                *coeff *= self.number()?;
                Ok(())
            }
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn term(&mut self) -> Result<(MultiIndex, f64)> {
        let mut coeff = 1.0;
        let mut index = MultiIndex::one();
        self.factor(&mut coeff, &mut index)?;
        while self.peek() == Some(b'*') {
            self.bump();
            self.factor(&mut coeff, &mut index)?;
        }
        Ok((index, coeff))
    }
}

pub(super) fn polynomial(input: &str) -> Result<Polynomial> {
    let mut cur = Cursor::new(input);
    let mut terms: Vec<(MultiIndex, f64)> = Vec::new();
    let mut sign = 1.0;
    match cur.peek() {
        Some(b'+') => {
            cur.bump();
        }
        Some(b'-') => {
            cur.bump();
            sign = -1.0;
        }
        Some(_) => {}
        None => return Err(cur.error("empty polynomial")),
    }
    loop {
        let (index, coeff) = cur.term()?;
        terms.push((index, sign * coeff));
        match cur.peek() {
            None => break,
            Some(b'+') => {
                cur.bump();
                sign = 1.0;
            }
            Some(b'-') => {
                cur.bump();
                sign = -1.0;
            }
            Some(c) => return Err(cur.error(format!("unexpected character '{}'", c as char))),
        }
    }
    Ok(Polynomial::from_terms(terms))
}
