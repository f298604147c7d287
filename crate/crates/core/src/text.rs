//! Token sequences for proof states: serialization, parsing and
//! calculator-bracket evaluation, in infix and prefix notation.
//!
//! Infix follows the written form: `( 2 * x_2 ^ 2 ) * ( 3 * x_2 + 4 )`.
//! Prefix is the preorder traversal with every n-ary `+`/`*` chain folded
//! into left-nested binary nodes; factors keep their parentheses so that
//! factor boundaries survive (a product `(2)*(x_1)` and a single factor
//! `(2*x_1)` would otherwise serialize identically).
//!
//! In digit mode an integer is one token per digit. Prefix needs a frame
//! for multi-digit integers, `INT 1 2 END`, because two integers can be
//! adjacent there.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::expr::{Factor, Num, Power, ProofState, Product, SurfaceTerm};
use crate::poly::VarId;
use crate::proof::{Locus, StepKind};

/// Largest exponent the parser accepts.
pub const MAX_EXPONENT: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Notation {
    #[default]
    Infix,
    Prefix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NumberEncoding {
    Atomic,
    #[default]
    Digit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum VarEncoding {
    /// `x_12` is one token.
    #[default]
    Atomic,
    /// `x _ 12`: three tokens, the index always one token.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TextFormat {
    pub notation: Notation,
    pub numbers: NumberEncoding,
    pub vars: VarEncoding,
}

impl Notation {
    pub fn name(self) -> &'static str {
        match self {
            Notation::Infix => "infix",
            Notation::Prefix => "prefix",
        }
    }
}

impl FromStr for Notation {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "infix" => Ok(Notation::Infix),
            "prefix" => Ok(Notation::Prefix),
            _ => Err(()),
        }
    }
}

impl NumberEncoding {
    pub fn name(self) -> &'static str {
        match self {
            NumberEncoding::Atomic => "atomic",
            NumberEncoding::Digit => "digit",
        }
    }
}

impl FromStr for NumberEncoding {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "atomic" => Ok(NumberEncoding::Atomic),
            "digit" => Ok(NumberEncoding::Digit),
            _ => Err(()),
        }
    }
}

impl VarEncoding {
    pub fn name(self) -> &'static str {
        match self {
            VarEncoding::Atomic => "atomic",
            VarEncoding::Split => "split",
        }
    }
}

impl FromStr for VarEncoding {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "atomic" => Ok(VarEncoding::Atomic),
            "split" => Ok(VarEncoding::Split),
            _ => Err(()),
        }
    }
}

/// A whitespace-free token list; displays with single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }

    /// Splits on whitespace.
    pub fn from_text(text: &str) -> Self {
        TokenSeq(text.split_whitespace().map(ToOwned::to_owned).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(t)?;
        }
        Ok(())
    }
}

/// A token sequence that is not a well-formed expression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed expression at token {position}: {reason}")]
pub struct ParseError {
    pub position: usize,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BracketError {
    #[error("malformed bracket at token {position}: {reason}")]
    MalformedBracket { position: usize, reason: &'static str },
}

// ---------------------------------------------------------------------------
// serialization

struct Emitter {
    fmt: TextFormat,
    out: Vec<String>,
}

impl Emitter {
    fn new(fmt: TextFormat) -> Self {
        Emitter { fmt, out: Vec::new() }
    }

    fn sym(&mut self, s: &str) {
        self.out.push(s.to_owned());
    }

    fn int(&mut self, n: &BigUint) {
        let s = n.to_string();
        match (self.fmt.numbers, self.fmt.notation) {
            (NumberEncoding::Atomic, _) => self.out.push(s),
            (NumberEncoding::Digit, Notation::Prefix) if s.len() > 1 => {
                self.sym("INT");
                self.out.extend(s.chars().map(|c| c.to_string()));
                self.sym("END");
            }
            (NumberEncoding::Digit, _) => self.out.extend(s.chars().map(|c| c.to_string())),
        }
    }

    fn var(&mut self, v: VarId) {
        match self.fmt.vars {
            VarEncoding::Atomic => self.out.push(v.to_string()),
            VarEncoding::Split => {
                self.sym("x");
                self.sym("_");
                self.out.push(v.index().to_string());
            }
        }
    }

    /// Emits `n` items joined by `op`, with `#` around items `mark`.
    /// Prefix marks the smallest subtree holding the range.
    fn chain(&mut self, op: &str, n: usize, mark: Option<Range<usize>>, mut item: impl FnMut(&mut Self, usize)) {
        match self.fmt.notation {
            Notation::Infix => {
                for i in 0..n {
                    if i > 0 {
                        self.sym(op);
                    }
                    if mark.as_ref().is_some_and(|m| m.start == i) {
                        self.sym("#");
                    }
                    item(self, i);
                    if mark.as_ref().is_some_and(|m| m.end == i + 1) {
                        self.sym("#");
                    }
                }
            }
            Notation::Prefix => {
                let (open_op, open_item, close) = match &mark {
                    None => (None, None, None),
                    Some(m) if m.len() == 1 => (None, Some(m.start), Some(m.start)),
                    Some(m) => (Some(n - m.end), None, Some(m.end - 1)),
                };
                for k in 0..n.saturating_sub(1) {
                    if open_op == Some(k) {
                        self.sym("#");
                    }
                    self.sym(op);
                }
                for i in 0..n {
                    if open_item == Some(i) || (open_op == Some(n - 1) && i == 0) {
                        self.sym("#");
                    }
                    item(self, i);
                    if close == Some(i) {
                        self.sym("#");
                    }
                }
            }
        }
    }

    fn num(&mut self, n: &Num) {
        match n {
            Num::Lit(v) => self.int(v),
            Num::Bracket(sum) => {
                self.sym("[");
                self.chain("+", sum.len(), None, |e, i| {
                    let prod = &sum[i];
                    e.chain("*", prod.len(), None, |e, j| e.int(&prod[j]));
                });
                self.sym("]");
            }
        }
    }

    fn power(&mut self, p: &Power) {
        if !p.exp_shown {
            return self.var(p.var);
        }
        match self.fmt.notation {
            Notation::Infix => {
                self.var(p.var);
                self.sym("^");
                self.num(&p.exp);
            }
            Notation::Prefix => {
                self.sym("^");
                self.var(p.var);
                self.num(&p.exp);
            }
        }
    }

    fn term(&mut self, t: &SurfaceTerm) {
        let offset = usize::from(t.coeff_shown);
        let n = offset + t.powers.len();
        self.chain("*", n, None, |e, i| {
            if i < offset {
                e.num(&t.coeff);
            } else {
                e.power(&t.powers[i - offset]);
            }
        });
    }

    fn terms(&mut self, f: &Factor, mark: Option<Range<usize>>) {
        self.chain("+", f.terms.len(), mark, |e, i| e.term(&f.terms[i]));
    }

    fn factor(&mut self, f: &Factor, mark: Option<Range<usize>>) {
        self.sym("(");
        self.terms(f, mark);
        self.sym(")");
    }

    fn product(&mut self, p: &Product, locus: Option<&Locus>) {
        let factor_mark = locus.and_then(|l| l.factors.clone()).filter(|_| locus.is_some_and(|l| l.terms.is_none()));
        let term_mark = locus.and_then(|l| Some((l.factors.clone()?.start, l.terms.clone()?)));
        self.chain("*", p.factors.len(), factor_mark, |e, j| {
            let m = term_mark.as_ref().filter(|(f, _)| *f == j).map(|(_, r)| r.clone());
            e.factor(&p.factors[j], m);
        });
    }

    fn state(&mut self, s: &ProofState, locus: Option<&Locus>) {
        match s {
            ProofState::Flat(f) => self.terms(f, None),
            ProofState::Sum(ps) => {
                let sum_mark = locus.filter(|l| l.factors.is_none()).map(|l| l.products.clone());
                let inner = locus.filter(|l| l.factors.is_some());
                self.chain("+", ps.len(), sum_mark, |e, i| {
                    let l = inner.filter(|l| l.products.start == i);
                    e.product(&ps[i], l);
                });
            }
        }
    }
}

/// Serializes a proof state.
pub fn serialize(state: &ProofState, fmt: TextFormat) -> TokenSeq {
    let mut e = Emitter::new(fmt);
    e.state(state, None);
    TokenSeq(e.out)
}

/// `LABEL $ <state>`, with `#` around `mark` when given.
pub fn serialize_labeled(label: StepKind, state: &ProofState, mark: Option<&Locus>, fmt: TextFormat) -> TokenSeq {
    let mut e = Emitter::new(fmt);
    e.sym(label.label());
    e.sym("$");
    e.state(state, mark);
    TokenSeq(e.out)
}

/// Serializes a bare integer in the given encoding.
pub fn serialize_int(n: &BigUint, fmt: TextFormat) -> TokenSeq {
    let mut e = Emitter::new(fmt);
    e.int(n);
    TokenSeq(e.out)
}

// ---------------------------------------------------------------------------
// parsing

struct Parser<'a> {
    toks: &'a [String],
    pos: usize,
    fmt: TextFormat,
}

type PResult<T> = Result<T, ParseError>;

fn is_digit_token(t: &str) -> bool {
    t.len() == 1 && t.as_bytes()[0].is_ascii_digit()
}

fn is_digits(t: &str) -> bool {
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
}

fn parse_decimal(s: &str) -> Option<BigUint> {
    if !is_digits(s) || (s.len() > 1 && s.starts_with('0')) {
        return None;
    }
    BigUint::parse_bytes(s.as_bytes(), 10)
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [String], fmt: TextFormat) -> Self {
        Parser { toks, pos: 0, fmt }
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(String::as_str)
    }

    fn peek_at(&self, k: usize) -> Option<&'a str> {
        self.toks.get(self.pos + k).map(String::as_str)
    }

    fn err<T>(&self, reason: &'static str) -> PResult<T> {
        Err(ParseError { position: self.pos, reason })
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.peek() == Some(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str, reason: &'static str) -> PResult<()> {
        if self.eat(s) { Ok(()) } else { self.err(reason) }
    }

    fn at_end(&self) -> bool {
        self.pos == self.toks.len()
    }

    fn starts_number(&self) -> bool {
        match self.peek() {
            Some("INT") => self.fmt.numbers == NumberEncoding::Digit && self.fmt.notation == Notation::Prefix,
            Some(t) => is_digits(t),
            None => false,
        }
    }

    fn starts_var(&self) -> bool {
        match (self.fmt.vars, self.peek()) {
            (VarEncoding::Atomic, Some(t)) => t.starts_with("x_"),
            (VarEncoding::Split, Some("x")) => true,
            _ => false,
        }
    }

    fn int(&mut self) -> PResult<BigUint> {
        match self.fmt.numbers {
            NumberEncoding::Atomic => {
                let Some(t) = self.peek() else { return self.err("expected integer") };
                let Some(n) = parse_decimal(t) else { return self.err("bad integer") };
                self.pos += 1;
                Ok(n)
            }
            NumberEncoding::Digit => {
                if self.fmt.notation == Notation::Prefix {
                    if self.eat("INT") {
                        let start = self.pos;
                        while self.peek().is_some_and(is_digit_token) {
                            self.pos += 1;
                        }
                        let digits: String = self.toks[start..self.pos].concat();
                        if digits.len() < 2 || digits.starts_with('0') {
                            return self.err("bad digit group");
                        }
                        self.expect("END", "unterminated digit group")?;
                        return Ok(parse_decimal(&digits).expect("checked digits"));
                    }
                    return match self.peek() {
                        Some(t) if is_digit_token(t) => {
                            self.pos += 1;
                            Ok(parse_decimal(t).expect("digit"))
                        }
                        Some(t) if is_digits(t) => self.err("bad digit group"),
                        _ => self.err("expected integer"),
                    };
                }
                let start = self.pos;
                while self.peek().is_some_and(is_digit_token) {
                    self.pos += 1;
                }
                if start == self.pos {
                    return match self.peek() {
                        Some(t) if is_digits(t) => self.err("bad digit group"),
                        _ => self.err("expected integer"),
                    };
                }
                let digits: String = self.toks[start..self.pos].concat();
                match parse_decimal(&digits) {
                    Some(n) => Ok(n),
                    None => Err(ParseError { position: start, reason: "bad digit group" }),
                }
            }
        }
    }

    fn var(&mut self) -> PResult<VarId> {
        let index = match self.fmt.vars {
            VarEncoding::Atomic => {
                let Some(t) = self.peek() else { return self.err("expected variable") };
                let Some(idx) = t.strip_prefix("x_") else { return self.err("expected variable") };
                let idx = idx.to_owned();
                self.pos += 1;
                idx
            }
            VarEncoding::Split => {
                if !(self.peek() == Some("x") && self.peek_at(1) == Some("_")) {
                    return self.err("expected variable");
                }
                self.pos += 2;
                let Some(t) = self.peek() else { return self.err("expected variable index") };
                self.pos += 1;
                t.to_owned()
            }
        };
        parse_decimal(&index)
            .and_then(|n| n.to_u32())
            .and_then(VarId::new)
            .map_or_else(|| Err(ParseError { position: self.pos - 1, reason: "bad variable index" }), Ok)
    }

    /// Counts a run of prefix operator tokens.
    fn ops(&mut self, op: &str) -> usize {
        let mut k = 0;
        while self.eat(op) {
            k += 1;
        }
        k
    }

    fn bracket(&mut self) -> PResult<Num> {
        self.expect("[", "expected bracket")?;
        let mut sum = Vec::new();
        match self.fmt.notation {
            Notation::Infix => loop {
                let mut prod = vec![self.int()?];
                while self.eat("*") {
                    prod.push(self.int()?);
                }
                sum.push(prod);
                if !self.eat("+") {
                    break;
                }
            },
            Notation::Prefix => {
                let k = self.ops("+");
                for _ in 0..=k {
                    let m = self.ops("*");
                    let mut prod = Vec::with_capacity(m + 1);
                    for _ in 0..=m {
                        prod.push(self.int()?);
                    }
                    sum.push(prod);
                }
            }
        }
        self.expect("]", "unclosed bracket")?;
        Ok(Num::Bracket(sum))
    }

    fn num(&mut self) -> PResult<Num> {
        if self.peek() == Some("[") {
            self.bracket()
        } else {
            Ok(Num::Lit(self.int()?))
        }
    }

    fn exponent(&mut self) -> PResult<Num> {
        let at = self.pos;
        let n = self.num()?;
        if n.value() > BigUint::from(MAX_EXPONENT) {
            return Err(ParseError { position: at, reason: "exponent too large" });
        }
        Ok(n)
    }

    fn power(&mut self) -> PResult<Power> {
        match self.fmt.notation {
            Notation::Infix => {
                let var = self.var()?;
                if self.eat("^") {
                    let exp = self.exponent()?;
                    Ok(Power { var, exp, exp_shown: true })
                } else {
                    Ok(Power { var, exp: Num::lit(1u32), exp_shown: false })
                }
            }
            Notation::Prefix => {
                if self.eat("^") {
                    let var = self.var()?;
                    let exp = self.exponent()?;
                    Ok(Power { var, exp, exp_shown: true })
                } else {
                    let var = self.var()?;
                    Ok(Power { var, exp: Num::lit(1u32), exp_shown: false })
                }
            }
        }
    }

    fn starts_coeff(&self) -> bool {
        self.starts_number() || self.peek() == Some("[")
    }

    fn starts_power(&self) -> bool {
        match self.fmt.notation {
            Notation::Infix => self.starts_var(),
            Notation::Prefix => self.peek() == Some("^") || self.starts_var(),
        }
    }

    fn term(&mut self) -> PResult<SurfaceTerm> {
        let k = match self.fmt.notation {
            Notation::Infix => 0,
            Notation::Prefix => self.ops("*"),
        };
        let (coeff, coeff_shown) = if self.starts_coeff() {
            (self.num()?, true)
        } else if self.starts_power() {
            (Num::lit(1u32), false)
        } else {
            return self.err("expected term");
        };
        let mut powers = Vec::new();
        if !coeff_shown {
            powers.push(self.power()?);
        }
        match self.fmt.notation {
            Notation::Infix => {
                while self.peek() == Some("*") && !matches!(self.peek_at(1), Some("(")) {
                    self.pos += 1;
                    powers.push(self.power()?);
                }
            }
            Notation::Prefix => {
                for _ in 0..k {
                    powers.push(self.power()?);
                }
            }
        }
        Ok(SurfaceTerm { coeff, coeff_shown, powers })
    }

    fn terms(&mut self) -> PResult<Factor> {
        let mut terms = Vec::new();
        match self.fmt.notation {
            Notation::Infix => loop {
                terms.push(self.term()?);
                if !self.eat("+") {
                    break;
                }
            },
            Notation::Prefix => {
                let k = self.ops("+");
                for _ in 0..=k {
                    terms.push(self.term()?);
                }
            }
        }
        Ok(Factor::new(terms))
    }

    fn factor(&mut self) -> PResult<Factor> {
        self.expect("(", "expected factor")?;
        let f = self.terms()?;
        self.expect(")", "unbalanced parenthesis")?;
        Ok(f)
    }

    fn product(&mut self) -> PResult<Product> {
        let mut factors = Vec::new();
        match self.fmt.notation {
            Notation::Infix => loop {
                factors.push(self.factor()?);
                if !self.eat("*") {
                    break;
                }
            },
            Notation::Prefix => {
                let k = self.ops("*");
                for _ in 0..=k {
                    factors.push(self.factor()?);
                }
            }
        }
        Ok(Product::new(factors))
    }

    fn products(&mut self) -> PResult<Vec<Product>> {
        let mut ps = Vec::new();
        match self.fmt.notation {
            Notation::Infix => loop {
                ps.push(self.product()?);
                if !self.eat("+") {
                    break;
                }
            },
            Notation::Prefix => {
                let k = self.ops("+");
                for _ in 0..=k {
                    ps.push(self.product()?);
                }
            }
        }
        Ok(ps)
    }

    fn state(&mut self) -> PResult<ProofState> {
        if self.toks.is_empty() {
            return self.err("empty expression");
        }
        let s = if self.toks.iter().any(|t| t == "(") {
            ProofState::Sum(self.products()?)
        } else {
            ProofState::Flat(self.terms()?)
        };
        if !self.at_end() {
            return self.err("trailing tokens");
        }
        Ok(s)
    }

    fn finish<T>(&self, v: T) -> PResult<T> {
        if self.at_end() { Ok(v) } else { self.err("trailing tokens") }
    }
}

/// Parses a proof state. Never repairs input: anything outside the
/// grammar is a [`ParseError`].
pub fn parse(tokens: &TokenSeq, fmt: TextFormat) -> Result<ProofState, ParseError> {
    Parser::new(&tokens.0, fmt).state()
}

/// An annotated sequence `LABEL $ <expr>` with an optional `#…#` span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotated {
    pub label: StepKind,
    pub state: ProofState,
    /// The expression tokens with markers removed.
    pub expr: TokenSeq,
    /// Token range of the marked span within `expr`.
    pub span: Option<Range<usize>>,
}

/// True when `toks` is a complete subexpression of some kind.
fn is_subexpression(toks: &[String], fmt: TextFormat) -> bool {
    let mut p = Parser::new(toks, fmt);
    if p.products().and_then(|v| p.finish(v)).is_ok() {
        return true;
    }
    let mut p = Parser::new(toks, fmt);
    p.terms().and_then(|v| p.finish(v)).is_ok()
}

pub fn parse_annotated(tokens: &TokenSeq, fmt: TextFormat) -> Result<Annotated, ParseError> {
    let toks = tokens.tokens();
    let label = toks
        .first()
        .and_then(|t| t.parse::<StepKind>().ok())
        .ok_or(ParseError { position: 0, reason: "expected step label" })?;
    if toks.get(1).map(String::as_str) != Some("$") {
        return Err(ParseError { position: 1, reason: "expected `$`" });
    }
    let mut expr = Vec::with_capacity(toks.len());
    let mut marks = Vec::new();
    for (i, t) in toks.iter().enumerate().skip(2) {
        if t == "#" {
            marks.push((i, expr.len()));
        } else {
            expr.push(t.clone());
        }
    }
    let span = match marks.as_slice() {
        [] => None,
        [(_, a), (i, b)] => {
            if a == b || !is_subexpression(&expr[*a..*b], fmt) {
                return Err(ParseError { position: *i, reason: "marked span is not a subexpression" });
            }
            Some(*a..*b)
        }
        [.., (i, _)] => return Err(ParseError { position: *i, reason: "unpaired marker" }),
    };
    let expr = TokenSeq(expr);
    let state = parse(&expr, fmt).map_err(|e| ParseError {
        position: e.position + 2,
        reason: e.reason,
    })?;
    Ok(Annotated { label, state, expr, span })
}

/// Replaces every `[...]` with the integer it denotes; other tokens are
/// copied unchanged.
pub fn eval_brackets(tokens: &TokenSeq, fmt: TextFormat) -> Result<TokenSeq, BracketError> {
    let toks = tokens.tokens();
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        match toks[i].as_str() {
            "[" => {
                let Some(len) = toks[i + 1..].iter().position(|t| t == "]" || t == "[") else {
                    return Err(BracketError::MalformedBracket { position: i, reason: "unclosed bracket" });
                };
                let close = i + 1 + len;
                if toks[close] == "[" {
                    return Err(BracketError::MalformedBracket { position: close, reason: "nested bracket" });
                }
                let inner = &toks[i..=close];
                let mut p = Parser::new(inner, fmt);
                let value = p
                    .bracket()
                    .and_then(|n| p.finish(n))
                    .map_err(|e| BracketError::MalformedBracket {
                        position: i + e.position,
                        reason: "bracket must hold integers joined by + and *",
                    })?
                    .value();
                out.extend(serialize_int(&value, fmt).into_inner());
                i = close + 1;
            }
            "]" => {
                return Err(BracketError::MalformedBracket { position: i, reason: "unopened bracket" });
            }
            _ => {
                out.push(toks[i].clone());
                i += 1;
            }
        }
    }
    Ok(TokenSeq(out))
}

/// Tokenizes human-written text such as `(2*x_2^2)*(3*x_2^1 + 4)`.
pub fn lex(text: &str, fmt: TextFormat) -> Result<TokenSeq, ParseError> {
    let bytes = text.as_bytes();
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let s = &text[start..i];
            let n = parse_decimal(s).ok_or(ParseError { position: out.len(), reason: "bad integer" })?;
            out.extend(serialize_int(&n, fmt).into_inner());
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphabetic()) {
                i += 1;
            }
            let word = &text[start..i];
            if word == "x" && bytes.get(i) == Some(&b'_') {
                let s = i + 1;
                let mut e = s;
                while e < bytes.len() && bytes[e].is_ascii_digit() {
                    e += 1;
                }
                let v = parse_decimal(&text[s..e])
                    .and_then(|n| n.to_u32())
                    .and_then(VarId::new)
                    .ok_or(ParseError { position: out.len(), reason: "bad variable index" })?;
                let mut em = Emitter::new(fmt);
                em.var(v);
                out.extend(em.out);
                i = e;
            } else if matches!(word, "MARK" | "FAC" | "MUL" | "SUM" | "INT" | "END") {
                out.push(word.to_owned());
            } else {
                return Err(ParseError { position: out.len(), reason: "unknown word" });
            }
        } else if b"+*^()#[]$_".contains(&c) {
            out.push((c as char).to_string());
            i += 1;
        } else {
            return Err(ParseError { position: out.len(), reason: "unknown character" });
        }
    }
    Ok(TokenSeq(out))
}

/// Expression value of a token sequence: the normal form, with brackets
/// evaluated. Convenience over [`parse`].
pub fn parse_nf(tokens: &TokenSeq, fmt: TextFormat) -> Result<crate::poly::PolyNF, ParseError> {
    parse(tokens, fmt).map(|s| s.to_nf())
}
