use thiserror::Error;

use super::catalog;
use super::{BitRef, Circuit, ClassicalRegister, Instruction, QuantumRegister, MAX_QUBITS};

/// Parse failure. Line and column refer to the *source* text, not the
/// canonical form.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unsupported construct `{construct}`")]
    UnsupportedConstruct { line: usize, construct: String },
    #[error("line {line}: unknown gate `{name}`")]
    UnknownGate { line: usize, name: String },
    #[error("line {line}: gate `{gate}` {message}")]
    ArityMismatch { line: usize, gate: String, message: String },
    #[error("line {line}: undeclared register `{name}`")]
    UndeclaredRegister { line: usize, name: String },
    #[error("line {line}: index {index} out of range for register `{register}` of size {size}")]
    IndexOutOfRange {
        line: usize,
        register: String,
        index: usize,
        size: usize,
    },
    #[error("line {line}: register `{name}` declared twice")]
    DuplicateRegister { line: usize, name: String },
    #[error("line {line}: gate `{gate}` applied to the same qubit more than once")]
    DuplicateOperand { line: usize, gate: String },
    #[error("line {line}: circuit declares {total} qubits, limit is 16")]
    QubitLimit { line: usize, total: usize },
}

/// Parses the supported OpenQASM 2.0 subset.
///
/// Instructions are renumbered against the canonical printing. Register
/// operands without an index broadcast the instruction over the register,
/// producing one canonical line per element.
pub fn parse_qasm(source: &str) -> Result<Circuit, QasmError> {
    Parser::new(source, true)?.parse()
}

/// Like [`parse_qasm`] but keeps gate applications that violate the catalog
/// (unknown name, wrong arity, repeated operand) so that they fail at
/// simulation time instead. Used for buggy benchmark programs whose defect
/// is exactly such a violation.
pub fn parse_qasm_unchecked(source: &str) -> Result<Circuit, QasmError> {
    Parser::new(source, false)?.parse()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Real(f64),
    Str(String),
    Sym(char),
    Arrow,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, QasmError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let ch = chars[i];
        let (start_line, start_col) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        if ch == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if ch == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if ch == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            col += 2;
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            i += 2;
            col += 2;
            continue;
        }
        if ch == '-' && chars.get(i + 1) == Some(&'>') {
            push(&mut out, Tok::Arrow);
            i += 2;
            col += 2;
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            push(&mut out, Tok::Ident(word));
            continue;
        }
        if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
            let start = i;
            let mut real = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let syntax = |message: String| QasmError::Syntax {
                line: start_line,
                column: start_col,
                message,
            };
            let tok = if real {
                Tok::Real(text.parse().map_err(|_| syntax(format!("bad number `{text}`")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| syntax(format!("bad integer `{text}`")))?)
            };
            push(&mut out, tok);
            continue;
        }
        if ch == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(QasmError::Syntax {
                    line: start_line,
                    column: start_col,
                    message: "unterminated string".into(),
                });
            }
            let text: String = chars[start..i].iter().collect();
            i += 1;
            col += text.chars().count() + 2;
            push(&mut out, Tok::Str(text));
            continue;
        }
        if ";,[]()+-*/{}=<>^".contains(ch) {
            push(&mut out, Tok::Sym(ch));
            i += 1;
            col += 1;
            continue;
        }
        return Err(QasmError::Syntax {
            line,
            column: col,
            message: format!("unexpected character `{ch}`"),
        });
    }
    Ok(out)
}

/// Operand as written: a single element or a whole register.
enum Arg {
    Bit(BitRef),
    Register(String),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    strict: bool,
    qregs: Vec<QuantumRegister>,
    cregs: Vec<ClassicalRegister>,
    instructions: Vec<Instruction>,
    eof_line: usize,
}

impl Parser {
    fn new(source: &str, strict: bool) -> Result<Self, QasmError> {
        Ok(Self {
            tokens: lex(source)?,
            pos: 0,
            strict,
            qregs: Vec::new(),
            cregs: Vec::new(),
            instructions: Vec::new(),
            eof_line: source.lines().count().max(1),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn line(&self) -> usize {
        self.peek().map_or(self.eof_line, |t| t.line)
    }

    fn error_here(&self, message: impl Into<String>) -> QasmError {
        let (line, column) = self.peek().map_or((self.eof_line, 1), |t| (t.line, t.column));
        QasmError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<Token, QasmError> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| self.error_here("unexpected end of input"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn eat_sym(&mut self, sym: char) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Sym(c), .. }) if *c == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: char) -> Result<(), QasmError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{sym}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, QasmError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error_here("expected identifier")),
        }
    }

    fn expect_int(&mut self) -> Result<usize, QasmError> {
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error_here("expected integer")),
        }
    }

    fn parse(mut self) -> Result<Circuit, QasmError> {
        let mut first = true;
        while let Some(tok) = self.peek().cloned() {
            let Tok::Ident(word) = &tok.tok else {
                return Err(self.error_here("expected a statement"));
            };
            match word.as_str() {
                "OPENQASM" => {
                    if !first {
                        return Err(self.error_here("OPENQASM header must come first"));
                    }
                    self.pos += 1;
                    let version = self.next()?;
                    match version.tok {
                        Tok::Real(2.0) => {}
                        Tok::Int(2) => {}
                        _ => {
                            return Err(QasmError::UnsupportedConstruct {
                                line: tok.line,
                                construct: "OPENQASM version other than 2.0".into(),
                            })
                        }
                    }
                    self.expect_sym(';')?;
                }
                "include" => {
                    self.pos += 1;
                    match self.next()?.tok {
                        // The catalog is a subset of qelib1, so the include is a no-op.
                        Tok::Str(s) if s == "qelib1.inc" => {}
                        Tok::Str(s) => {
                            return Err(QasmError::UnsupportedConstruct {
                                line: tok.line,
                                construct: format!("include \"{s}\""),
                            })
                        }
                        _ => return Err(self.error_here("expected file name string")),
                    }
                    self.expect_sym(';')?;
                }
                "qreg" | "creg" => self.register_decl(word == "qreg", tok.line)?,
                "gate" | "opaque" | "if" | "reset" => {
                    return Err(QasmError::UnsupportedConstruct {
                        line: tok.line,
                        construct: word.clone(),
                    })
                }
                "measure" => self.measure(tok.line)?,
                "barrier" => self.barrier(tok.line)?,
                _ => self.gate(tok.line)?,
            }
            first = false;
        }
        Ok(Circuit::new(self.qregs, self.cregs, self.instructions))
    }

    fn register_decl(&mut self, quantum: bool, line: usize) -> Result<(), QasmError> {
        self.pos += 1;
        let name = self.expect_ident()?;
        self.expect_sym('[')?;
        let size = self.expect_int()?;
        if size == 0 {
            return Err(self.error_here("register size must be positive"));
        }
        self.expect_sym(']')?;
        self.expect_sym(';')?;
        let taken = self.qregs.iter().any(|r| r.name == name) || self.cregs.iter().any(|r| r.name == name);
        if taken {
            return Err(QasmError::DuplicateRegister { line, name });
        }
        if quantum {
            let total = self.qregs.iter().map(|r| r.size).sum::<usize>() + size;
            if total > MAX_QUBITS {
                return Err(QasmError::QubitLimit { line, total });
            }
            self.qregs.push(QuantumRegister { name, size });
        } else {
            self.cregs.push(ClassicalRegister { name, size });
        }
        Ok(())
    }

    fn arg(&mut self) -> Result<Arg, QasmError> {
        let name = self.expect_ident()?;
        if self.eat_sym('[') {
            let index = self.expect_int()?;
            self.expect_sym(']')?;
            Ok(Arg::Bit(BitRef::new(name, index)))
        } else {
            Ok(Arg::Register(name))
        }
    }

    fn arg_list(&mut self) -> Result<Vec<Arg>, QasmError> {
        let mut args = vec![self.arg()?];
        while self.eat_sym(',') {
            args.push(self.arg()?);
        }
        Ok(args)
    }

    fn register_size(&self, name: &str, quantum: bool, line: usize) -> Result<usize, QasmError> {
        let found = if quantum {
            self.qregs.iter().find(|r| r.name == name).map(|r| r.size)
        } else {
            self.cregs.iter().find(|r| r.name == name).map(|r| r.size)
        };
        found.ok_or_else(|| QasmError::UndeclaredRegister {
            line,
            name: name.to_string(),
        })
    }

    fn check_bit(&self, bit: &BitRef, quantum: bool, line: usize) -> Result<(), QasmError> {
        let size = self.register_size(&bit.register, quantum, line)?;
        if bit.index >= size {
            return Err(QasmError::IndexOutOfRange {
                line,
                register: bit.register.clone(),
                index: bit.index,
                size,
            });
        }
        Ok(())
    }

    /// Expands broadcast operands into per-element operand lists.
    fn expand(&self, args: &[Arg], quantum: &[bool], line: usize) -> Result<Vec<Vec<BitRef>>, QasmError> {
        let mut width = None;
        for (arg, &q) in args.iter().zip(quantum) {
            match arg {
                Arg::Bit(bit) => self.check_bit(bit, q, line)?,
                Arg::Register(name) => {
                    let size = self.register_size(name, q, line)?;
                    match width {
                        None => width = Some(size),
                        Some(w) if w != size => {
                            return Err(QasmError::Syntax {
                                line,
                                column: 1,
                                message: "broadcast registers differ in size".into(),
                            })
                        }
                        _ => {}
                    }
                }
            }
        }
        let rows = width.unwrap_or(1);
        Ok((0..rows)
            .map(|k| {
                args.iter()
                    .map(|a| match a {
                        Arg::Bit(b) => b.clone(),
                        Arg::Register(name) => BitRef::new(name.clone(), k),
                    })
                    .collect()
            })
            .collect())
    }

    fn measure(&mut self, line: usize) -> Result<(), QasmError> {
        self.pos += 1;
        let qubit = self.arg()?;
        match self.next()?.tok {
            Tok::Arrow => {}
            _ => return Err(self.error_here("expected `->`")),
        }
        let clbit = self.arg()?;
        self.expect_sym(';')?;
        if matches!(qubit, Arg::Bit(_)) != matches!(clbit, Arg::Bit(_)) {
            return Err(QasmError::Syntax {
                line,
                column: 1,
                message: "measure mixes register and element operands".into(),
            });
        }
        for mut row in self.expand(&[qubit, clbit], &[true, false], line)? {
            let c = row.pop().expect("two operands");
            let q = row.pop().expect("two operands");
            self.instructions.push(Instruction::measure(q, c));
        }
        Ok(())
    }

    fn barrier(&mut self, line: usize) -> Result<(), QasmError> {
        self.pos += 1;
        let args = self.arg_list()?;
        self.expect_sym(';')?;
        let mut qubits = Vec::new();
        for arg in args {
            match arg {
                Arg::Bit(bit) => {
                    self.check_bit(&bit, true, line)?;
                    qubits.push(bit);
                }
                Arg::Register(name) => {
                    let size = self.register_size(&name, true, line)?;
                    qubits.extend((0..size).map(|i| BitRef::new(name.clone(), i)));
                }
            }
        }
        self.instructions.push(Instruction::barrier(qubits));
        Ok(())
    }

    fn gate(&mut self, line: usize) -> Result<(), QasmError> {
        let name = self.expect_ident()?;
        let mut params = Vec::new();
        if self.eat_sym('(') && !self.eat_sym(')') {
            params.push(self.expr()?);
            while self.eat_sym(',') {
                params.push(self.expr()?);
            }
            self.expect_sym(')')?;
        }
        let args = self.arg_list()?;
        self.expect_sym(';')?;
        if self.strict {
            let spec = catalog::lookup(&name).ok_or_else(|| QasmError::UnknownGate {
                line,
                name: name.clone(),
            })?;
            if spec.param_arity != params.len() || spec.qubit_arity != args.len() {
                return Err(QasmError::ArityMismatch {
                    line,
                    gate: name,
                    message: format!(
                        "takes {} parameter(s) and {} qubit(s), got {} and {}",
                        spec.param_arity,
                        spec.qubit_arity,
                        params.len(),
                        args.len()
                    ),
                });
            }
        }
        let quantum = vec![true; args.len()];
        for qubits in self.expand(&args, &quantum, line)? {
            if self.strict && has_duplicates(&qubits) {
                return Err(QasmError::DuplicateOperand { line, gate: name });
            }
            self.instructions
                .push(Instruction::gate(name.clone(), params.clone(), qubits));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<f64, QasmError> {
        let value = self.sum()?;
        if !value.is_finite() {
            return Err(self.error_here("parameter is not finite"));
        }
        Ok(round_significant(value))
    }

    fn sum(&mut self) -> Result<f64, QasmError> {
        let mut acc = self.product()?;
        loop {
            if self.eat_sym('+') {
                acc += self.product()?;
            } else if self.eat_sym('-') {
                acc -= self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<f64, QasmError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat_sym('*') {
                acc *= self.unary()?;
            } else if self.eat_sym('/') {
                acc /= self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, QasmError> {
        if self.eat_sym('-') {
            return Ok(-self.unary()?);
        }
        if self.eat_sym('+') {
            return self.unary();
        }
        if self.eat_sym('(') {
            let v = self.sum()?;
            self.expect_sym(')')?;
            return Ok(v);
        }
        match self.next()?.tok {
            Tok::Int(n) => Ok(n as f64),
            Tok::Real(v) => Ok(v),
            Tok::Ident(s) if s == "pi" => Ok(std::f64::consts::PI),
            Tok::Ident(s) => Err(QasmError::UnsupportedConstruct {
                line: self.line(),
                construct: format!("symbolic parameter `{s}`"),
            }),
            _ => {
                self.pos -= 1;
                Err(self.error_here("expected a number"))
            }
        }
    }
}

fn has_duplicates(bits: &[BitRef]) -> bool {
    bits.iter().enumerate().any(|(i, a)| bits[i + 1..].contains(a))
}

/// Rounds to 12 significant digits, the precision of the canonical printing.
pub(crate) fn round_significant(value: f64) -> f64 {
    if value == 0.0 {
        return 0.0;
    }
    format!("{value:.11e}").parse().unwrap_or(value)
}
