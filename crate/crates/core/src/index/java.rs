//! Structural Java parser.
//!
//! Recovers package declarations, (nested) type declarations and
//! method/constructor declarations with their parameter types. Method bodies,
//! field initializers and initializer blocks are skipped by brace matching, so
//! anonymous and local classes never surface as indexed types.

use super::{ClassDecl, MethodDecl, ParseError, SourceExtractor, SourceOutline};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Kind {
    Ident(String),
    Punct(char),
    Literal,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    line: usize,
}

impl Token {
    fn is_punct(&self, c: char) -> bool {
        self.kind == Kind::Punct(c)
    }

    fn ident(&self) -> Option<&str> {
        match &self.kind {
            Kind::Ident(s) => Some(s),
            _ => None,
        }
    }

    fn is_ident(&self, s: &str) -> bool {
        self.ident() == Some(s)
    }
}

/// Extractor for `.java` sources.
#[derive(Debug, Default, Clone, Copy)]
pub struct JavaExtractor;

impl SourceExtractor for JavaExtractor {
    fn handles(&self, path: &Path) -> bool {
        path.extension().is_some_and(|ext| ext == "java")
    }

    fn extract(&self, source: &str) -> Result<SourceOutline, ParseError> {
        let tokens = lex(source)?;
        Parser {
            tokens: &tokens,
            pos: 0,
            out: SourceOutline::default(),
        }
        .compilation_unit()
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let err = |line: usize, message: &str| ParseError {
        line,
        message: message.to_string(),
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start = line;
            i += 2;
            loop {
                match chars.get(i) {
                    None => return Err(err(start, "unterminated block comment")),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        break;
                    }
                    Some('\n') => {
                        line += 1;
                        i += 1;
                    }
                    Some(_) => i += 1,
                }
            }
        } else if c == '"' && chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') {
            // text block
            let start = line;
            i += 3;
            loop {
                match chars.get(i) {
                    None => return Err(err(start, "unterminated text block")),
                    Some('\\') => i += 2,
                    Some('"') if chars.get(i + 1) == Some(&'"') && chars.get(i + 2) == Some(&'"') => {
                        i += 3;
                        break;
                    }
                    Some('\n') => {
                        line += 1;
                        i += 1;
                    }
                    Some(_) => i += 1,
                }
            }
            tokens.push(Token {
                kind: Kind::Literal,
                line: start,
            });
        } else if c == '"' || c == '\'' {
            i += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(line, "unterminated literal")),
                    Some('\\') => i += 2,
                    Some(&q) if q == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            tokens.push(Token {
                kind: Kind::Literal,
                line,
            });
        } else if c.is_ascii_digit() {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            tokens.push(Token {
                kind: Kind::Literal,
                line,
            });
        } else if c.is_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            tokens.push(Token {
                kind: Kind::Ident(chars[start..i].iter().collect()),
                line,
            });
        } else {
            tokens.push(Token {
                kind: Kind::Punct(c),
                line,
            });
            i += 1;
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    out: SourceOutline,
}

enum Stop {
    Semi,
    Brace,
    Assign,
    Close,
    Eof,
}

impl<'a> Parser<'a> {
    fn compilation_unit(mut self) -> Result<SourceOutline, ParseError> {
        self.body(None, false, false)?;
        Ok(self.out)
    }

    fn error(&self, message: &str) -> ParseError {
        let line = self
            .tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map_or(1, |t| t.line);
        ParseError {
            line,
            message: message.to_string(),
        }
    }

    /// Index of the token closing the group opened at `open`.
    fn matching(&self, open: usize) -> Result<usize, ParseError> {
        let (o, c) = match self.tokens[open].kind {
            Kind::Punct('(') => ('(', ')'),
            Kind::Punct('{') => ('{', '}'),
            Kind::Punct('[') => ('[', ']'),
            _ => unreachable!("matching() called on a non-bracket token"),
        };
        let mut depth = 0usize;
        for (j, t) in self.tokens.iter().enumerate().skip(open) {
            if t.is_punct(o) {
                depth += 1;
            } else if t.is_punct(c) {
                depth -= 1;
                if depth == 0 {
                    return Ok(j);
                }
            }
        }
        Err(ParseError {
            line: self.tokens[open].line,
            message: format!("unbalanced '{o}'"),
        })
    }

    /// Scan a member header from `self.pos` to the first `;`, `{`, `=` or
    /// `}` outside parentheses.
    fn scan_header(&self) -> Result<(usize, Stop), ParseError> {
        let mut j = self.pos;
        while j < self.tokens.len() {
            let t = &self.tokens[j];
            match t.kind {
                Kind::Punct('(') => j = self.matching(j)? + 1,
                Kind::Punct(';') => return Ok((j, Stop::Semi)),
                Kind::Punct('{') => return Ok((j, Stop::Brace)),
                Kind::Punct('=') => return Ok((j, Stop::Assign)),
                Kind::Punct('}') => return Ok((j, Stop::Close)),
                _ => j += 1,
            }
        }
        Ok((j, Stop::Eof))
    }

    /// Skip from `from` to the `;` ending a field initializer, stepping over
    /// nested brackets (array initializers, lambdas, anonymous classes).
    fn skip_initializer(&self, from: usize) -> Result<usize, ParseError> {
        let mut j = from;
        while j < self.tokens.len() {
            match self.tokens[j].kind {
                Kind::Punct('(') | Kind::Punct('{') | Kind::Punct('[') => j = self.matching(j)? + 1,
                Kind::Punct(';') => return Ok(j),
                Kind::Punct('}') => {
                    return Err(ParseError {
                        line: self.tokens[j].line,
                        message: "unexpected '}' in initializer".into(),
                    })
                }
                _ => j += 1,
            }
        }
        Err(self.error("unterminated initializer"))
    }

    /// Header token indices with annotations removed.
    fn strip_annotations(&self, from: usize, to: usize) -> Result<Vec<usize>, ParseError> {
        let mut kept = Vec::new();
        let mut j = from;
        while j < to {
            let t = &self.tokens[j];
            if t.is_punct('@') && !self.tokens.get(j + 1).is_some_and(|n| n.is_ident("interface")) {
                j += 1;
                // qualified name
                while j < to {
                    if self.tokens[j].ident().is_some() {
                        j += 1;
                        if j < to && self.tokens[j].is_punct('.') {
                            j += 1;
                            continue;
                        }
                    }
                    break;
                }
                if j < to && self.tokens[j].is_punct('(') {
                    j = self.matching(j)? + 1;
                }
            } else {
                kept.push(j);
                j += 1;
            }
        }
        Ok(kept)
    }

    fn type_declaration(&self, header: &[usize]) -> Option<(String, bool)> {
        for (n, &idx) in header.iter().enumerate() {
            let t = &self.tokens[idx];
            if t.is_punct('(') {
                return None;
            }
            let Some(word) = t.ident() else { continue };
            let next = header.get(n + 1).map(|&i| &self.tokens[i]);
            let after = header.get(n + 2).map(|&i| &self.tokens[i]);
            let named = next.and_then(|t| t.ident()).map(str::to_string);
            let prev_dot = n > 0 && self.tokens[header[n - 1]].is_punct('.');
            if prev_dot {
                continue;
            }
            match word {
                "class" | "interface" | "enum" => {
                    if let Some(name) = named {
                        return Some((name, word == "enum"));
                    }
                }
                "record" => {
                    if let Some(name) = named {
                        if after.is_some_and(|t| t.is_punct('(') || t.is_punct('<')) {
                            return Some((name, false));
                        }
                    }
                }
                _ => {}
            }
        }
        None
    }

    /// Parse declarations until the closing brace of the current body (or EOF
    /// at file level).
    fn body(&mut self, scope: Option<&str>, is_enum: bool, braced: bool) -> Result<(), ParseError> {
        if is_enum {
            self.enum_constants()?;
        }
        loop {
            let Some(tok) = self.tokens.get(self.pos) else {
                if braced {
                    return Err(self.error("unexpected end of file inside type body"));
                }
                return Ok(());
            };
            if tok.is_punct('}') {
                if braced {
                    self.pos += 1;
                    return Ok(());
                }
                return Err(self.error("unbalanced '}'"));
            }
            if tok.is_punct(';') {
                self.pos += 1;
                continue;
            }
            self.member(scope)?;
        }
    }

    fn enum_constants(&mut self) -> Result<(), ParseError> {
        while let Some(t) = self.tokens.get(self.pos) {
            match t.kind {
                Kind::Punct(';') => {
                    self.pos += 1;
                    return Ok(());
                }
                Kind::Punct('}') => return Ok(()),
                Kind::Punct('(') | Kind::Punct('{') => self.pos = self.matching(self.pos)? + 1,
                _ => self.pos += 1,
            }
        }
        Err(self.error("unexpected end of file inside enum"))
    }

    fn member(&mut self, scope: Option<&str>) -> Result<(), ParseError> {
        let start = self.pos;
        let (stop_at, stop) = self.scan_header()?;
        let header = self.strip_annotations(start, stop_at)?;

        if let (Stop::Brace, Some((name, is_enum))) = (&stop, self.type_declaration(&header)) {
            let qualified = match scope {
                Some(outer) => format!("{outer}.{name}"),
                None => name,
            };
            self.out.classes.push(ClassDecl {
                name: qualified.clone(),
                line: self.tokens[start].line,
            });
            self.pos = stop_at + 1;
            return self.body(Some(&qualified), is_enum, true);
        }

        match stop {
            Stop::Eof => {
                if scope.is_some() {
                    return Err(self.error("unexpected end of file"));
                }
                self.pos = stop_at;
                return Ok(());
            }
            Stop::Close => {
                if header.is_empty() {
                    self.pos = stop_at;
                    return Ok(());
                }
                return Err(self.error("declaration not terminated before '}'"));
            }
            Stop::Assign => {
                self.pos = self.skip_initializer(stop_at)? + 1;
                return Ok(());
            }
            Stop::Semi | Stop::Brace => {}
        }

        if scope.is_none() {
            // package / import / module declarations
            if let Some(&first) = header.first() {
                if self.tokens[first].is_ident("package") {
                    self.out.package = header[1..]
                        .iter()
                        .filter_map(|&i| match &self.tokens[i].kind {
                            Kind::Ident(s) => Some(s.as_str()),
                            Kind::Punct('.') => Some("."),
                            _ => None,
                        })
                        .collect();
                }
            }
            self.pos = match stop {
                Stop::Brace => self.matching(stop_at)? + 1,
                _ => stop_at + 1,
            };
            return Ok(());
        }

        let open = header.iter().position(|&i| self.tokens[i].is_punct('('));
        let Some(open_n) = open else {
            // field without initializer, initializer block, compact constructor
            self.pos = match stop {
                Stop::Brace => self.matching(stop_at)? + 1,
                _ => stop_at + 1,
            };
            return Ok(());
        };

        let open_idx = header[open_n];
        let name = open_n
            .checked_sub(1)
            .and_then(|n| self.tokens[header[n]].ident())
            .map(str::to_string);
        let Some(name) = name else {
            return Err(ParseError {
                line: self.tokens[open_idx].line,
                message: "member with parameters but no name".into(),
            });
        };
        let close_idx = self.matching(open_idx)?;
        let arg_types = self.parameter_types(open_idx + 1, close_idx)?;

        // `default` values on annotation members may contain braces
        let has_default = (close_idx + 1..stop_at).any(|j| self.tokens[j].is_ident("default"));
        let end = match stop {
            Stop::Brace if has_default => self.skip_initializer(stop_at)?,
            Stop::Brace => self.matching(stop_at)?,
            _ => stop_at,
        };
        if stop_at < close_idx {
            return Err(self.error("malformed method header"));
        }
        self.out.methods.push(MethodDecl {
            class_name: scope.unwrap_or_default().to_string(),
            name,
            arg_types,
            start_line: self.tokens[start].line,
            end_line: self.tokens[end].line,
        });
        self.pos = end + 1;
        Ok(())
    }

    fn parameter_types(&self, from: usize, to: usize) -> Result<Vec<String>, ParseError> {
        let kept = self.strip_annotations(from, to)?;
        let mut params: Vec<Vec<usize>> = vec![Vec::new()];
        let mut angle = 0i32;
        for idx in kept {
            let t = &self.tokens[idx];
            match t.kind {
                Kind::Punct('<') => angle += 1,
                Kind::Punct('>') => angle -= 1,
                Kind::Punct(',') if angle == 0 => {
                    params.push(Vec::new());
                    continue;
                }
                _ => {}
            }
            params.last_mut().expect("non-empty").push(idx);
        }
        let mut out = Vec::new();
        for p in params.into_iter().filter(|p| !p.is_empty()) {
            if let Some(ty) = self.parameter_type(&p) {
                out.push(ty);
            }
        }
        Ok(out)
    }

    /// Render one parameter's type with generics erased. Returns `None` for
    /// receiver parameters (`Foo this`).
    fn parameter_type(&self, toks: &[usize]) -> Option<String> {
        let toks: Vec<&Token> = toks
            .iter()
            .map(|&i| &self.tokens[i])
            .filter(|t| !t.is_ident("final"))
            .collect();
        // last identifier is the parameter name; brackets after it belong to the type
        let name_pos = toks.iter().rposition(|t| t.ident().is_some())?;
        if toks[name_pos].is_ident("this") {
            return None;
        }
        let trailing_dims = toks[name_pos + 1..].iter().filter(|t| t.is_punct('[')).count();
        let mut ty = String::new();
        let mut angle = 0i32;
        for t in &toks[..name_pos] {
            match &t.kind {
                Kind::Punct('<') => angle += 1,
                Kind::Punct('>') => angle -= 1,
                _ if angle > 0 => {}
                Kind::Ident(s) => ty.push_str(s),
                Kind::Punct(c) => ty.push(*c),
                Kind::Literal => {}
            }
        }
        for _ in 0..trailing_dims {
            ty.push_str("[]");
        }
        if ty.is_empty() {
            // lone identifier: no type recorded (should not happen in valid Java)
            return Some(toks[name_pos].ident().unwrap_or_default().to_string());
        }
        Some(ty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outline(src: &str) -> SourceOutline {
        JavaExtractor.extract(src).expect("parse")
    }

    fn sigs(o: &SourceOutline) -> Vec<String> {
        o.methods
            .iter()
            .map(|m| format!("{}.{}({})", m.class_name, m.name, m.arg_types.join(",")))
            .collect()
    }

    #[test]
    fn package_classes_and_overloads() {
        let o = outline(
            "package a.b;\nimport java.util.*;\npublic class C {\n  void f(int x) {}\n  void f(int x, int y) { if (x) { y(); } }\n}\n",
        );
        assert_eq!(o.package, "a.b");
        assert_eq!(o.classes.len(), 1);
        assert_eq!(sigs(&o), vec!["C.f(int)", "C.f(int,int)"]);
        assert_eq!(o.methods[1].start_line, 5);
        assert_eq!(o.methods[1].end_line, 5);
    }

    #[test]
    fn generics_are_erased_and_arrays_kept() {
        let o = outline(
            "class G {\n  public <T extends Comparable<T>> java.util.List<T> sort(java.util.Map<String, List<T>> m, final int[] xs, String... rest, byte b[]) { return null; }\n}",
        );
        assert_eq!(sigs(&o), vec!["G.sort(java.util.Map,int[],String...,byte[])"]);
    }

    #[test]
    fn nested_types_constructors_and_skipped_anonymous_classes() {
        let src = r#"
package p;
public class Outer {
    private Runnable r = new Runnable() { public void run() {} };
    static { init(); }
    { instance(); }
    public Outer(String s) { this.s = s; }
    @Override
    @SuppressWarnings({"unchecked", "rawtypes"})
    public String toString() {
        Object o = new Object() { public String toString() { return "}"; } };
        return "{";
    }
    static class Inner {
        int g() { return '}'; }
        interface Deep { void h(); default int k() { return 1; } }
    }
    enum Color { RED("r") { int x() { return 1; } }, GREEN; Color() {} Color(String s) {} int code() { return 0; } }
}
"#;
        let o = outline(src);
        let names: Vec<_> = o.classes.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["Outer", "Outer.Inner", "Outer.Inner.Deep", "Outer.Color"]);
        assert_eq!(
            sigs(&o),
            vec![
                "Outer.Outer(String)",
                "Outer.toString()",
                "Outer.Inner.g()",
                "Outer.Inner.Deep.h()",
                "Outer.Inner.Deep.k()",
                "Outer.Color.Color()",
                "Outer.Color.Color(String)",
                "Outer.Color.code()",
            ]
        );
        // annotations belong to the declaration
        let ts = &o.methods[1];
        assert_eq!((ts.start_line, ts.end_line), (8, 13));
    }

    #[test]
    fn annotation_types_records_and_text_blocks() {
        let src = "@interface Ann { String[] value() default {}; int n() default 1; }\n\
                   record Point(int x, int y) implements Cmp { Point { check(); } int sum() { return x + y; } }\n\
                   class T { String s = \"\"\"\n  } { \n\"\"\"; void m(@Named(\"a\") final String a, Foo this) {} }";
        let o = outline(src);
        assert_eq!(sigs(&o), vec!["Ann.value()", "Ann.n()", "Point.sum()", "T.m(String)"]);
    }

    #[test]
    fn unbalanced_source_is_an_error() {
        assert!(JavaExtractor.extract("class A { void f() { ").is_err());
        assert!(JavaExtractor.extract("class A { String s = \"abc; }").is_err());
        assert!(JavaExtractor.extract("/* never closed").is_err());
    }

    #[test]
    fn class_literal_is_not_a_type_declaration() {
        let o = outline("class A { Class<?> k = A.class; void f(Class<?> c) { g(A.class); } }");
        assert_eq!(o.classes.len(), 1);
        assert_eq!(sigs(&o), vec!["A.f(Class)"]);
    }
}
