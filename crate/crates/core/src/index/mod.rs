//! Repository index: every method's fully qualified name and code snippet.
//!
//! An index is built once per buggy program and is immutable afterwards. The
//! function calls exposed to the agents, the name-repair step and the
//! statement-to-method lifting all read from it.

mod java;

pub use java::JavaExtractor;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;
use walkdir::WalkDir;

/// Version tag written into index files.
pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index root {path} is not a readable directory: {reason}")]
    Root { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed index file: {0}")]
    Format(String),
}

/// Failure to parse one source file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Non-fatal problem met while building an index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWarning {
    pub file: String,
    pub message: String,
}

impl fmt::Display for IndexWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.file, self.message)
    }
}

/// A type declaration found by an extractor. `name` joins nested classes
/// with `.` (`Outer.Inner`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub class_name: String,
    pub name: String,
    pub arg_types: Vec<String>,
    pub start_line: usize,
    pub end_line: usize,
}

/// Declarations recovered from one source file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceOutline {
    pub package: String,
    pub classes: Vec<ClassDecl>,
    pub methods: Vec<MethodDecl>,
}

/// Language front-end used by [`build_index`].
pub trait SourceExtractor: Send + Sync {
    fn handles(&self, path: &Path) -> bool;
    fn extract(&self, source: &str) -> Result<SourceOutline, ParseError>;
}

/// Inclusive, 1-based line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    pub fn contains(&self, line: usize) -> bool {
        self.start <= line && line <= self.end
    }
}

/// One indexed method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodRecord {
    pub path_name: String,
    pub class_name: String,
    pub method_name: String,
    pub arg_types: Vec<String>,
    pub fqn: String,
    pub snippet: String,
    pub file: String,
    pub line_span: LineSpan,
}

impl MethodRecord {
    pub fn new(
        path_name: impl Into<String>,
        class_name: impl Into<String>,
        method_name: impl Into<String>,
        arg_types: Vec<String>,
        file: impl Into<String>,
        line_span: LineSpan,
        snippet: impl Into<String>,
    ) -> Self {
        let path_name = path_name.into();
        let class_name = class_name.into();
        let method_name = method_name.into();
        let fqn = method_fqn(&path_name, &class_name, &method_name, &arg_types);
        MethodRecord {
            path_name,
            class_name,
            method_name,
            arg_types,
            fqn,
            snippet: snippet.into(),
            file: file.into(),
            line_span,
        }
    }

    /// FQN of the owning class.
    pub fn class_fqn(&self) -> String {
        class_fqn(&self.path_name, &self.class_name)
    }

    /// `name(argTypes)` without the class prefix.
    pub fn signature(&self) -> String {
        format!("{}({})", self.method_name, self.arg_types.join(","))
    }
}

pub fn class_fqn(path_name: &str, class_name: &str) -> String {
    if path_name.is_empty() {
        class_name.to_string()
    } else {
        format!("{path_name}.{class_name}")
    }
}

/// `PathName.ClassName.MethodName(ArgTypeList)`.
pub fn method_fqn(path_name: &str, class_name: &str, method_name: &str, arg_types: &[String]) -> String {
    format!(
        "{}.{}({})",
        class_fqn(path_name, class_name),
        method_name,
        arg_types.join(",")
    )
}

/// Components of a method FQN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqnParts {
    pub path_name: String,
    pub class_name: String,
    pub method_name: String,
    pub arg_types: Vec<String>,
}

/// A class known to the index, with or without methods.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassEntry {
    pub path: String,
    #[serde(rename = "class")]
    pub class_name: String,
    pub file: String,
}

/// Immutable, queryable method index.
#[derive(Debug, Clone, Default)]
pub struct RepoIndex {
    records: Vec<MethodRecord>,
    class_entries: Vec<ClassEntry>,
    paths: BTreeSet<String>,
    classes: BTreeMap<String, BTreeSet<String>>,
    by_class: BTreeMap<String, Vec<usize>>,
    by_fqn: HashMap<String, usize>,
    class_fqns: Vec<String>,
    all_method_fqns: Vec<String>,
}

impl PartialEq for RepoIndex {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.class_entries == other.class_entries
    }
}

impl Eq for RepoIndex {}

impl RepoIndex {
    /// Assemble an index from class and method records. Duplicate FQNs keep
    /// their first occurrence and produce a warning.
    pub fn from_records(
        classes: impl IntoIterator<Item = ClassEntry>,
        methods: impl IntoIterator<Item = MethodRecord>,
    ) -> (RepoIndex, Vec<IndexWarning>) {
        let mut index = RepoIndex::default();
        let mut warnings = Vec::new();
        let mut seen_classes = BTreeSet::new();

        for entry in classes {
            let key = class_fqn(&entry.path, &entry.class_name);
            if !seen_classes.insert(key.clone()) {
                warnings.push(IndexWarning {
                    file: entry.file.clone(),
                    message: format!("duplicate class {key}, keeping the first declaration"),
                });
                continue;
            }
            index.add_class(entry);
        }

        for record in methods {
            if index.by_fqn.contains_key(&record.fqn) {
                warnings.push(IndexWarning {
                    file: record.file.clone(),
                    message: format!("duplicate method {}, keeping the first declaration", record.fqn),
                });
                continue;
            }
            let key = record.class_fqn();
            if seen_classes.insert(key.clone()) {
                index.add_class(ClassEntry {
                    path: record.path_name.clone(),
                    class_name: record.class_name.clone(),
                    file: record.file.clone(),
                });
            }
            let at = index.records.len();
            index.by_fqn.insert(record.fqn.clone(), at);
            index.by_class.entry(key).or_default().push(at);
            index.all_method_fqns.push(record.fqn.clone());
            index.records.push(record);
        }
        (index, warnings)
    }

    fn add_class(&mut self, entry: ClassEntry) {
        self.paths.insert(entry.path.clone());
        self.classes
            .entry(entry.path.clone())
            .or_default()
            .insert(entry.class_name.clone());
        self.class_fqns.push(class_fqn(&entry.path, &entry.class_name));
        self.by_class
            .entry(class_fqn(&entry.path, &entry.class_name))
            .or_default();
        self.class_entries.push(entry);
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.class_entries.is_empty()
    }

    pub fn paths(&self) -> &BTreeSet<String> {
        &self.paths
    }

    /// Simple class names declared in `path_name`.
    pub fn classes_of_path(&self, path_name: &str) -> Option<&BTreeSet<String>> {
        self.classes.get(path_name)
    }

    pub fn class_entries(&self) -> &[ClassEntry] {
        &self.class_entries
    }

    /// Class FQNs in declaration order.
    pub fn class_fqns(&self) -> &[String] {
        &self.class_fqns
    }

    pub fn has_class(&self, class_fqn: &str) -> bool {
        self.by_class.contains_key(class_fqn)
    }

    /// Methods of a class in source order.
    pub fn methods_of_class(&self, class_fqn: &str) -> Option<impl Iterator<Item = &MethodRecord>> {
        self.by_class
            .get(class_fqn)
            .map(|ids| ids.iter().map(|&i| &self.records[i]))
    }

    pub fn method(&self, fqn: &str) -> Option<&MethodRecord> {
        self.by_fqn.get(fqn).map(|&i| &self.records[i])
    }

    pub fn methods(&self) -> &[MethodRecord] {
        &self.records
    }

    pub fn all_method_fqns(&self) -> &[String] {
        &self.all_method_fqns
    }

    /// Split a method FQN into its components, using the known package set
    /// to separate path from class (longest matching package wins).
    pub fn parse_fqn(&self, fqn: &str) -> Option<FqnParts> {
        let open = fqn.find('(')?;
        let args = fqn[open + 1..].strip_suffix(')')?;
        let (owner, method) = fqn[..open].rsplit_once('.')?;
        let path = self
            .paths
            .iter()
            .filter(|p| {
                !p.is_empty()
                    && owner.len() > p.len()
                    && owner.starts_with(p.as_str())
                    && owner.as_bytes()[p.len()] == b'.'
            })
            .max_by_key(|p| p.len())
            .cloned()
            .unwrap_or_default();
        let class = if path.is_empty() {
            owner
        } else {
            &owner[path.len() + 1..]
        };
        let arg_types = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|a| a.trim().to_string()).collect()
        };
        Some(FqnParts {
            path_name: path,
            class_name: class.to_string(),
            method_name: method.to_string(),
            arg_types,
        })
    }

    /// The method enclosing `line` of `file`. `file` may be a suffix of the
    /// indexed repo-relative path (matched at a path-component boundary).
    pub fn enclosing_method(&self, file: &str, line: usize) -> Option<&MethodRecord> {
        let file = file.trim_start_matches("./");
        self.records
            .iter()
            .filter(|r| file_matches(&r.file, file) && r.line_span.contains(line))
            .min_by_key(|r| (r.line_span.end - r.line_span.start, r.line_span.start))
    }

    /// Serialize to the versioned JSON index format.
    pub fn to_json(&self) -> String {
        let doc = IndexFile {
            version: INDEX_FORMAT_VERSION,
            classes: Some(self.class_entries.clone()),
            methods: self.records.iter().map(IndexFileMethod::from).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("index serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<RepoIndex, IndexError> {
        let doc: IndexFile = serde_json::from_str(text).map_err(|e| IndexError::Format(e.to_string()))?;
        if doc.version != INDEX_FORMAT_VERSION {
            return Err(IndexError::Format(format!(
                "field `version`: unsupported value {} (expected {INDEX_FORMAT_VERSION})",
                doc.version
            )));
        }
        let mut methods = Vec::with_capacity(doc.methods.len());
        for (i, m) in doc.methods.into_iter().enumerate() {
            if m.start_line == 0 || m.start_line > m.end_line {
                return Err(IndexError::Format(format!(
                    "field `methods[{i}].start_line`: invalid span {}..{}",
                    m.start_line, m.end_line
                )));
            }
            if m.snippet.is_empty() {
                return Err(IndexError::Format(format!("field `methods[{i}].snippet`: empty")));
            }
            if m.name.is_empty() || m.class.is_empty() {
                return Err(IndexError::Format(format!("field `methods[{i}].name`: empty name")));
            }
            methods.push(MethodRecord::new(
                m.path,
                m.class,
                m.name,
                m.arg_types,
                m.file,
                LineSpan {
                    start: m.start_line,
                    end: m.end_line,
                },
                m.snippet,
            ));
        }
        let (index, warnings) = RepoIndex::from_records(doc.classes.unwrap_or_default(), methods);
        if let Some(w) = warnings.first() {
            return Err(IndexError::Format(format!("field `methods`: {}", w.message)));
        }
        Ok(index)
    }
}

fn file_matches(indexed: &str, query: &str) -> bool {
    indexed == query
        || (indexed.ends_with(query) && indexed.as_bytes()[indexed.len() - query.len() - 1] == b'/')
        || (query.ends_with(indexed) && query.as_bytes()[query.len() - indexed.len() - 1] == b'/')
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<ClassEntry>>,
    methods: Vec<IndexFileMethod>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexFileMethod {
    path: String,
    class: String,
    name: String,
    arg_types: Vec<String>,
    file: String,
    start_line: usize,
    end_line: usize,
    snippet: String,
}

impl From<&MethodRecord> for IndexFileMethod {
    fn from(r: &MethodRecord) -> Self {
        IndexFileMethod {
            path: r.path_name.clone(),
            class: r.class_name.clone(),
            name: r.method_name.clone(),
            arg_types: r.arg_types.clone(),
            file: r.file.clone(),
            start_line: r.line_span.start,
            end_line: r.line_span.end,
            snippet: r.snippet.clone(),
        }
    }
}

/// Result of [`build_index`]: the index plus files that were skipped.
#[derive(Debug, Clone)]
pub struct IndexBuild {
    pub index: RepoIndex,
    pub warnings: Vec<IndexWarning>,
}

/// Index every Java source under `root`.
pub fn build_index(root: &Path) -> Result<IndexBuild, IndexError> {
    build_index_with(root, &JavaExtractor)
}

pub fn build_index_with(root: &Path, extractor: &dyn SourceExtractor) -> Result<IndexBuild, IndexError> {
    let meta = fs::metadata(root).map_err(|e| IndexError::Root {
        path: root.to_path_buf(),
        reason: e.to_string(),
    })?;
    if !meta.is_dir() {
        return Err(IndexError::Root {
            path: root.to_path_buf(),
            reason: "not a directory".into(),
        });
    }
    fs::read_dir(root).map_err(|e| IndexError::Root {
        path: root.to_path_buf(),
        reason: e.to_string(),
    })?;

    let mut warnings = Vec::new();
    let mut files = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        match entry {
            Ok(e) if e.file_type().is_file() && extractor.handles(e.path()) => {
                let rel = e
                    .path()
                    .strip_prefix(root)
                    .unwrap_or(e.path())
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                files.push((rel, e.path().to_path_buf()));
            }
            Ok(_) => {}
            Err(e) => warnings.push(IndexWarning {
                file: e.path().map(|p| p.display().to_string()).unwrap_or_default(),
                message: format!("unreadable entry: {e}"),
            }),
        }
    }
    files.sort();

    let sources = files.into_iter().filter_map(|(rel, path)| match fs::read(&path) {
        Ok(bytes) => match String::from_utf8(bytes) {
            Ok(text) => Some((rel, text)),
            Err(_) => {
                warnings.push(IndexWarning {
                    file: rel,
                    message: "not valid UTF-8, skipped".into(),
                });
                None
            }
        },
        Err(e) => {
            warnings.push(IndexWarning {
                file: rel,
                message: format!("read failed: {e}"),
            });
            None
        }
    });
    let sources: Vec<(String, String)> = sources.collect();
    let mut build = index_sources(sources.iter().map(|(f, t)| (f.as_str(), t.as_str())), extractor);
    warnings.append(&mut build.warnings);
    build.warnings = warnings;
    Ok(build)
}

/// Index in-memory sources given as `(repo-relative path, text)` pairs, in
/// the order supplied.
pub fn index_sources<'a>(
    sources: impl IntoIterator<Item = (&'a str, &'a str)>,
    extractor: &dyn SourceExtractor,
) -> IndexBuild {
    let mut warnings = Vec::new();
    let mut classes = Vec::new();
    let mut methods = Vec::new();
    for (file, text) in sources {
        let outline = match extractor.extract(text) {
            Ok(o) => o,
            Err(e) => {
                warnings.push(IndexWarning {
                    file: file.to_string(),
                    message: format!("parse failed, skipped: {e}"),
                });
                continue;
            }
        };
        let lines = LineTable::new(text);
        for c in &outline.classes {
            classes.push(ClassEntry {
                path: outline.package.clone(),
                class_name: c.name.clone(),
                file: file.to_string(),
            });
        }
        for m in outline.methods {
            let span = LineSpan {
                start: m.start_line,
                end: m.end_line,
            };
            methods.push(MethodRecord::new(
                outline.package.clone(),
                m.class_name,
                m.name,
                m.arg_types,
                file,
                span,
                lines.slice(text, span),
            ));
        }
    }
    let (index, mut dupes) = RepoIndex::from_records(classes, methods);
    warnings.append(&mut dupes);
    IndexBuild { index, warnings }
}

struct LineTable {
    starts: Vec<usize>,
}

impl LineTable {
    fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineTable { starts }
    }

    /// Text of lines `span.start..=span.end`, without the final line break.
    fn slice<'t>(&self, text: &'t str, span: LineSpan) -> &'t str {
        let from = self.starts[span.start - 1];
        let to = self.starts.get(span.end).map_or(text.len(), |&s| s - 1);
        let s = &text[from..to];
        s.strip_suffix('\r').unwrap_or(s)
    }
}

pub fn save_index(index: &RepoIndex, file: &Path) -> Result<(), IndexError> {
    fs::write(file, index.to_json()).map_err(|source| IndexError::Io {
        path: file.to_path_buf(),
        source,
    })
}

pub fn load_index(file: &Path) -> Result<RepoIndex, IndexError> {
    let text = fs::read_to_string(file).map_err(|source| IndexError::Io {
        path: file.to_path_buf(),
        source,
    })?;
    RepoIndex::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> RepoIndex {
        index_sources(
            [
                ("org/a/A.java", "package org.a;\nclass A {\n  int f(int x) {\n    return x;\n  }\n  int f(int x, int y) { return x; }\n}\n"),
                ("org/a/b/B.java", "package org.a.b;\nclass B { class C { void g() {} } }\n"),
            ],
            &JavaExtractor,
        )
        .index
    }

    #[test]
    fn overloads_are_distinct_records() {
        let idx = toy();
        assert!(idx.method("org.a.A.f(int)").is_some());
        assert!(idx.method("org.a.A.f(int,int)").is_some());
        assert_eq!(idx.methods_of_class("org.a.A").unwrap().count(), 2);
    }

    #[test]
    fn snippet_is_the_line_range() {
        let idx = toy();
        let m = idx.method("org.a.A.f(int)").unwrap();
        assert_eq!(m.line_span, LineSpan { start: 3, end: 5 });
        assert_eq!(m.snippet, "  int f(int x) {\n    return x;\n  }");
    }

    #[test]
    fn nested_class_names_and_fqn_parsing() {
        let idx = toy();
        assert!(idx.method("org.a.b.B.C.g()").is_some());
        let parts = idx.parse_fqn("org.a.b.B.C.g()").unwrap();
        assert_eq!(parts.path_name, "org.a.b");
        assert_eq!(parts.class_name, "B.C");
        assert!(parts.arg_types.is_empty());
        assert!(idx.classes_of_path("org.a.b").unwrap().contains("B.C"));
    }

    #[test]
    fn duplicates_keep_first_with_warning() {
        let build = index_sources(
            [
                ("x/A.java", "class A { void f() {} }"),
                ("y/A.java", "class A { void f() {} }"),
            ],
            &JavaExtractor,
        );
        assert_eq!(build.index.methods().len(), 1);
        assert_eq!(build.index.methods()[0].file, "x/A.java");
        assert!(!build.warnings.is_empty());
    }

    #[test]
    fn enclosing_method_accepts_path_suffixes() {
        let idx = toy();
        assert_eq!(
            idx.enclosing_method("src/main/java/org/a/A.java", 4).unwrap().fqn,
            "org.a.A.f(int)"
        );
        assert_eq!(idx.enclosing_method("A.java", 4).unwrap().fqn, "org.a.A.f(int)");
        assert!(idx.enclosing_method("org/a/A.java", 2).is_none());
        assert!(idx.enclosing_method("a/A.java", 4).is_some());
        assert!(idx.enclosing_method("xa/A.java", 4).is_none());
    }

    #[test]
    fn truncated_and_invalid_files_are_format_errors() {
        let json = toy().to_json();
        let cut = &json[..json.len() / 2];
        assert!(matches!(RepoIndex::from_json(cut), Err(IndexError::Format(_))));
        let bad = json.replace("\"start_line\": 3", "\"start_line\": 9");
        let err = RepoIndex::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("start_line"), "{err}");
        let wrong_version = json.replacen("\"version\": 1", "\"version\": 7", 1);
        assert!(RepoIndex::from_json(&wrong_version)
            .unwrap_err()
            .to_string()
            .contains("version"));
    }
}
