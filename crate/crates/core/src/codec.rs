//! JSON reader/writer for proof, query, network and property documents.
//!
//! Scalars are always JSON strings (`"3"`, `"-1/2"`, `"0.25"`), never JSON
//! numbers. Indices (`var`, `id`, `b`, `f`, `constraint`) are JSON integers.
//! A vector is either a dense array of scalars or a sparse object
//! `{"size": n, "entries": {"i": "v", ...}}`; tableau rows and split
//! equations may also use the bare sparse form `{"i": "v", ...}`, whose length
//! is the column count. See `docs/format.md`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::encoder::{BoundOverride, BoxProperty, Interval, Layer, Network};
use crate::linalg::{Backend, SparseVector, Tableau, Vector};
use crate::proof::{
    BoundKind, BoundUpdate, Defect, Equation, Lemma, NodeBody, Proof, ProofNode, Query,
    ReluConstraint, Split, VarIndex,
};
use crate::rational::Rational;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{}", DefectList(.0))]
    Structure(Vec<Defect>),
}

struct DefectList<'a>(&'a [Defect]);

impl fmt::Display for DefectList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} structural defect(s)", self.0.len())?;
        for d in self.0 {
            write!(f, "; {d}")?;
        }
        Ok(())
    }
}

impl CodecError {
    /// Whether the failure is in the document itself rather than in the
    /// structure of the decoded proof.
    pub fn is_syntax_or_schema(&self) -> bool {
        !matches!(self, CodecError::Structure(_))
    }
}

fn syntax(text: &str) -> Result<Value, CodecError> {
    serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        CodecError::Syntax {
            line: e.line(),
            column: e.column(),
            message: full.strip_suffix(&suffix).unwrap_or(&full).to_owned(),
        }
    })
}

/// A JSON value with the path that reached it.
#[derive(Clone, Copy)]
struct At<'a> {
    v: &'a Value,
    path: &'a Path<'a>,
}

enum Path<'a> {
    Root,
    Key(&'a Path<'a>, &'a str),
    Index(&'a Path<'a>, usize),
}

impl fmt::Display for Path<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Path::Root => f.write_str("$"),
            Path::Key(p, k) => write!(f, "{p}.{k}"),
            Path::Index(p, i) => write!(f, "{p}[{i}]"),
        }
    }
}

type R<T> = Result<T, CodecError>;

impl<'a> At<'a> {
    fn err<T>(&self, message: impl Into<String>) -> R<T> {
        Err(CodecError::Schema {
            path: self.path.to_string(),
            message: message.into(),
        })
    }

    fn obj(&self) -> R<&'a Map<String, Value>> {
        match self.v {
            Value::Object(m) => Ok(m),
            _ => self.err("expected an object"),
        }
    }

    fn arr(&self) -> R<&'a Vec<Value>> {
        match self.v {
            Value::Array(a) => Ok(a),
            _ => self.err("expected an array"),
        }
    }

    fn only_keys(&self, allowed: &[&str]) -> R<()> {
        for k in self.obj()?.keys() {
            if !allowed.contains(&k.as_str()) {
                return self.err(format!("unknown field {k:?}"));
            }
        }
        Ok(())
    }

    fn str(&self) -> R<&'a str> {
        match self.v {
            Value::String(s) => Ok(s),
            _ => self.err("expected a string"),
        }
    }

    fn index(&self) -> R<usize> {
        match self.v.as_u64() {
            Some(n) => usize::try_from(n).or_else(|_| self.err("index too large")),
            None => self.err("expected a non-negative integer"),
        }
    }

    fn rational(&self) -> R<Rational> {
        match self.v {
            Value::String(s) => s.parse().or_else(|e| self.err(format!("{e}"))),
            Value::Number(_) => self.err("rational scalars must be JSON strings"),
            _ => self.err("expected a rational string"),
        }
    }
}

/// Runs `f` on field `key` of the object at `at`; `None` if absent.
fn opt_field<'a, T>(at: At<'a>, key: &str, f: impl FnOnce(At<'_>) -> R<T>) -> R<Option<T>> {
    match at.obj()?.get(key) {
        Some(v) => {
            let path = Path::Key(at.path, key);
            f(At { v, path: &path }).map(Some)
        }
        None => Ok(None),
    }
}

fn field<'a, T>(at: At<'a>, key: &str, f: impl FnOnce(At<'_>) -> R<T>) -> R<T> {
    match opt_field(at, key, f)? {
        Some(t) => Ok(t),
        None => at.err(format!("missing field {key:?}")),
    }
}

fn each<T>(at: At<'_>, mut f: impl FnMut(At<'_>) -> R<T>) -> R<Vec<T>> {
    at.arr()?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let path = Path::Index(at.path, i);
            f(At { v, path: &path })
        })
        .collect()
}

fn check_version(at: At<'_>) -> R<()> {
    field(at, "schemaVersion", |v| {
        let s = v.str()?;
        if s == SCHEMA_VERSION {
            Ok(())
        } else {
            v.err(format!("unsupported schema version {s:?}"))
        }
    })
}

/// Decoding context shared by one document.
struct Decoder {
    backend: Backend,
    names: Option<Vec<String>>,
    num_cols: usize,
}

impl Decoder {
    /// `implicit_len` is the length of a bare `{"i": "v"}` object; vectors
    /// whose length is not fixed by the schema must use the sized form.
    fn vector(&self, at: At<'_>, implicit_len: Option<usize>) -> R<Vector> {
        match at.v {
            Value::Array(_) => {
                let values = each(at, |e| e.rational())?;
                Ok(Vector::from_values(values, self.backend))
            }
            Value::Object(m) if m.contains_key("size") => {
                at.only_keys(&["size", "entries"])?;
                let len = field(at, "size", |v| v.index())?;
                let entries = field(at, "entries", |e| self.entries(e))?;
                self.sparse(at, len, entries)
            }
            Value::Object(_) => match implicit_len {
                Some(len) => {
                    let entries = self.entries(at)?;
                    self.sparse(at, len, entries)
                }
                None => at.err("sparse vector needs \"size\" and \"entries\" here"),
            },
            _ => at.err("expected a vector (array or sparse object)"),
        }
    }

    fn entries(&self, at: At<'_>) -> R<Vec<(usize, Rational)>> {
        let mut out = Vec::new();
        for (k, v) in at.obj()? {
            let path = Path::Key(at.path, k);
            let e = At { v, path: &path };
            let idx = k
                .parse::<usize>()
                .or_else(|_| e.err("sparse entry key must be a non-negative integer"))?;
            out.push((idx, e.rational()?));
        }
        Ok(out)
    }

    fn sparse(&self, at: At<'_>, len: usize, entries: Vec<(usize, Rational)>) -> R<Vector> {
        match SparseVector::new(len, entries) {
            Ok(s) => Ok(Vector::Sparse(s).to_backend(self.backend)),
            Err(e) => at.err(format!("entry index {} out of range for size {len}", e.found - 1)),
        }
    }

    fn var(&self, at: At<'_>) -> R<VarIndex> {
        match at.v {
            Value::String(name) => match &self.names {
                Some(names) => match names.iter().position(|n| n == name) {
                    Some(i) => Ok(i),
                    None => at.err(format!("unknown variable name {name:?}")),
                },
                None => at.err("variable names used but no \"variables\" list given"),
            },
            _ => at.index(),
        }
    }

    fn bound(&self, at: At<'_>) -> R<BoundUpdate> {
        at.only_keys(&["var", "kind", "value"])?;
        Ok(BoundUpdate {
            var: field(at, "var", |v| self.var(v))?,
            kind: field(at, "kind", |v| match v.str()? {
                "upper" => Ok(BoundKind::Upper),
                "lower" => Ok(BoundKind::Lower),
                other => v.err(format!("bound kind must be \"upper\" or \"lower\", got {other:?}")),
            })?,
            value: field(at, "value", |v| v.rational())?,
        })
    }

    fn split(&self, at: At<'_>) -> R<Split> {
        at.only_keys(&["bounds", "equations"])?;
        Ok(Split {
            bounds: opt_field(at, "bounds", |v| each(v, |b| self.bound(b)))?.unwrap_or_default(),
            equations: opt_field(at, "equations", |v| {
                each(v, |e| {
                    Ok(Equation {
                        row: self.vector(e, Some(self.num_cols))?,
                    })
                })
            })?
            .unwrap_or_default(),
        })
    }

    fn lemma(&self, at: At<'_>) -> R<Lemma> {
        at.only_keys(&["constraint", "causing", "affected", "farkas"])?;
        Ok(Lemma {
            constraint_id: field(at, "constraint", |v| v.index())?,
            causing: field(at, "causing", |v| self.bound(v))?,
            affected: field(at, "affected", |v| self.bound(v))?,
            farkas: field(at, "farkas", |v| self.vector(v, None))?,
        })
    }

    fn node(&self, at: At<'_>) -> R<ProofNode> {
        at.only_keys(&["split", "lemmas", "children", "contradiction"])?;
        let split = opt_field(at, "split", |v| self.split(v))?.unwrap_or_default();
        let lemmas = opt_field(at, "lemmas", |v| each(v, |l| self.lemma(l)))?.unwrap_or_default();
        let children = opt_field(at, "children", |v| each(v, |c| self.node(c)))?;
        let contradiction = opt_field(at, "contradiction", |v| self.vector(v, None))?;
        let body = match (children, contradiction) {
            (Some(c), None) => NodeBody::Children(c),
            (None, Some(w)) => NodeBody::Contradiction(w),
            (Some(_), Some(_)) => return at.err("node has both \"children\" and \"contradiction\""),
            (None, None) => return at.err("node needs \"children\" or \"contradiction\""),
        };
        Ok(ProofNode { split, lemmas, body })
    }

    fn constraint(&self, at: At<'_>) -> R<ReluConstraint> {
        at.only_keys(&["id", "type", "b", "f"])?;
        field(at, "type", |v| match v.str()? {
            "relu" => Ok(()),
            other => v.err(format!("unsupported constraint type {other:?}")),
        })?;
        Ok(ReluConstraint {
            id: field(at, "id", |v| v.index())?,
            b: field(at, "b", |v| self.var(v))?,
            f: field(at, "f", |v| self.var(v))?,
        })
    }
}

const QUERY_KEYS: [&str; 7] = [
    "schemaVersion",
    "numCols",
    "variables",
    "tableau",
    "upperBounds",
    "lowerBounds",
    "constraints",
];

fn decode_query_fields(at: At<'_>, backend: Backend) -> R<(Decoder, Query)> {
    check_version(at)?;
    let names = opt_field(at, "variables", |v| {
        each(v, |n| n.str().map(str::to_owned))
    })?;
    // Column count: explicit, else the first dense tableau row, else the
    // length of the upper bound vector.
    let explicit = opt_field(at, "numCols", |v| v.index())?;
    let from_rows = opt_field(at, "tableau", |v| {
        Ok(v.arr()?
            .iter()
            .find_map(|r| r.as_array().map(Vec::len)))
    })?
    .flatten();
    let mut dec = Decoder {
        backend,
        names,
        num_cols: 0,
    };
    let upper = field(at, "upperBounds", |v| dec.vector(v, None))?;
    dec.num_cols = explicit.or(from_rows).unwrap_or(upper.len());
    let lower = field(at, "lowerBounds", |v| dec.vector(v, None))?;
    let n = dec.num_cols;
    let rows = field(at, "tableau", |v| {
        each(v, |r| {
            let row = dec.vector(r, Some(n))?;
            if row.len() != n {
                return r.err(format!("tableau row has length {}, expected {n}", row.len()));
            }
            Ok(row)
        })
    })?;
    let constraints = field(at, "constraints", |v| each(v, |c| dec.constraint(c)))?;
    let query = Query {
        tableau: Tableau::new(n, rows).expect("row lengths checked"),
        upper,
        lower,
        constraints,
        var_names: dec.names.clone(),
    };
    Ok((dec, query))
}

/// Decodes a proof without running the structural validator.
pub fn decode_proof(text: &str, backend: Backend) -> R<Proof> {
    let v = syntax(text)?;
    let at = At {
        v: &v,
        path: &Path::Root,
    };
    let mut keys = QUERY_KEYS.to_vec();
    keys.push("root");
    at.only_keys(&keys)?;
    let (dec, query) = decode_query_fields(at, backend)?;
    let root = field(at, "root", |r| dec.node(r))?;
    Ok(query.into_proof(root))
}

/// Decodes a proof and rejects it if it has structural defects.
pub fn parse_proof(text: &str, backend: Backend) -> R<Proof> {
    let p = decode_proof(text, backend)?;
    let defects = p.validate_structure();
    if defects.is_empty() {
        Ok(p)
    } else {
        Err(CodecError::Structure(defects))
    }
}

pub fn parse_query(text: &str, backend: Backend) -> R<Query> {
    let v = syntax(text)?;
    let at = At {
        v: &v,
        path: &Path::Root,
    };
    at.only_keys(&QUERY_KEYS)?;
    let (_, q) = decode_query_fields(at, backend)?;
    let n = q.num_cols();
    for (which, v) in [("upperBounds", &q.upper), ("lowerBounds", &q.lower)] {
        if v.len() != n {
            return Err(CodecError::Schema {
                path: format!("$.{which}"),
                message: format!("length {}, expected {n}", v.len()),
            });
        }
    }
    for i in 0..n {
        if *q.lower.get(i) > *q.upper.get(i) {
            return Err(CodecError::Schema {
                path: format!("$.lowerBounds[{i}]"),
                message: "lower bound exceeds upper bound".into(),
            });
        }
    }
    if let Some(names) = &q.var_names {
        if names.len() != n {
            return Err(CodecError::Schema {
                path: "$.variables".into(),
                message: format!("{} names for {n} columns", names.len()),
            });
        }
    }
    for (i, c) in q.constraints.iter().enumerate() {
        if c.b >= n || c.f >= n || c.b == c.f {
            return Err(CodecError::Schema {
                path: format!("$.constraints[{i}]"),
                message: "b and f must be distinct columns in range".into(),
            });
        }
    }
    Ok(q)
}

pub fn parse_network(text: &str) -> R<Network> {
    let v = syntax(text)?;
    let at = At {
        v: &v,
        path: &Path::Root,
    };
    at.only_keys(&["schemaVersion", "inputSize", "layers"])?;
    check_version(at)?;
    let input_size = field(at, "inputSize", |v| v.index())?;
    let layers = field(at, "layers", |v| {
        each(v, |l| {
            l.only_keys(&["weights", "biases"])?;
            Ok(Layer {
                weights: field(l, "weights", |w| each(w, |row| each(row, |e| e.rational())))?,
                biases: field(l, "biases", |b| each(b, |e| e.rational()))?,
            })
        })
    })?;
    Network::new(input_size, layers).map_err(|e| CodecError::Schema {
        path: "$.layers".into(),
        message: e.to_string(),
    })
}

pub fn parse_property(text: &str) -> R<BoxProperty> {
    let v = syntax(text)?;
    let at = At {
        v: &v,
        path: &Path::Root,
    };
    at.only_keys(&["schemaVersion", "inputBounds", "outputBounds", "boundOverrides"])?;
    check_version(at)?;
    let interval = |i: At<'_>| -> R<Interval> {
        i.only_keys(&["lower", "upper"])?;
        let iv = Interval::new(
            field(i, "lower", |v| v.rational())?,
            field(i, "upper", |v| v.rational())?,
        );
        if iv.lower > iv.upper {
            return i.err("lower bound exceeds upper bound");
        }
        Ok(iv)
    };
    let inputs = field(at, "inputBounds", |v| each(v, interval))?;
    let outputs = field(at, "outputBounds", |v| each(v, interval))?;
    let overrides = opt_field(at, "boundOverrides", |v| {
        each(v, |o| {
            o.only_keys(&["var", "lower", "upper"])?;
            Ok(BoundOverride {
                var: field(o, "var", |n| n.str().map(str::to_owned))?,
                lower: opt_field(o, "lower", |x| x.rational())?,
                upper: opt_field(o, "upper", |x| x.rational())?,
            })
        })
    })?
    .unwrap_or_default();
    Ok(BoxProperty {
        inputs,
        outputs,
        overrides,
    })
}

/// Vector layout used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VectorStyle {
    #[default]
    Dense,
    Sparse,
}

fn scalar(r: &Rational) -> Value {
    Value::String(r.to_string())
}

fn obj<const N: usize>(pairs: [(&str, Value); N]) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect())
}

fn vector_value(v: &Vector, style: VectorStyle) -> Value {
    match style {
        VectorStyle::Dense => Value::Array(v.to_values().iter().map(scalar).collect()),
        VectorStyle::Sparse => obj([
            ("size", Value::from(v.len())),
            ("entries", entries_value(v)),
        ]),
    }
}

fn entries_value(v: &Vector) -> Value {
    Value::Object(
        v.nonzeros()
            .map(|(i, x)| (i.to_string(), scalar(x)))
            .collect(),
    )
}

/// Rows whose length is the column count; sparse ones use the bare form.
fn row_value(v: &Vector, style: VectorStyle) -> Value {
    match style {
        VectorStyle::Dense => vector_value(v, style),
        VectorStyle::Sparse => entries_value(v),
    }
}

fn bound_value(b: &BoundUpdate) -> Value {
    obj([
        ("var", Value::from(b.var)),
        ("kind", Value::from(b.kind.name())),
        ("value", scalar(&b.value)),
    ])
}

fn node_value(n: &ProofNode, style: VectorStyle) -> Value {
    let mut m = Map::new();
    if !n.split.is_empty() {
        m.insert(
            "split".into(),
            obj([
                ("bounds", Value::Array(n.split.bounds.iter().map(bound_value).collect())),
                (
                    "equations",
                    Value::Array(
                        n.split
                            .equations
                            .iter()
                            .map(|e| row_value(&e.row, style))
                            .collect(),
                    ),
                ),
            ]),
        );
    }
    if !n.lemmas.is_empty() {
        m.insert(
            "lemmas".into(),
            Value::Array(
                n.lemmas
                    .iter()
                    .map(|l| {
                        obj([
                            ("constraint", Value::from(l.constraint_id)),
                            ("causing", bound_value(&l.causing)),
                            ("affected", bound_value(&l.affected)),
                            ("farkas", vector_value(&l.farkas, style)),
                        ])
                    })
                    .collect(),
            ),
        );
    }
    match &n.body {
        NodeBody::Children(c) => {
            m.insert(
                "children".into(),
                Value::Array(c.iter().map(|c| node_value(c, style)).collect()),
            );
        }
        NodeBody::Contradiction(w) => {
            m.insert("contradiction".into(), vector_value(w, style));
        }
    }
    Value::Object(m)
}

fn query_value(q: &Query, style: VectorStyle) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schemaVersion".into(), Value::from(SCHEMA_VERSION));
    m.insert("numCols".into(), Value::from(q.num_cols()));
    if let Some(names) = &q.var_names {
        m.insert("variables".into(), Value::from(names.clone()));
    }
    m.insert(
        "tableau".into(),
        Value::Array(q.tableau.rows().iter().map(|r| row_value(r, style)).collect()),
    );
    m.insert("upperBounds".into(), vector_value(&q.upper, style));
    m.insert("lowerBounds".into(), vector_value(&q.lower, style));
    m.insert(
        "constraints".into(),
        Value::Array(
            q.constraints
                .iter()
                .map(|c| {
                    obj([
                        ("id", Value::from(c.id)),
                        ("type", Value::from("relu")),
                        ("b", Value::from(c.b)),
                        ("f", Value::from(c.f)),
                    ])
                })
                .collect(),
        ),
    );
    m
}

pub fn proof_to_value(p: &Proof, style: VectorStyle) -> Value {
    let q = Query {
        tableau: p.tableau.clone(),
        upper: p.upper.clone(),
        lower: p.lower.clone(),
        constraints: p.constraints.clone(),
        var_names: p.var_names.clone(),
    };
    let mut m = query_value(&q, style);
    m.insert("root".into(), node_value(&p.root, style));
    Value::Object(m)
}

pub fn serialize_proof(p: &Proof, style: VectorStyle) -> String {
    write_value(&proof_to_value(p, style))
}

pub fn serialize_query(q: &Query, style: VectorStyle) -> String {
    write_value(&Value::Object(query_value(q, style)))
}

pub fn serialize_network(net: &Network) -> String {
    let layers = net
        .layers()
        .iter()
        .map(|l| {
            obj([
                (
                    "weights",
                    Value::Array(
                        l.weights
                            .iter()
                            .map(|row| Value::Array(row.iter().map(scalar).collect()))
                            .collect(),
                    ),
                ),
                ("biases", Value::Array(l.biases.iter().map(scalar).collect())),
            ])
        })
        .collect();
    write_value(&obj([
        ("schemaVersion", Value::from(SCHEMA_VERSION)),
        ("inputSize", Value::from(net.input_size())),
        ("layers", Value::Array(layers)),
    ]))
}

pub fn serialize_property(p: &BoxProperty) -> String {
    let iv = |i: &Interval| obj([("lower", scalar(&i.lower)), ("upper", scalar(&i.upper))]);
    let mut m = Map::new();
    m.insert("schemaVersion".into(), Value::from(SCHEMA_VERSION));
    m.insert("inputBounds".into(), Value::Array(p.inputs.iter().map(iv).collect()));
    m.insert("outputBounds".into(), Value::Array(p.outputs.iter().map(iv).collect()));
    if !p.overrides.is_empty() {
        let overrides = p
            .overrides
            .iter()
            .map(|o| {
                let mut m = Map::new();
                m.insert("var".into(), Value::from(o.var.clone()));
                if let Some(l) = &o.lower {
                    m.insert("lower".into(), scalar(l));
                }
                if let Some(u) = &o.upper {
                    m.insert("upper".into(), scalar(u));
                }
                Value::Object(m)
            })
            .collect();
        m.insert("boundOverrides".into(), Value::Array(overrides));
    }
    write_value(&Value::Object(m))
}

/// Indented JSON with sorted keys; arrays of scalars stay on one line.
pub fn write_value(v: &Value) -> String {
    let mut out = String::new();
    write_indented(v, 0, &mut out);
    out.push('\n');
    out
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.iter().all(|e| !e.is_array() && !e.is_object()),
        Value::Object(m) => m.values().all(|e| !e.is_array() && !e.is_object()),
        _ => true,
    }
}

fn write_indented(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth + 1);
    match v {
        _ if is_flat(v) => write_flat(v, out),
        Value::Array(a) => {
            out.push('[');
            for (i, e) in a.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                out.push_str(&pad);
                write_indented(e, depth + 1, out);
            }
            let _ = write!(out, "\n{}]", "  ".repeat(depth));
        }
        Value::Object(m) => {
            out.push('{');
            let sorted: BTreeMap<&String, &Value> = m.iter().collect();
            for (i, (k, e)) in sorted.into_iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                out.push_str(&pad);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_indented(e, depth + 1, out);
            }
            let _ = write!(out, "\n{}}}", "  ".repeat(depth));
        }
        _ => unreachable!("scalars are flat"),
    }
}

fn write_flat(v: &Value, out: &mut String) {
    match v {
        Value::Array(a) => {
            out.push('[');
            for (i, e) in a.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&e.to_string());
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            let sorted: BTreeMap<&String, &Value> = m.iter().collect();
            for (i, (k, e)) in sorted.into_iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: {}", Value::String(k.clone()), e);
            }
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worked_example;

    fn fig2_text() -> String {
        serialize_proof(&worked_example::proof(Backend::Dense), VectorStyle::Dense)
    }

    #[test]
    fn fig2_round_trip() {
        for style in [VectorStyle::Dense, VectorStyle::Sparse] {
            for b in Backend::ALL {
                let p = worked_example::proof(b);
                let text = serialize_proof(&p, style);
                let back = parse_proof(&text, b).unwrap();
                assert_eq!(back, p);
                assert_eq!(serialize_proof(&back, style), text);
            }
        }
        let p = parse_proof(&fig2_text(), Backend::Dense).unwrap();
        assert_eq!((p.tableau.num_rows(), p.num_cols(), p.constraints.len()), (4, 9, 3));
        assert_eq!(p.root.lemmas.len(), 1);
        assert_eq!(p.root.count_leaves(), 2);
    }

    #[test]
    fn dense_and_sparse_documents_agree() {
        let dense = serialize_proof(&worked_example::proof(Backend::Dense), VectorStyle::Dense);
        let sparse = serialize_proof(&worked_example::proof(Backend::Dense), VectorStyle::Sparse);
        assert_ne!(dense, sparse);
        assert_eq!(
            parse_proof(&dense, Backend::Sparse).unwrap(),
            parse_proof(&sparse, Backend::Dense).unwrap()
        );
    }

    #[test]
    fn decimals_equal_fractions() {
        let text = fig2_text().replacen("\"-1/1\"", "\"-1.0\"", 1);
        assert_ne!(text, fig2_text());
        let a = parse_proof(&text, Backend::Dense).unwrap();
        assert_eq!(a, worked_example::proof(Backend::Dense));
        let half = fig2_text().replacen("\"2/1\"", "\"0.5\"", 1);
        let b = parse_proof(&half, Backend::Dense).unwrap();
        let c = parse_proof(&fig2_text().replacen("\"2/1\"", "\"1/2\"", 1), Backend::Dense).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn syntax_errors_carry_position() {
        for text in ["", "{", "{\n  \"a\": ,\n}"] {
            match decode_proof(text, Backend::Dense) {
                Err(CodecError::Syntax { line, column, .. }) => assert!(line >= 1 && column <= 10),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    fn schema_path(text: &str) -> String {
        match decode_proof(text, Backend::Dense) {
            Err(CodecError::Schema { path, .. }) => path,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_the_path() {
        let base = fig2_text();
        assert_eq!(schema_path(&base.replace("\"schemaVersion\": \"1\"", "\"schemaVersion\": \"2\"")), "$.schemaVersion");
        assert_eq!(schema_path(&base.replace("\"kind\": \"upper\"", "\"kind\": \"up\"")), "$.root.lemmas[0].causing.kind");
        assert_eq!(schema_path(&base.replacen("\"2/1\"", "2", 1)), "$.lowerBounds[8]");
        assert_eq!(schema_path(&base.replace("\"type\": \"relu\"", "\"type\": \"maxpool\"")), "$.constraints[0].type");
        assert_eq!(schema_path(&base.replace("\"contradiction\"", "\"contra\"")), "$.root.children[0]");
        assert_eq!(schema_path(&base.replace("\"lemmas\"", "\"lemma\"")), "$.root");
        assert_eq!(schema_path(&base.replacen("\"0/1\"", "\"zero\"", 1)), "$.lowerBounds[5]");
    }

    #[test]
    fn structural_defects_survive_decoding() {
        let p = worked_example::proof(Backend::Dense);
        let mut bad = p.clone();
        bad.root.lemmas[0].constraint_id = 99;
        let text = serialize_proof(&bad, VectorStyle::Dense);
        assert_eq!(decode_proof(&text, Backend::Dense).unwrap(), bad);
        match parse_proof(&text, Backend::Dense) {
            Err(CodecError::Structure(d)) => assert_eq!(d, bad.validate_structure()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn variable_names_resolve() {
        let text = fig2_text().replacen("\"var\": 4", "\"var\": \"b3\"", 1);
        assert_ne!(text, fig2_text());
        assert_eq!(
            parse_proof(&text, Backend::Dense).unwrap(),
            worked_example::proof(Backend::Dense)
        );
        let text = fig2_text().replacen("\"var\": 4", "\"var\": \"b9\"", 1);
        assert!(matches!(decode_proof(&text, Backend::Dense), Err(CodecError::Schema { .. })));
    }

    #[test]
    fn query_documents() {
        let q = worked_example::query();
        let text = serialize_query(&q, VectorStyle::Dense);
        assert_eq!(parse_query(&text, Backend::Dense).unwrap(), q);
        let crossed = text.replacen("\"-1/1\"", "\"5\"", 1);
        match parse_query(&crossed, Backend::Dense) {
            Err(CodecError::Schema { path, .. }) => assert_eq!(path, "$.lowerBounds[0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn network_and_property_documents() {
        let net = worked_example::network();
        assert_eq!(parse_network(&serialize_network(&net)).unwrap(), net);
        assert_eq!(net.input_size(), 2);
        assert_eq!(net.num_relus(), 3);
        assert_eq!(net.output_size(), 1);
        let prop = worked_example::property();
        assert_eq!(parse_property(&serialize_property(&prop)).unwrap(), prop);
        let bad = serialize_property(&prop).replacen("\"-1/1\"", "\"7\"", 1);
        assert!(matches!(parse_property(&bad), Err(CodecError::Schema { .. })));
    }

    #[test]
    fn output_is_sorted_and_stable() {
        let text = fig2_text();
        let keys: Vec<usize> = ["\"constraints\"", "\"lowerBounds\"", "\"numCols\"", "\"root\"", "\"schemaVersion\"", "\"tableau\"", "\"upperBounds\"", "\"variables\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("[\"2/1\", \"0/1\", \"-1/1\""));
    }
}
