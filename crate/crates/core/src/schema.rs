//! JSON descriptors for functions, measures and endomorphisms.
//!
//! `+inf` is written as the string `"inf"`; a closed tail of a
//! piecewise-linear function is written as slope `"-inf"` (left) or `"inf"`
//! (right).

use std::fmt;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::endo::{Endo1D, EndoMap};
use crate::error::{Error, Result};
use crate::expr::ConvexExpr;
use crate::ext::{ExtReal, Interval};
use crate::func::ConvexFunction;
use crate::gl::{GlEndo, ScaleComposeMap};
use crate::measure::{LineMeasure, OrbitAtom, OrbitMeasure, DEFAULT_ORBIT_POINTS};
use crate::oned::{kernel_decompose, Kernel1D, KernelEndo, KernelGrid, MaEndo, PhiEndo, Zeta};
use crate::pwl::{PwlFunction, Tail};
use crate::radial::RadialEndo;

/// A descriptor that failed to parse, with the JSON path of the offending
/// field and its position in the input.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}, column {}, ", self.line, self.column)?;
        }
        write!(f, "at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for SchemaError {}

/// Parses any descriptor type from JSON text.
pub fn parse<T: DeserializeOwned>(text: &str) -> std::result::Result<T, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let outer = e.path().to_string();
        let inner = e.into_inner();
        let mut message = inner.to_string();
        if inner.line() > 0 {
            let suffix = format!(" at line {} column {}", inner.line(), inner.column());
            if let Some(m) = message.strip_suffix(&suffix) {
                message = m.to_string();
            }
        }
        let (inner_path, message) = split_marked(&message);
        let path = join_path(&outer, &inner_path);
        let (line, column) = if inner.is_syntax() || inner.is_eof() {
            (inner.line(), inner.column())
        } else {
            locate(text, &path).unwrap_or((inner.line(), inner.column()))
        };
        SchemaError { path, line, column, message }
    })
}

// `kind`-tagged objects are decoded through externally tagged mirrors so
// that field paths survive; an error raised inside one carries its path
// between two PATH_MARKs ahead of the message.
const PATH_MARK: char = '\u{1}';

fn marked(path: &str, message: &str) -> String {
    format!("{PATH_MARK}{path}{PATH_MARK}{message}")
}

fn split_marked(message: &str) -> (String, String) {
    if let Some(rest) = message.strip_prefix(PATH_MARK) {
        if let Some((path, msg)) = rest.split_once(PATH_MARK) {
            return (path.to_string(), msg.to_string());
        }
    }
    (".".to_string(), message.to_string())
}

fn join_path(a: &str, b: &str) -> String {
    match (a, b) {
        (".", _) => b.to_string(),
        (_, ".") => a.to_string(),
        (_, _) if b.starts_with('[') => format!("{a}{b}"),
        _ => format!("{a}.{b}"),
    }
}

// Drops the leading variant name from a mirror path.
fn strip_variant(path: &str) -> String {
    match path.find(['.', '[']) {
        Some(i) if path.as_bytes()[i] == b'.' => path[i + 1..].to_string(),
        Some(i) => path[i..].to_string(),
        None => ".".to_string(),
    }
}

fn de_tagged<'de, D: Deserializer<'de>, V: DeserializeOwned>(d: D) -> std::result::Result<V, D::Error> {
    use serde::de::Error as _;
    use serde_json::Value;
    let Value::Object(mut map) = Value::deserialize(d)? else {
        return Err(D::Error::custom("expected an object with a `kind` field"));
    };
    let kind = match map.remove("kind") {
        Some(Value::String(k)) => k,
        Some(_) => return Err(D::Error::custom(marked("kind", "`kind` must be a string"))),
        None => return Err(D::Error::custom("missing field `kind`")),
    };
    let mut ext = serde_json::Map::new();
    ext.insert(kind, Value::Object(map));
    serde_path_to_error::deserialize(Value::Object(ext)).map_err(|e| {
        let local = strip_variant(&e.path().to_string());
        let (inner, msg) = split_marked(&e.into_inner().to_string());
        let local = if msg.starts_with("unknown variant") { "kind".to_string() } else { local };
        D::Error::custom(marked(&join_path(&local, &inner), &msg))
    })
}

/// Line and column (1-based) of the value at `path` in `text`.
fn locate(text: &str, path: &str) -> Option<(usize, usize)> {
    let b = text.as_bytes();
    let ws = |mut i: usize| {
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        i
    };
    let string_end = |i: usize| -> Option<usize> {
        let mut j = i + 1;
        while j < b.len() {
            match b[j] {
                b'\\' => j += 2,
                b'"' => return Some(j + 1),
                _ => j += 1,
            }
        }
        None
    };
    let value_end = |i: usize| -> Option<usize> {
        match *b.get(i)? {
            b'"' => string_end(i),
            b'{' | b'[' => {
                let mut depth = 0usize;
                let mut j = i;
                while j < b.len() {
                    match b[j] {
                        b'"' => {
                            j = string_end(j)?;
                            continue;
                        }
                        b'{' | b'[' => depth += 1,
                        b'}' | b']' => {
                            depth -= 1;
                            if depth == 0 {
                                return Some(j + 1);
                            }
                        }
                        _ => {}
                    }
                    j += 1;
                }
                None
            }
            _ => {
                let mut j = i;
                while j < b.len() && !matches!(b[j], b',' | b'}' | b']') && !b[j].is_ascii_whitespace() {
                    j += 1;
                }
                Some(j)
            }
        }
    };

    let mut i = ws(0);
    let segments = path.split('.').filter(|s| !s.is_empty()).flat_map(|s| {
        let (key, idx) = s.split_once('[').map_or((s, ""), |(k, r)| (k, r));
        let key = (!key.is_empty()).then(|| Err(key.to_string()));
        let idx = idx.split('[').filter_map(|t| t.trim_end_matches(']').parse::<usize>().ok()).map(Ok);
        key.into_iter().chain(idx).collect::<Vec<std::result::Result<usize, String>>>()
    });
    for seg in segments {
        match seg {
            Err(key) => {
                if b.get(i) != Some(&b'{') {
                    return None;
                }
                i = ws(i + 1);
                loop {
                    if b.get(i) != Some(&b'"') {
                        return None;
                    }
                    let end = string_end(i)?;
                    let name = &text[i + 1..end - 1];
                    i = ws(end);
                    if b.get(i) != Some(&b':') {
                        return None;
                    }
                    i = ws(i + 1);
                    if name == key {
                        break;
                    }
                    i = ws(value_end(i)?);
                    if b.get(i) != Some(&b',') {
                        return None;
                    }
                    i = ws(i + 1);
                }
            }
            Ok(n) => {
                if b.get(i) != Some(&b'[') {
                    return None;
                }
                i = ws(i + 1);
                for _ in 0..n {
                    i = ws(value_end(i)?);
                    if b.get(i) != Some(&b',') {
                        return None;
                    }
                    i = ws(i + 1);
                }
            }
        }
    }
    let before = &text[..i];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Some((line, column))
}

/// A real number that may be infinite, written as `"inf"` / `"-inf"` when so.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Num, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Num(v)),
            Raw::Text(t) if t == "inf" => Ok(Num(f64::INFINITY)),
            Raw::Text(t) if t == "-inf" => Ok(Num(f64::NEG_INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number, \"inf\" or \"-inf\", found \"{t}\""
            ))),
        }
    }
}

impl From<ExtReal> for Num {
    fn from(v: ExtReal) -> Num {
        Num(v.to_f64())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PwlTag {
    Pwl,
}

/// A piecewise-linear function; the `"kind": "pwl"` tag is optional where
/// only a piecewise-linear function is accepted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PwlDesc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<PwlTag>,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub slope_left: Num,
    pub slope_right: Num,
}

impl PwlDesc {
    pub fn build(&self) -> Result<PwlFunction> {
        let left = match self.slope_left.0 {
            f64::NEG_INFINITY => Tail::Closed,
            s if s.is_finite() => Tail::Slope(s),
            s => return Err(Error::InvalidParameter(format!("slope_left cannot be {s}"))),
        };
        let right = match self.slope_right.0 {
            f64::INFINITY => Tail::Closed,
            s if s.is_finite() => Tail::Slope(s),
            s => return Err(Error::InvalidParameter(format!("slope_right cannot be {s}"))),
        };
        Ok(PwlFunction::new(self.breakpoints.clone(), self.values.clone(), left, right)?)
    }
}

impl From<&PwlFunction> for PwlDesc {
    fn from(p: &PwlFunction) -> PwlDesc {
        PwlDesc {
            kind: None,
            breakpoints: p.breakpoints().to_vec(),
            values: p.values().to_vec(),
            slope_left: Num(p.left_tail().slope().unwrap_or(f64::NEG_INFINITY)),
            slope_right: Num(p.right_tail().slope().unwrap_or(f64::INFINITY)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FnDesc {
    Pwl(PwlDesc),
    Affine { a: Vec<f64>, b: f64 },
    Quad { c: f64 },
    Norm { c: f64 },
    BallIndicator { r: f64 },
    Pwl1d { direction: Vec<f64>, pwl: PwlDesc },
    Sum { terms: Vec<FnDesc> },
    Max { terms: Vec<FnDesc> },
    Scale { lambda: f64, term: Box<FnDesc> },
    Precompose { matrix: Vec<Vec<f64>>, term: Box<FnDesc> },
}

#[derive(Deserialize)]
#[serde(remote = "FnDesc", rename_all = "snake_case", deny_unknown_fields)]
enum FnDescDe {
    Pwl(PwlDesc),
    Affine { a: Vec<f64>, b: f64 },
    Quad { c: f64 },
    Norm { c: f64 },
    BallIndicator { r: f64 },
    Pwl1d { direction: Vec<f64>, pwl: PwlDesc },
    Sum { terms: Vec<FnDesc> },
    Max { terms: Vec<FnDesc> },
    Scale { lambda: f64, term: Box<FnDesc> },
    Precompose { matrix: Vec<Vec<f64>>, term: Box<FnDesc> },
}

#[derive(Deserialize)]
struct FnVia(#[serde(with = "FnDescDe")] FnDesc);

impl<'de> Deserialize<'de> for FnDesc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<FnDesc, D::Error> {
        de_tagged::<D, FnVia>(d).map(|v| v.0)
    }
}

/// A built function: an exact 1D piecewise-linear function or an expression.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionValue {
    Pwl(PwlFunction),
    Expr(ConvexExpr),
}

impl FunctionValue {
    pub fn as_convex(&self) -> &dyn ConvexFunction {
        match self {
            FunctionValue::Pwl(p) => p,
            FunctionValue::Expr(e) => e,
        }
    }

    pub fn as_pwl(&self) -> Option<&PwlFunction> {
        match self {
            FunctionValue::Pwl(p) => Some(p),
            FunctionValue::Expr(_) => None,
        }
    }
}

impl FnDesc {
    /// A top-level `pwl` builds an exact 1D function; anything else builds
    /// an expression (where `pwl` stands for `pwl1d` with direction `[1]`).
    pub fn build(&self) -> Result<FunctionValue> {
        match self {
            FnDesc::Pwl(p) => Ok(FunctionValue::Pwl(p.build()?)),
            _ => Ok(FunctionValue::Expr(self.build_expr()?)),
        }
    }

    pub fn build_expr(&self) -> Result<ConvexExpr> {
        let terms = |ts: &[FnDesc]| ts.iter().map(FnDesc::build_expr).collect::<Result<Vec<_>>>();
        let e = match self {
            FnDesc::Pwl(p) => ConvexExpr::line(p.build()?),
            FnDesc::Affine { a, b } => ConvexExpr::affine(a.clone(), *b),
            FnDesc::Quad { c } => ConvexExpr::quad(*c),
            FnDesc::Norm { c } => ConvexExpr::norm(*c),
            FnDesc::BallIndicator { r } => ConvexExpr::ball(*r),
            FnDesc::Pwl1d { direction, pwl } => ConvexExpr::pwl1d(pwl.build()?, direction.clone()),
            FnDesc::Sum { terms: ts } => ConvexExpr::Sum(terms(ts)?),
            FnDesc::Max { terms: ts } => ConvexExpr::Max(terms(ts)?),
            FnDesc::Scale { lambda, term } => ConvexExpr::scale(*lambda, term.build_expr()?),
            FnDesc::Precompose { matrix, term } => ConvexExpr::precompose(matrix_from_rows(matrix)?, term.build_expr()?),
        };
        e.validate()?;
        Ok(e)
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter("matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl From<&ConvexExpr> for FnDesc {
    fn from(e: &ConvexExpr) -> FnDesc {
        let terms = |ts: &[ConvexExpr]| ts.iter().map(FnDesc::from).collect();
        match e {
            ConvexExpr::Affine { a, b } => FnDesc::Affine { a: a.clone(), b: *b },
            ConvexExpr::Quad { c } => FnDesc::Quad { c: *c },
            ConvexExpr::Norm { c } => FnDesc::Norm { c: *c },
            ConvexExpr::BallIndicator { r } => FnDesc::BallIndicator { r: *r },
            ConvexExpr::Pwl1d { p, direction } => FnDesc::Pwl1d {
                direction: direction.clone(),
                pwl: p.into(),
            },
            ConvexExpr::Sum(ts) => FnDesc::Sum { terms: terms(ts) },
            ConvexExpr::Max(ts) => FnDesc::Max { terms: terms(ts) },
            ConvexExpr::Scale { lambda, child } => FnDesc::Scale {
                lambda: *lambda,
                term: Box::new(FnDesc::from(child.as_ref())),
            },
            ConvexExpr::Precompose { m, child } => FnDesc::Precompose {
                matrix: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
                term: Box::new(FnDesc::from(child.as_ref())),
            },
        }
    }
}

impl From<&FunctionValue> for FnDesc {
    fn from(f: &FunctionValue) -> FnDesc {
        match f {
            FunctionValue::Pwl(p) => FnDesc::Pwl(p.into()),
            FunctionValue::Expr(e) => e.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineAtomDesc {
    pub s: f64,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineMeasureDesc {
    pub atoms: Vec<LineAtomDesc>,
}

impl LineMeasureDesc {
    pub fn build(&self) -> Result<LineMeasure> {
        LineMeasure::new(self.atoms.iter().map(|a| (a.s, a.w)).collect())
    }
}

impl From<&LineMeasure> for LineMeasureDesc {
    fn from(m: &LineMeasure) -> LineMeasureDesc {
        LineMeasureDesc {
            atoms: m.atoms().iter().map(|&(s, w)| LineAtomDesc { s, w }).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitAtomDesc {
    pub t: f64,
    pub theta: f64,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitMeasureDesc {
    pub n: usize,
    pub atoms: Vec<OrbitAtomDesc>,
}

impl OrbitMeasureDesc {
    pub fn build(&self) -> Result<OrbitMeasure> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| OrbitAtom { t: a.t, theta: a.theta, w: a.w })
            .collect();
        OrbitMeasure::new(self.n, atoms)
    }
}

impl From<&OrbitMeasure> for OrbitMeasureDesc {
    fn from(m: &OrbitMeasure) -> OrbitMeasureDesc {
        OrbitMeasureDesc {
            n: m.n(),
            atoms: m
                .atoms()
                .iter()
                .map(|a| OrbitAtomDesc { t: a.t, theta: a.theta, w: a.w })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationRuleDesc {
    #[default]
    Householder,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelDesc {
    Grid {
        xs: Vec<f64>,
        ys: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZetaDesc {
    Hat { radius: f64 },
}

fn default_points() -> usize {
    DEFAULT_ORBIT_POINTS
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndoDesc {
    Gl {
        c: f64,
        nu: LineMeasureDesc,
        n: usize,
    },
    ScaleCompose {
        lambda: f64,
        mu: f64,
        n: usize,
    },
    Radial {
        mu: OrbitMeasureDesc,
        #[serde(rename = "M", default = "default_points")]
        m: usize,
        #[serde(default)]
        rotation_rule: RotationRuleDesc,
    },
    Kernel {
        #[serde(rename = "A")]
        a: [f64; 2],
        #[serde(rename = "R")]
        r: f64,
        psi: KernelDesc,
    },
    PhiExample {
        phi: PwlDesc,
    },
    MaExample {
        g: PwlDesc,
        zeta: ZetaDesc,
    },
}

#[derive(Deserialize)]
#[serde(remote = "KernelDesc", rename_all = "snake_case", deny_unknown_fields)]
enum KernelDescDe {
    Grid { xs: Vec<f64>, ys: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Deserialize)]
#[serde(remote = "ZetaDesc", rename_all = "snake_case", deny_unknown_fields)]
enum ZetaDescDe {
    Hat { radius: f64 },
}

#[derive(Deserialize)]
#[serde(remote = "EndoDesc", rename_all = "snake_case", deny_unknown_fields)]
enum EndoDescDe {
    Gl {
        c: f64,
        nu: LineMeasureDesc,
        n: usize,
    },
    ScaleCompose {
        lambda: f64,
        mu: f64,
        n: usize,
    },
    Radial {
        mu: OrbitMeasureDesc,
        #[serde(rename = "M", default = "default_points")]
        m: usize,
        #[serde(default)]
        rotation_rule: RotationRuleDesc,
    },
    Kernel {
        #[serde(rename = "A")]
        a: [f64; 2],
        #[serde(rename = "R")]
        r: f64,
        psi: KernelDesc,
    },
    PhiExample {
        phi: PwlDesc,
    },
    MaExample {
        g: PwlDesc,
        zeta: ZetaDesc,
    },
}

#[derive(Deserialize)]
struct KernelVia(#[serde(with = "KernelDescDe")] KernelDesc);

#[derive(Deserialize)]
struct ZetaVia(#[serde(with = "ZetaDescDe")] ZetaDesc);

#[derive(Deserialize)]
struct EndoVia(#[serde(with = "EndoDescDe")] EndoDesc);

impl<'de> Deserialize<'de> for KernelDesc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<KernelDesc, D::Error> {
        de_tagged::<D, KernelVia>(d).map(|v| v.0)
    }
}

impl<'de> Deserialize<'de> for ZetaDesc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<ZetaDesc, D::Error> {
        de_tagged::<D, ZetaVia>(d).map(|v| v.0)
    }
}

impl<'de> Deserialize<'de> for EndoDesc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<EndoDesc, D::Error> {
        de_tagged::<D, EndoVia>(d).map(|v| v.0)
    }
}

/// A built endomorphism of any shipped family.
#[derive(Clone, Debug)]
pub enum Endo {
    Gl(GlEndo),
    ScaleCompose(ScaleComposeMap),
    Radial(RadialEndo),
    Kernel(KernelEndo),
    Phi(PhiEndo),
    Ma(MaEndo),
}

impl EndoDesc {
    pub fn build(&self) -> Result<Endo> {
        Ok(match self {
            EndoDesc::Gl { c, nu, n } => Endo::Gl(GlEndo::new(*c, nu.build()?, *n)?),
            EndoDesc::ScaleCompose { lambda, mu, n } => Endo::ScaleCompose(ScaleComposeMap::new(*lambda, *mu, *n)?),
            EndoDesc::Radial { mu, m, .. } => Endo::Radial(RadialEndo::new(mu.build()?, *m)?),
            EndoDesc::Kernel { a, r, psi } => {
                let KernelDesc::Grid { xs, ys, values } = psi;
                let k = Kernel1D::from_grid(KernelGrid::new(xs.clone(), ys.clone(), values.clone())?);
                Endo::Kernel(KernelEndo(kernel_decompose(&k, Interval::new(a[0], a[1]), *r)?))
            }
            EndoDesc::PhiExample { phi } => Endo::Phi(PhiEndo::new(phi.build()?)?),
            EndoDesc::MaExample { g, zeta } => {
                let ZetaDesc::Hat { radius } = *zeta;
                Endo::Ma(MaEndo::new(g.build()?, Zeta::Hat { radius })?)
            }
        })
    }
}

impl Endo {
    /// Ambient dimension; the kernel and example families act on ℝ.
    pub fn dim(&self) -> usize {
        match self {
            Endo::Gl(e) => e.n(),
            Endo::ScaleCompose(e) => e.n(),
            Endo::Radial(e) => e.measure().n(),
            Endo::Kernel(_) | Endo::Phi(_) | Endo::Ma(_) => 1,
        }
    }

    pub fn as_map(&self) -> Option<&dyn EndoMap> {
        match self {
            Endo::Gl(e) => Some(e),
            Endo::ScaleCompose(e) => Some(e),
            Endo::Radial(e) => Some(e),
            _ => None,
        }
    }

    /// The endomorphism as a map on 1D piecewise-linear functions, when it
    /// acts on ℝ.
    pub fn as_1d(&self) -> Option<&dyn Endo1D> {
        match self {
            Endo::Gl(e) if e.n() == 1 => Some(e),
            Endo::ScaleCompose(e) if e.n() == 1 => Some(e),
            Endo::Kernel(e) => Some(e),
            Endo::Phi(e) => Some(e),
            Endo::Ma(e) => Some(e),
            _ => None,
        }
    }

    /// `Ψ(f)[x]`, routing 1D piecewise-linear inputs through the exact path.
    pub fn eval(&self, f: &FunctionValue, x: &[f64]) -> Result<ExtReal> {
        if let (Some(e), Some(p), [t]) = (self.as_1d(), f.as_pwl(), x) {
            return e.apply_1d(p, *t);
        }
        match self.as_map() {
            Some(e) => e.apply(f.as_convex(), x),
            None => Err(Error::InvalidParameter(
                "this endomorphism acts on 1D piecewise-linear functions only".into(),
            )),
        }
    }

    /// The descriptor of this endomorphism; `None` for kernels that are not
    /// tabulated.
    pub fn descriptor(&self) -> Option<EndoDesc> {
        Some(match self {
            Endo::Gl(e) => EndoDesc::Gl {
                c: e.c(),
                nu: e.nu().into(),
                n: e.n(),
            },
            Endo::ScaleCompose(e) => EndoDesc::ScaleCompose {
                lambda: e.lambda(),
                mu: e.mu(),
                n: e.n(),
            },
            Endo::Radial(e) => EndoDesc::Radial {
                mu: e.measure().into(),
                m: e.points(),
                rotation_rule: RotationRuleDesc::Householder,
            },
            Endo::Kernel(e) => {
                let g = e.0.kernel().grid()?;
                let a = e.0.a();
                EndoDesc::Kernel {
                    a: [a.lo, a.hi],
                    r: e.0.r(),
                    psi: KernelDesc::Grid {
                        xs: g.xs().to_vec(),
                        ys: g.ys().to_vec(),
                        values: g.values().to_vec(),
                    },
                }
            }
            Endo::Phi(e) => EndoDesc::PhiExample { phi: e.phi().into() },
            Endo::Ma(e) => {
                let Zeta::Hat { radius } = e.zeta;
                EndoDesc::MaExample {
                    g: (&e.g).into(),
                    zeta: ZetaDesc::Hat { radius },
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pwl_with_closed_tails() {
        let d: FnDesc = parse(
            r#"{"kind":"pwl","breakpoints":[-1,1],"values":[0,0],"slope_left":"-inf","slope_right":"inf"}"#,
        )
        .unwrap();
        let f = d.build().unwrap();
        let p = f.as_pwl().unwrap();
        assert_eq!(p.eval(2.0), ExtReal::PosInf);
        assert_eq!(p, &PwlFunction::indicator(-1.0, 1.0).unwrap());
        let back = serde_json::to_string(&FnDesc::from(&f)).unwrap();
        assert!(back.contains(r#""slope_left":"-inf""#) && back.contains(r#""slope_right":"inf""#));
    }

    #[test]
    fn nested_pwl_becomes_line_expression() {
        let d: FnDesc = parse(
            r#"{"kind":"sum","terms":[{"kind":"quad","c":1},
                {"kind":"pwl","breakpoints":[0],"values":[0],"slope_left":-1,"slope_right":1}]}"#,
        )
        .unwrap();
        let FunctionValue::Expr(e) = d.build().unwrap() else { panic!() };
        assert_eq!(e.eval(&[-2.0]), ExtReal::Finite(6.0));
    }

    #[test]
    fn errors_carry_path_and_position() {
        let e = parse::<LineMeasureDesc>("{\"atoms\":[\n{\"s\":1,\"w\":\"x\"}]}").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse::<EndoDesc>("{\"kind\":\"gl\",\"c\":1,\n\"nu\":[1,2").unwrap_err();
        assert_eq!(e.line, 2);

        let e = parse::<LineMeasureDesc>(r#"{"atoms":[{"s":1,"w":"x"}]}"#).unwrap_err();
        assert_eq!(e.path, "atoms[0].w");

        assert!(parse::<FnDesc>(r#"{"kind":"cube","c":1}"#).is_err());
    }

    #[test]
    fn nested_tagged_errors_are_located() {
        let text = "{\"kind\": \"sum\", \"terms\": [\n  {\"kind\": \"quad\", \"c\": 1},\n  {\"kind\": \"norm\", \"c\": \"a\"}]}";
        let e = parse::<FnDesc>(text).unwrap_err();
        assert_eq!(e.path, "terms[1].c");
        assert_eq!((e.line, e.column), (3, 25), "{e}");
        assert!(e.message.contains("invalid type"), "{e}");

        let text = r#"{"kind":"kernel","A":[-1,1],"R":1,"psi":{"kind":"grid","xs":[0],"ys":[0],"values":[[0]],"extra":1}}"#;
        let e = parse::<EndoDesc>(text).unwrap_err();
        assert_eq!(e.path, "psi.extra");
        assert!(e.message.contains("unknown field `extra`"), "{e}");

        let e = parse::<EndoDesc>("{\"kind\":\n\"glx\"}").unwrap_err();
        assert_eq!((e.path.as_str(), e.line), ("kind", 2));
        assert!(parse::<EndoDesc>(r#"{"c":1}"#).unwrap_err().message.contains("kind"));
    }

    #[test]
    fn infinite_slope_strings() {
        let d: PwlDesc = parse(r#"{"breakpoints":[0],"values":[0],"slope_left":"inf","slope_right":1}"#).unwrap();
        assert!(d.build().is_err());
        assert!(parse::<PwlDesc>(r#"{"breakpoints":[0],"values":[0],"slope_left":"nan","slope_right":1}"#).is_err());
    }

    #[test]
    fn endo_descriptors_round_trip() {
        let texts = [
            r#"{"kind":"gl","c":0.5,"nu":{"atoms":[{"s":1,"w":1},{"s":-0.5,"w":2}]},"n":2}"#,
            r#"{"kind":"scale_compose","lambda":2,"mu":-1,"n":1}"#,
            r#"{"kind":"radial","mu":{"n":3,"atoms":[{"t":1,"theta":0.3,"w":1}]},"M":16,"rotation_rule":"householder"}"#,
            r#"{"kind":"kernel","A":[-1,1],"R":1,"psi":{"kind":"grid","xs":[-1,1],"ys":[-2,-1,0,1,2],"values":[[0,0,0,0,0],[0,0,0,0,0]]}}"#,
            r#"{"kind":"phi_example","phi":{"kind":"pwl","breakpoints":[0],"values":[1],"slope_left":-1,"slope_right":1}}"#,
            r#"{"kind":"ma_example","g":{"breakpoints":[0],"values":[0],"slope_left":-1,"slope_right":1},"zeta":{"kind":"hat","radius":1}}"#,
        ];
        for t in texts {
            let d: EndoDesc = parse(t).unwrap_or_else(|e| panic!("{t}: {e}"));
            let e = d.build().unwrap();
            let again = e.descriptor().unwrap();
            let text = serde_json::to_string(&again).unwrap();
            let reparsed: EndoDesc = parse(&text).unwrap();
            assert_eq!(reparsed, again);
        }
    }

    #[test]
    fn radial_defaults() {
        let d: EndoDesc = parse(r#"{"kind":"radial","mu":{"n":2,"atoms":[{"t":1,"theta":0,"w":1}]}}"#).unwrap();
        let Endo::Radial(e) = d.build().unwrap() else { panic!() };
        assert_eq!(e.points(), DEFAULT_ORBIT_POINTS);
    }

    #[test]
    fn eval_routes_by_family() {
        let gl: EndoDesc = parse(r#"{"kind":"gl","c":0,"nu":{"atoms":[{"s":1,"w":1}]},"n":1}"#).unwrap();
        let gl = gl.build().unwrap();
        let f = FunctionValue::Pwl(PwlFunction::abs_at(0.0, 1.0));
        assert_eq!(gl.eval(&f, &[0.5]).unwrap(), ExtReal::Finite(0.5));
        let q = FunctionValue::Expr(ConvexExpr::quad(1.0));
        assert_eq!(gl.eval(&q, &[2.0]).unwrap(), ExtReal::Finite(4.0));
        let phi: EndoDesc = parse(
            r#"{"kind":"phi_example","phi":{"breakpoints":[0],"values":[1],"slope_left":-1,"slope_right":1}}"#,
        )
        .unwrap();
        assert!(phi.build().unwrap().eval(&q, &[0.0]).is_err());
    }
}
