//! Exact expression trees over named coordinates.
//!
//! Expressions are built from constants, coordinates, sums, products,
//! integer powers and sine/cosine. They support exact symbolic partial
//! differentiation, IEEE-double evaluation at a [`Point`], and a seeded
//! sampling-based zero test ([`Expr::is_zero`]) that stands in for
//! canonical simplification everywhere in this crate.
//!
//! Children are reference-counted and shared, so iterated Lie brackets
//! build DAGs rather than exponentially duplicated trees; evaluation and
//! differentiation memoize shared nodes to stay proportional to the DAG
//! size.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

/// Default number of sample points used by [`Expr::is_zero`].
pub const DEFAULT_SAMPLES: usize = 25;
/// Default absolute tolerance for zero tests.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
/// Default sampling range for unbounded coordinates.
pub const DEFAULT_RANGE: (f64, f64) = (-2.0, 2.0);
/// Sampling range used for periodic (circle-valued) coordinates.
pub const PERIODIC_RANGE: (f64, f64) = (0.0, std::f64::consts::TAU);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("no value supplied for coordinate `{0}`")]
    MissingCoordinate(String),
    #[error("non-finite value supplied for coordinate `{0}`")]
    NonFiniteCoordinate(String),
}

/// An assignment of real values to coordinate names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Point {
    values: BTreeMap<String, f64>,
}

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.values.insert(name.into(), value);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl FromIterator<(String, f64)> for Point {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        Point {
            values: iter.into_iter().collect(),
        }
    }
}

/// SplitMix64: tiny deterministic generator so that every seeded verdict in
/// the crate is reproducible bit-for-bit, independent of external crates.
#[derive(Debug, Clone)]
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub(crate) fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub(crate) fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Seeded sampling plan: how many points to draw and from which
/// per-coordinate ranges. Identical specs produce identical points.
#[derive(Debug, Clone)]
pub struct SampleSpec {
    seed: u64,
    samples: usize,
    ranges: BTreeMap<String, (f64, f64)>,
    default_range: (f64, f64),
}

impl SampleSpec {
    pub fn new(seed: u64) -> Self {
        SampleSpec {
            seed,
            samples: DEFAULT_SAMPLES,
            ranges: BTreeMap::new(),
            default_range: DEFAULT_RANGE,
        }
    }

    pub fn samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_range(mut self, name: impl Into<String>, lo: f64, hi: f64) -> Self {
        self.ranges.insert(name.into(), (lo, hi));
        self
    }

    pub fn with_default_range(mut self, lo: f64, hi: f64) -> Self {
        self.default_range = (lo, hi);
        self
    }

    /// A spec drawing from the same ranges but an independent stream.
    pub fn reseeded(&self, salt: u64) -> Self {
        let mut out = self.clone();
        out.seed = self
            .seed
            .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1);
        out
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    pub fn range_of(&self, name: &str) -> (f64, f64) {
        self.ranges.get(name).copied().unwrap_or(self.default_range)
    }

    /// Draws `self.sample_count()` points assigning values to `coords`.
    /// Coordinates are consumed in sorted order so the stream does not
    /// depend on caller-side ordering.
    pub fn points<'a, I>(&self, coords: I) -> Vec<Point>
    where
        I: IntoIterator<Item = &'a str>,
    {
        self.points_n(coords, self.samples)
    }

    pub fn points_n<'a, I>(&self, coords: I, n: usize) -> Vec<Point>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let sorted: BTreeSet<&str> = coords.into_iter().collect();
        let mut rng = SplitMix64::new(self.seed);
        (0..n)
            .map(|_| {
                let mut p = Point::new();
                for name in &sorted {
                    let (lo, hi) = self.range_of(name);
                    p.insert(*name, lo + rng.next_f64() * (hi - lo));
                }
                p
            })
            .collect()
    }
}

/// Exact expression tree with shared (reference-counted) children.
/// Constructors fold constants and prune structural zeros/ones; no further
/// simplification is attempted.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(Arc<str>),
    Neg(Arc<Expr>),
    Add(Arc<Vec<Expr>>),
    Mul(Arc<Vec<Expr>>),
    /// Integer power with exponent >= 1.
    Pow(Arc<Expr>, u32),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
}

/// Identity of a shared node for memoized traversals: discriminant,
/// payload pointer and the power exponent. Nodes agreeing on all three are
/// semantically identical.
type ShareKey = (u8, usize, u32);

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn coord(name: impl AsRef<str>) -> Expr {
        Expr::Coord(Arc::from(name.as_ref()))
    }

    pub fn sin(arg: Expr) -> Expr {
        match arg {
            Expr::Const(c) => Expr::Const(c.sin()),
            other => Expr::Sin(Arc::new(other)),
        }
    }

    pub fn cos(arg: Expr) -> Expr {
        match arg {
            Expr::Const(c) => Expr::Const(c.cos()),
            other => Expr::Cos(Arc::new(other)),
        }
    }

    /// Integer power. Exponent 0 collapses to the constant 1, exponent 1 to
    /// the base itself, so stored nodes always satisfy `exponent >= 2`.
    pub fn powi(base: Expr, exponent: u32) -> Expr {
        match (base, exponent) {
            (_, 0) => Expr::one(),
            (b, 1) => b,
            (Expr::Const(c), k) => Expr::Const(c.powi(k as i32)),
            (b, k) => Expr::Pow(Arc::new(b), k),
        }
    }

    pub fn negate(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => (*inner).clone(),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    /// n-ary sum; flattens nested sums, folds constants, drops zeros.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut acc = 0.0;
        let mut stack = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t {
                Expr::Const(c) => acc += c,
                Expr::Add(inner) => {
                    for e in inner.iter().rev() {
                        stack.push(e.clone());
                    }
                }
                other => flat.push(other),
            }
        }
        if acc != 0.0 {
            flat.push(Expr::Const(acc));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::Add(Arc::new(flat)),
        }
    }

    /// n-ary product; flattens nested products, folds constants,
    /// annihilates on zero, drops unit factors.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut acc = 1.0;
        let mut stack = factors;
        stack.reverse();
        while let Some(f) = stack.pop() {
            match f {
                Expr::Const(c) => {
                    if c == 0.0 {
                        return Expr::zero();
                    }
                    acc *= c;
                }
                Expr::Mul(inner) => {
                    for e in inner.iter().rev() {
                        stack.push(e.clone());
                    }
                }
                other => flat.push(other),
            }
        }
        if acc != 1.0 {
            flat.insert(0, Expr::Const(acc));
        }
        match flat.len() {
            0 => Expr::one(),
            1 => flat.pop().unwrap(),
            _ => Expr::Mul(Arc::new(flat)),
        }
    }

    /// Structural zero check (constant 0), not a semantic one.
    pub fn is_const_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Memo key for nodes whose payload is shared; `None` for leaves and
    /// unshared nodes (memoization would only add overhead there).
    fn share_key(&self) -> Option<ShareKey> {
        match self {
            Expr::Const(_) | Expr::Coord(_) => None,
            Expr::Neg(e) => shared_ptr(e).map(|p| (1, p, 0)),
            Expr::Pow(e, k) => shared_ptr(e).map(|p| (2, p, *k)),
            Expr::Sin(e) => shared_ptr(e).map(|p| (3, p, 0)),
            Expr::Cos(e) => shared_ptr(e).map(|p| (4, p, 0)),
            Expr::Add(v) => shared_vec_ptr(v).map(|p| (5, p, 0)),
            Expr::Mul(v) => shared_vec_ptr(v).map(|p| (6, p, 0)),
        }
    }

    /// True if the coordinate appears anywhere in the expression.
    pub fn contains(&self, name: &str) -> bool {
        let mut visited = HashSet::new();
        self.contains_inner(name, &mut visited)
    }

    fn contains_inner(&self, name: &str, visited: &mut HashSet<ShareKey>) -> bool {
        if let Some(key) = self.share_key() {
            if !visited.insert(key) {
                // Already searched this shared node without finding `name`
                // (a hit would have returned true up the stack).
                return false;
            }
        }
        match self {
            Expr::Const(_) => false,
            Expr::Coord(n) => n.as_ref() == name,
            Expr::Neg(e) | Expr::Sin(e) | Expr::Cos(e) | Expr::Pow(e, _) => {
                e.contains_inner(name, visited)
            }
            Expr::Add(ts) | Expr::Mul(ts) => ts.iter().any(|t| t.contains_inner(name, visited)),
        }
    }

    /// All coordinate names appearing in the expression.
    pub fn coordinates(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        let mut visited = HashSet::new();
        self.collect_coords(&mut out, &mut visited);
        out
    }

    fn collect_coords<'a>(&'a self, out: &mut BTreeSet<&'a str>, visited: &mut HashSet<ShareKey>) {
        if let Some(key) = self.share_key() {
            if !visited.insert(key) {
                return;
            }
        }
        match self {
            Expr::Const(_) => {}
            Expr::Coord(n) => {
                out.insert(n.as_ref());
            }
            Expr::Neg(e) | Expr::Sin(e) | Expr::Cos(e) | Expr::Pow(e, _) => {
                e.collect_coords(out, visited)
            }
            Expr::Add(ts) | Expr::Mul(ts) => {
                for t in ts.iter() {
                    t.collect_coords(out, visited);
                }
            }
        }
    }

    /// Number of distinct nodes reachable from this expression (DAG size).
    pub fn size(&self) -> usize {
        let mut visited = HashSet::new();
        self.size_inner(&mut visited)
    }

    fn size_inner(&self, visited: &mut HashSet<ShareKey>) -> usize {
        if let Some(key) = self.share_key() {
            if !visited.insert(key) {
                return 0;
            }
        }
        match self {
            Expr::Const(_) | Expr::Coord(_) => 1,
            Expr::Neg(e) | Expr::Sin(e) | Expr::Cos(e) | Expr::Pow(e, _) => {
                1 + e.size_inner(visited)
            }
            Expr::Add(ts) | Expr::Mul(ts) => {
                1 + ts.iter().map(|t| t.size_inner(visited)).sum::<usize>()
            }
        }
    }

    /// Exact partial derivative with respect to `q`. Coordinates absent
    /// from the expression yield the zero constant. Shared nodes are
    /// differentiated once and their derivatives shared in the output.
    pub fn differentiate(&self, q: &str) -> Expr {
        let mut memo = HashMap::new();
        self.diff_inner(q, &mut memo)
    }

    fn diff_inner(&self, q: &str, memo: &mut HashMap<ShareKey, Expr>) -> Expr {
        let key = self.share_key();
        if let Some(k) = key {
            if let Some(hit) = memo.get(&k) {
                return hit.clone();
            }
        }
        let result = match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Coord(n) => {
                if n.as_ref() == q {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(e) => Expr::negate(e.diff_inner(q, memo)),
            Expr::Add(ts) => Expr::sum(ts.iter().map(|t| t.diff_inner(q, memo)).collect()),
            Expr::Mul(fs) => {
                let derivatives: Vec<Expr> = fs.iter().map(|f| f.diff_inner(q, memo)).collect();
                let mut terms = Vec::new();
                for (i, df) in derivatives.into_iter().enumerate() {
                    if df.is_const_zero() {
                        continue;
                    }
                    let mut factors = Vec::with_capacity(fs.len());
                    for (j, g) in fs.iter().enumerate() {
                        if i != j {
                            factors.push(g.clone());
                        }
                    }
                    factors.push(df);
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Expr::Pow(b, k) => {
                let db = b.diff_inner(q, memo);
                if db.is_const_zero() {
                    Expr::zero()
                } else {
                    Expr::product(vec![
                        Expr::Const(*k as f64),
                        Expr::powi((**b).clone(), k - 1),
                        db,
                    ])
                }
            }
            Expr::Sin(a) => {
                let da = a.diff_inner(q, memo);
                if da.is_const_zero() {
                    Expr::zero()
                } else {
                    Expr::product(vec![Expr::Cos(a.clone()), da])
                }
            }
            Expr::Cos(a) => {
                let da = a.diff_inner(q, memo);
                if da.is_const_zero() {
                    Expr::zero()
                } else {
                    Expr::negate(Expr::product(vec![Expr::Sin(a.clone()), da]))
                }
            }
        };
        if let Some(k) = key {
            memo.insert(k, result.clone());
        }
        result
    }

    /// Recursive IEEE-double evaluation; shared nodes evaluate once.
    pub fn evaluate(&self, point: &Point) -> Result<f64, SymError> {
        let mut memo = HashMap::new();
        self.eval_inner(point, &mut memo)
    }

    fn eval_inner(
        &self,
        point: &Point,
        memo: &mut HashMap<ShareKey, f64>,
    ) -> Result<f64, SymError> {
        let key = self.share_key();
        if let Some(k) = key {
            if let Some(hit) = memo.get(&k) {
                return Ok(*hit);
            }
        }
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Coord(n) => {
                let v = point
                    .get(n)
                    .ok_or_else(|| SymError::MissingCoordinate(n.to_string()))?;
                if !v.is_finite() {
                    return Err(SymError::NonFiniteCoordinate(n.to_string()));
                }
                v
            }
            Expr::Neg(e) => -e.eval_inner(point, memo)?,
            Expr::Add(ts) => {
                let mut acc = 0.0;
                for t in ts.iter() {
                    acc += t.eval_inner(point, memo)?;
                }
                acc
            }
            Expr::Mul(fs) => {
                let mut acc = 1.0;
                for f in fs.iter() {
                    acc *= f.eval_inner(point, memo)?;
                }
                acc
            }
            Expr::Pow(b, k) => b.eval_inner(point, memo)?.powi(*k as i32),
            Expr::Sin(a) => a.eval_inner(point, memo)?.sin(),
            Expr::Cos(a) => a.eval_inner(point, memo)?.cos(),
        };
        if let Some(k) = key {
            memo.insert(k, value);
        }
        Ok(value)
    }

    /// Seeded probabilistic zero test: true iff |e| <= tol at every sampled
    /// point. Deterministic for a given spec.
    pub fn is_zero(&self, sampler: &SampleSpec, tol: f64) -> Result<bool, SymError> {
        if self.is_const_zero() {
            return Ok(true);
        }
        let coords = self.coordinates();
        for p in sampler.points(coords.iter().copied()) {
            if self.evaluate(&p)?.abs() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest |e| over the sampled points.
    pub fn sup_on_samples(&self, sampler: &SampleSpec) -> Result<f64, SymError> {
        let coords = self.coordinates();
        let mut sup: f64 = 0.0;
        for p in sampler.points(coords.iter().copied()) {
            sup = sup.max(self.evaluate(&p)?.abs());
        }
        Ok(sup)
    }
}

fn shared_ptr(e: &Arc<Expr>) -> Option<usize> {
    (Arc::strong_count(e) > 1).then_some(Arc::as_ptr(e) as usize)
}

fn shared_vec_ptr(v: &Arc<Vec<Expr>>) -> Option<usize> {
    (Arc::strong_count(v) > 1).then_some(Arc::as_ptr(v) as usize)
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, Expr::negate(rhs)])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::negate(self)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Coord(n) => write!(f, "{n}"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Add(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Expr::Mul(fs) => {
                write!(f, "(")?;
                for (i, t) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Expr::Pow(b, k) => write!(f, "({b})^{k}"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
        }
    }
}
