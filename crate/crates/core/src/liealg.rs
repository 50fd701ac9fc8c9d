//! Detection of finite-dimensional Lie algebras of vector fields.
//!
//! Bracket closure is generated breadth-first from a set of generators.
//! Linear dependence is always over constant real coefficients — the span
//! that matters for superposition-rule theory — implemented as one
//! least-squares fit across stacked evaluations at many sampled points and
//! validated on a disjoint sample, never as pointwise rank.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{GeomError, VectorField};
use crate::symexpr::{Point, SampleSpec};

/// Relative residual below which a candidate bracket counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-8;
/// Extracted constants closer to 0 than this are snapped to 0; constants
/// within the same distance of ±1 are snapped to ±1. Fixed so that golden
/// tables stay bit-stable.
pub const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("no generators supplied")]
    EmptyGenerators,
    #[error("generator {0} is (sampled) zero")]
    ZeroGenerator(usize),
    #[error("max_dim {max_dim} is below the number of independent generators {generators}")]
    CapBelowGenerators { max_dim: usize, generators: usize },
    #[error("dependence test stayed ill-conditioned after {0} resamples")]
    IllConditioned(usize),
    #[error("basis is not closed: residual {residual:.3e} for bracket ({i}, {j})")]
    NotClosed { i: usize, j: usize, residual: f64 },
    #[error("structure table must be antisymmetric")]
    NotAntisymmetric,
}

/// Sparse bracket entry: ((i, j), [(k, coefficient), ...]).
pub type BracketSpec<'a> = ((usize, usize), &'a [(usize, f64)]);

/// Structure constants `c[i][j][k]` of a bracket table, stored densely
/// with the antisymmetry `c[i][j][k] = -c[j][i][k]` enforced by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTable {
    dim: usize,
    c: Vec<f64>,
}

impl StructureTable {
    pub fn new(dim: usize) -> StructureTable {
        StructureTable {
            dim,
            c: vec![0.0; dim * dim * dim],
        }
    }

    /// Builds a table from sparse entries ((i, j), [(k, value), ...]) with
    /// i < j; the (j, i) mirror entries are filled automatically.
    pub fn from_brackets(dim: usize, entries: &[BracketSpec]) -> StructureTable {
        let mut t = StructureTable::new(dim);
        for ((i, j), coeffs) in entries {
            for (k, v) in coeffs.iter() {
                t.set(*i, *j, *k, *v);
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[self.idx(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let a = self.idx(i, j, k);
        self.c[a] = value;
        let b = self.idx(j, i, k);
        self.c[b] = -value;
    }

    /// Nonzero entries with i < j.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                for k in 0..self.dim {
                    let v = self.get(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    /// Largest Jacobi-identity defect
    /// `max |Σ_m (c[i][j][m] c[m][k][l] + c[j][k][m] c[m][i][l] + c[k][i][m] c[m][j][l])|`.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            acc += self.get(i, j, m) * self.get(m, k, l)
                                + self.get(j, k, m) * self.get(m, i, l)
                                + self.get(k, i, m) * self.get(m, j, l);
                        }
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        worst
    }
}

/// A verified basis of a finite-dimensional Lie algebra of vector fields.
#[derive(Debug, Clone)]
pub struct LieBasis {
    fields: Vec<VectorField>,
    constants: StructureTable,
    sample: Vec<Point>,
}

impl LieBasis {
    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn constants(&self) -> &StructureTable {
        &self.constants
    }

    pub fn sample(&self) -> &[Point] {
        &self.sample
    }
}

/// Evidence that bracket generation kept producing independent fields until
/// a cap was hit. Never a proof of infinite-dimensionality — numerics can
/// only corroborate non-closure.
#[derive(Debug, Clone, PartialEq)]
pub struct NonClosureEvidence {
    /// Basis dimension after each completed bracket depth (index 0 is the
    /// independent-generator count).
    pub dimension_per_depth: Vec<usize>,
    pub hit: CapHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapHit {
    MaxDim,
    MaxDepth,
}

impl NonClosureEvidence {
    /// True when every recorded depth strictly grew the dimension.
    pub fn strictly_increasing(&self) -> bool {
        self.dimension_per_depth.windows(2).all(|w| w[0] < w[1])
    }
}

#[derive(Debug, Clone)]
pub enum Closure {
    Closed(LieBasis),
    Evidence(NonClosureEvidence),
}

struct DependenceTester {
    sampler: SampleSpec,
    chart_names: Vec<String>,
    m: usize,
    resamples: u64,
    fields: Vec<VectorField>,
    fit_points: Vec<Point>,
    val_points: Vec<Point>,
    /// Stacked evaluations of the basis fields at the fit points,
    /// one column per basis field.
    fit_cols: Vec<DVector<f64>>,
    val_cols: Vec<DVector<f64>>,
    dim: usize,
}

enum Reduction {
    Dependent { coeffs: Vec<f64> },
    Independent { residual: f64 },
}

impl DependenceTester {
    fn new(
        chart_names: Vec<String>,
        sampler: &SampleSpec,
        m: usize,
        dim: usize,
    ) -> DependenceTester {
        let names: Vec<&str> = chart_names.iter().map(|s| s.as_str()).collect();
        let fit_points = sampler.reseeded(0x11).points_n(names.iter().copied(), m);
        let val_points = sampler.reseeded(0x22).points_n(names.iter().copied(), m);
        DependenceTester {
            sampler: sampler.clone(),
            chart_names,
            m,
            resamples: 0,
            fields: Vec::new(),
            fit_points,
            val_points,
            fit_cols: Vec::new(),
            val_cols: Vec::new(),
            dim,
        }
    }

    /// Condition number of the stacked fit matrix must stay sane; an
    /// unlucky sample set is replaced (up to 5 draws) before giving up.
    fn ensure_conditioned(&mut self) -> Result<(), LieError> {
        loop {
            if self.fit_cols.len() < 2 {
                return Ok(());
            }
            let rows = self.fit_cols[0].len();
            let mut a = DMatrix::zeros(rows, self.fit_cols.len());
            for (j, col) in self.fit_cols.iter().enumerate() {
                a.set_column(j, col);
            }
            let svd = a.svd(false, false);
            let max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
            let min = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
            if max > 0.0 && min / max >= 1e-12 {
                return Ok(());
            }
            if self.resamples >= 5 {
                return Err(LieError::IllConditioned(5));
            }
            self.resamples += 1;
            let names: Vec<&str> = self.chart_names.iter().map(|s| s.as_str()).collect();
            self.fit_points = self
                .sampler
                .reseeded(0x11 + 0x100 * self.resamples)
                .points_n(names.iter().copied(), self.m);
            self.val_points = self
                .sampler
                .reseeded(0x22 + 0x100 * self.resamples)
                .points_n(names.iter().copied(), self.m);
            let fields = self.fields.clone();
            self.fit_cols.clear();
            self.val_cols.clear();
            for f in &fields {
                self.fit_cols.push(self.stack(f, &self.fit_points)?);
                self.val_cols.push(self.stack(f, &self.val_points)?);
            }
        }
    }

    fn stack(&self, field: &VectorField, points: &[Point]) -> Result<DVector<f64>, LieError> {
        let mut col = DVector::zeros(points.len() * self.dim);
        for (p_idx, p) in points.iter().enumerate() {
            let vals = field.evaluate(p)?;
            for (c_idx, v) in vals.iter().enumerate() {
                col[p_idx * self.dim + c_idx] = *v;
            }
        }
        Ok(col)
    }

    fn push_basis_field(&mut self, field: &VectorField) -> Result<(), LieError> {
        self.fields.push(field.clone());
        self.fit_cols.push(self.stack(field, &self.fit_points)?);
        self.val_cols.push(self.stack(field, &self.val_points)?);
        self.ensure_conditioned()
    }

    /// Least-squares reduction of `candidate` against the current basis;
    /// dependence is decided by the residual on the disjoint validation
    /// sample, relative to the candidate's own magnitude.
    fn reduce(&self, candidate: &VectorField) -> Result<Reduction, LieError> {
        let w_fit = self.stack(candidate, &self.fit_points)?;
        let w_val = self.stack(candidate, &self.val_points)?;
        let n = self.fit_cols.len();
        if n == 0 {
            let scale = w_val.amax().max(1.0);
            let residual = w_val.amax() / scale;
            return if residual <= DEPENDENCE_TOL {
                Ok(Reduction::Dependent { coeffs: Vec::new() })
            } else {
                Ok(Reduction::Independent { residual })
            };
        }

        let rows = w_fit.len();
        let mut a = DMatrix::zeros(rows, n);
        for (j, col) in self.fit_cols.iter().enumerate() {
            a.set_column(j, col);
        }
        let svd = a.svd(true, true);
        let coeffs = svd
            .solve(&w_fit, 1e-12)
            .map_err(|_| LieError::IllConditioned(0))?;

        let mut prediction = DVector::zeros(w_val.len());
        for (j, col) in self.val_cols.iter().enumerate() {
            prediction += col * coeffs[j];
        }
        let scale = w_val.amax().max(1.0);
        let residual = (w_val - prediction).amax() / scale;
        if residual <= DEPENDENCE_TOL {
            Ok(Reduction::Dependent {
                coeffs: coeffs.iter().copied().collect(),
            })
        } else {
            Ok(Reduction::Independent { residual })
        }
    }
}

fn snap(v: f64) -> f64 {
    if v.abs() <= SNAP_TOL {
        0.0
    } else if (v - 1.0).abs() <= SNAP_TOL {
        1.0
    } else if (v + 1.0).abs() <= SNAP_TOL {
        -1.0
    } else {
        v
    }
}

/// Breadth-first bracket closure under depth and dimension caps.
///
/// Each depth level brackets every not-yet-processed pair of the current
/// basis in (i, j) order; candidates that reduce against the basis are
/// dropped, independent ones are appended. A level that appends nothing
/// means the span is a Lie algebra. Exceeding a cap returns growth
/// evidence instead.
pub fn close_under_brackets(
    generators: &[VectorField],
    max_depth: usize,
    max_dim: usize,
    sampler: &SampleSpec,
) -> Result<Closure, LieError> {
    if generators.is_empty() {
        return Err(LieError::EmptyGenerators);
    }
    let chart = generators[0].chart().clone();
    for g in generators {
        if *g.chart() != chart {
            return Err(LieError::Geom(GeomError::ChartMismatch));
        }
    }
    for (i, g) in generators.iter().enumerate() {
        if g.is_zero(sampler, crate::symexpr::DEFAULT_ZERO_TOL)? {
            return Err(LieError::ZeroGenerator(i));
        }
    }

    let m = 3 * max_dim.max(generators.len());
    let names: Vec<String> = chart.names().map(str::to_owned).collect();
    let mut tester = DependenceTester::new(names, sampler, m, chart.dim());

    // Independent generators form depth 0.
    let mut basis: Vec<VectorField> = Vec::new();
    for g in generators {
        match tester.reduce(g)? {
            Reduction::Independent { .. } => {
                tester.push_basis_field(g)?;
                basis.push(g.clone());
            }
            Reduction::Dependent { .. } => {}
        }
    }
    if basis.len() > max_dim {
        return Err(LieError::CapBelowGenerators {
            max_dim,
            generators: basis.len(),
        });
    }

    let mut dims = vec![basis.len()];
    let mut processed = 0usize; // pairs (i, j) with j < processed are done
    for _depth in 1..=max_depth {
        let len = basis.len();
        let mut added = false;
        for j in processed..len {
            for i in 0..j {
                let bracket = basis[i].lie_bracket(&basis[j])?;
                match tester.reduce(&bracket)? {
                    Reduction::Dependent { .. } => {}
                    Reduction::Independent { .. } => {
                        if basis.len() == max_dim {
                            dims.push(basis.len() + 1);
                            return Ok(Closure::Evidence(NonClosureEvidence {
                                dimension_per_depth: dims,
                                hit: CapHit::MaxDim,
                            }));
                        }
                        tester.push_basis_field(&bracket)?;
                        basis.push(bracket);
                        added = true;
                    }
                }
            }
        }
        processed = len;
        dims.push(basis.len());
        if !added && processed == basis.len() {
            let constants = structure_constants(&basis, sampler)?;
            return Ok(Closure::Closed(LieBasis {
                fields: basis,
                constants,
                sample: tester.fit_points,
            }));
        }
    }
    Ok(Closure::Evidence(NonClosureEvidence {
        dimension_per_depth: dims,
        hit: CapHit::MaxDepth,
    }))
}

/// Structure constants of a closed basis by least squares over sampled
/// evaluations, validated on a disjoint sample and snapped (0, ±1).
/// Errors with the offending pair if some bracket fails to reduce.
pub fn structure_constants(
    fields: &[VectorField],
    sampler: &SampleSpec,
) -> Result<StructureTable, LieError> {
    if fields.is_empty() {
        return Err(LieError::EmptyGenerators);
    }
    let chart = fields[0].chart().clone();
    let n = fields.len();
    let m = (3 * n).max(12);
    let names: Vec<String> = chart.names().map(str::to_owned).collect();
    let mut tester = DependenceTester::new(names, sampler, m, chart.dim());
    for f in fields {
        tester.push_basis_field(f)?;
    }

    let mut table = StructureTable::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let bracket = fields[i].lie_bracket(&fields[j])?;
            match tester.reduce(&bracket)? {
                Reduction::Dependent { coeffs } => {
                    for (k, c) in coeffs.iter().enumerate() {
                        table.set(i, j, k, snap(*c));
                    }
                }
                Reduction::Independent { residual } => {
                    return Err(LieError::NotClosed { i, j, residual });
                }
            }
        }
    }
    Ok(table)
}

/// Outcome of checking one bracket against a prescribed table entry.
#[derive(Debug, Clone)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    pub label: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct TableReport {
    pub pairs: Vec<PairCheck>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Verifies that `[b_i, b_j] = Σ_k c[i][j][k] b_k` holds on samples, one
/// residual per pair (sup over sampled points and components).
pub fn verify_table(
    fields: &[VectorField],
    names: &[&str],
    expected: &StructureTable,
    sampler: &SampleSpec,
    tol: f64,
) -> Result<TableReport, LieError> {
    if fields.is_empty() {
        return Err(LieError::EmptyGenerators);
    }
    if expected.dim() != fields.len() {
        return Err(LieError::NotAntisymmetric);
    }
    let n = fields.len();
    let mut pairs = Vec::new();
    let mut max_residual: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut expected_field = VectorField::zero(fields[0].chart().clone());
            for (k, f) in fields.iter().enumerate() {
                let c = expected.get(i, j, k);
                if c != 0.0 {
                    expected_field = expected_field.add(&f.scale(c))?;
                }
            }
            let defect = fields[i].lie_bracket(&fields[j])?.sub(&expected_field)?;
            let residual = defect.sup_on_samples(sampler)?;
            max_residual = max_residual.max(residual);
            pairs.push(PairCheck {
                i,
                j,
                label: format!("[{}, {}]", names[i], names[j]),
                residual,
                pass: residual <= tol,
            });
        }
    }
    let pass = pairs.iter().all(|p| p.pass);
    Ok(TableReport {
        pairs,
        max_residual,
        pass,
    })
}
