use std::fmt;

use super::{Chart, GeomError};
use crate::symexpr::{Expr, Point, SampleSpec};

/// A vector field on a chart: one expression per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Chart,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<VectorField, GeomError> {
        if components.len() != chart.dim() {
            return Err(GeomError::ComponentCount {
                expected: chart.dim(),
                got: components.len(),
            });
        }
        Ok(VectorField { chart, components })
    }

    pub fn zero(chart: Chart) -> VectorField {
        let components = vec![Expr::zero(); chart.dim()];
        VectorField { chart, components }
    }

    /// The unit coordinate field ∂/∂`name`.
    pub fn coordinate(chart: Chart, name: &str) -> Result<VectorField, GeomError> {
        let idx = chart.index_of(name)?;
        let mut components = vec![Expr::zero(); chart.dim()];
        components[idx] = Expr::one();
        Ok(VectorField { chart, components })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, index: usize) -> &Expr {
        &self.components[index]
    }

    pub fn component_of(&self, name: &str) -> Result<&Expr, GeomError> {
        Ok(&self.components[self.chart.index_of(name)?])
    }

    fn check_chart(&self, other: &VectorField) -> Result<(), GeomError> {
        if self.chart != other.chart {
            return Err(GeomError::ChartMismatch);
        }
        Ok(())
    }

    pub fn evaluate(&self, point: &Point) -> Result<Vec<f64>, GeomError> {
        self.components
            .iter()
            .map(|c| c.evaluate(point).map_err(GeomError::from))
            .collect()
    }

    pub fn evaluate_state(&self, state: &[f64]) -> Result<Vec<f64>, GeomError> {
        let point = self.chart.point(state)?;
        self.evaluate(&point)
    }

    /// Directional derivative X(f) = Σ_i X^i ∂f/∂q_i.
    pub fn apply(&self, f: &Expr) -> Expr {
        let terms = self
            .chart
            .names()
            .zip(self.components.iter())
            .filter(|(name, comp)| !comp.is_const_zero() && f.contains(name))
            .map(|(name, comp)| comp.clone() * f.differentiate(name))
            .collect();
        Expr::sum(terms)
    }

    /// Lie bracket [X, Y], computed exactly component-by-component as
    /// X(Y^i) - Y(X^i).
    pub fn lie_bracket(&self, other: &VectorField) -> Result<VectorField, GeomError> {
        self.check_chart(other)?;
        let components = (0..self.chart.dim())
            .map(|i| self.apply(&other.components[i]) - other.apply(&self.components[i]))
            .collect();
        VectorField::new(self.chart.clone(), components)
    }

    /// Lie derivative of a vector field along `self`; identical to the
    /// bracket, provided as the vocabulary used by symmetry checks.
    pub fn lie_derivative(&self, other: &VectorField) -> Result<VectorField, GeomError> {
        self.lie_bracket(other)
    }

    pub fn scale(&self, factor: f64) -> VectorField {
        self.scale_expr(&Expr::constant(factor))
    }

    pub fn scale_expr(&self, factor: &Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .map(|c| factor.clone() * c.clone())
                .collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, GeomError> {
        self.check_chart(other)?;
        let components = self
            .components
            .iter()
            .zip(other.components.iter())
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        VectorField::new(self.chart.clone(), components)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, GeomError> {
        self.add(&other.scale(-1.0))
    }

    /// Constant-coefficient combination Σ c_i F_i.
    pub fn combine(coeffs: &[f64], fields: &[VectorField]) -> Result<VectorField, GeomError> {
        let first = fields.first().ok_or(GeomError::EmptyGenerators)?;
        let mut acc = VectorField::zero(first.chart().clone());
        for (c, f) in coeffs.iter().zip(fields) {
            if *c != 0.0 {
                acc = acc.add(&f.scale(*c))?;
            }
        }
        Ok(acc)
    }

    pub fn is_zero(&self, sampler: &SampleSpec, tol: f64) -> Result<bool, GeomError> {
        for c in &self.components {
            if !c.is_zero(sampler, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest component magnitude over the sampled points.
    pub fn sup_on_samples(&self, sampler: &SampleSpec) -> Result<f64, GeomError> {
        let mut sup: f64 = 0.0;
        for c in &self.components {
            sup = sup.max(c.sup_on_samples(sampler)?);
        }
        Ok(sup)
    }
}

/// Determinant of the component matrix of a frame (one field per column)
/// as an exact expression. Realizes top-degree nonvanishing checks without
/// multivector algebra: the frame spans the tangent space wherever the
/// determinant is nonzero.
pub fn frame_determinant(fields: &[VectorField]) -> Result<Expr, GeomError> {
    let first = fields.first().ok_or(GeomError::EmptyGenerators)?;
    let dim = first.chart().dim();
    if fields.len() != dim {
        return Err(GeomError::ComponentCount {
            expected: dim,
            got: fields.len(),
        });
    }
    for f in fields {
        if f.chart() != first.chart() {
            return Err(GeomError::ChartMismatch);
        }
    }
    let entry = |row: usize, col: usize| fields[col].component(row).clone();
    Ok(det_recursive(&entry, &(0..dim).collect::<Vec<_>>(), 0))
}

/// Cofactor expansion along the first remaining column.
fn det_recursive(entry: &dyn Fn(usize, usize) -> Expr, rows: &[usize], col: usize) -> Expr {
    if rows.len() == 1 {
        return entry(rows[0], col);
    }
    let mut terms = Vec::with_capacity(rows.len());
    for (pos, &row) in rows.iter().enumerate() {
        let pivot = entry(row, col);
        if pivot.is_const_zero() {
            continue;
        }
        let remaining: Vec<usize> = rows.iter().copied().filter(|&r| r != row).collect();
        let minor = det_recursive(entry, &remaining, col + 1);
        let signed = if pos % 2 == 0 {
            pivot * minor
        } else {
            Expr::negate(pivot * minor)
        };
        terms.push(signed);
    }
    Expr::sum(terms)
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (name, comp) in self.chart.names().zip(self.components.iter()) {
            if comp.is_const_zero() {
                continue;
            }
            if wrote {
                write!(f, " + ")?;
            }
            write!(f, "{comp} d/d{name}")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}
