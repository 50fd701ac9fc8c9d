use std::collections::BTreeMap;
use std::fmt;

use super::{Chart, GeomError, VectorField};
use crate::symexpr::{Expr, SampleSpec};

/// A differential k-form stored sparsely: strictly increasing coordinate
/// index tuples of length k mapped to coefficient expressions. An absent
/// key is a zero coefficient; a 0-form is a single coefficient at the
/// empty tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct KForm {
    chart: Chart,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl KForm {
    pub fn zero(chart: Chart, degree: usize) -> Result<KForm, GeomError> {
        if degree > chart.dim() {
            return Err(GeomError::DegreeOverflow {
                degree,
                dim: chart.dim(),
            });
        }
        Ok(KForm {
            chart,
            degree,
            terms: BTreeMap::new(),
        })
    }

    /// A 0-form (scalar function).
    pub fn function(chart: Chart, f: Expr) -> KForm {
        let mut terms = BTreeMap::new();
        if !f.is_const_zero() {
            terms.insert(Vec::new(), f);
        }
        KForm {
            chart,
            degree: 0,
            terms,
        }
    }

    /// A 1-form from one coefficient per coordinate, in chart order.
    pub fn one_form(chart: Chart, coefficients: Vec<Expr>) -> Result<KForm, GeomError> {
        if coefficients.len() != chart.dim() {
            return Err(GeomError::ComponentCount {
                expected: chart.dim(),
                got: coefficients.len(),
            });
        }
        let mut form = KForm::zero(chart, 1)?;
        for (i, c) in coefficients.into_iter().enumerate() {
            if !c.is_const_zero() {
                form.terms.insert(vec![i], c);
            }
        }
        Ok(form)
    }

    /// The coordinate differential d`name`.
    pub fn coordinate_differential(chart: Chart, name: &str) -> Result<KForm, GeomError> {
        let idx = chart.index_of(name)?;
        let mut coeffs = vec![Expr::zero(); chart.dim()];
        coeffs[idx] = Expr::one();
        KForm::one_form(chart, coeffs)
    }

    pub fn from_terms<I>(chart: Chart, degree: usize, terms: I) -> Result<KForm, GeomError>
    where
        I: IntoIterator<Item = (Vec<usize>, Expr)>,
    {
        let mut form = KForm::zero(chart, degree)?;
        for (key, coeff) in terms {
            let strictly_increasing = key.windows(2).all(|w| w[0] < w[1]);
            if key.len() != degree
                || !strictly_increasing
                || key.iter().any(|&i| i >= form.chart.dim())
            {
                return Err(GeomError::BadIndexTuple(key));
            }
            form.accumulate(key, coeff);
        }
        Ok(form)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], &Expr)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn coefficient(&self, key: &[usize]) -> Expr {
        self.terms.get(key).cloned().unwrap_or_else(Expr::zero)
    }

    fn accumulate(&mut self, key: Vec<usize>, coeff: Expr) {
        if coeff.is_const_zero() {
            return;
        }
        match self.terms.remove(&key) {
            Some(existing) => {
                let sum = existing + coeff;
                if !sum.is_const_zero() {
                    self.terms.insert(key, sum);
                }
            }
            None => {
                self.terms.insert(key, coeff);
            }
        }
    }

    fn check_chart_form(&self, other: &KForm) -> Result<(), GeomError> {
        if self.chart != other.chart {
            return Err(GeomError::ChartMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &KForm) -> Result<KForm, GeomError> {
        self.check_chart_form(other)?;
        if self.degree != other.degree {
            return Err(GeomError::WrongDegree {
                expected: self.degree,
                got: other.degree,
            });
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.accumulate(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn scale_expr(&self, factor: &Expr) -> KForm {
        let mut out = KForm {
            chart: self.chart.clone(),
            degree: self.degree,
            terms: BTreeMap::new(),
        };
        for (k, c) in &self.terms {
            out.accumulate(k.clone(), factor.clone() * c.clone());
        }
        out
    }

    pub fn scale(&self, factor: f64) -> KForm {
        self.scale_expr(&Expr::constant(factor))
    }

    pub fn sub(&self, other: &KForm) -> Result<KForm, GeomError> {
        self.add(&other.scale(-1.0))
    }

    /// Exterior derivative: d(f dq_I) = Σ_m ∂f/∂q_m dq_m ∧ dq_I.
    pub fn exterior_derivative(&self) -> Result<KForm, GeomError> {
        let dim = self.chart.dim();
        if self.degree >= dim {
            return Err(GeomError::DegreeOverflow {
                degree: self.degree + 1,
                dim,
            });
        }
        let mut out = KForm::zero(self.chart.clone(), self.degree + 1)?;
        for (key, coeff) in &self.terms {
            for m in 0..dim {
                if key.binary_search(&m).is_ok() {
                    continue;
                }
                let dc = coeff.differentiate(self.chart.name(m));
                if dc.is_const_zero() {
                    continue;
                }
                let pos = key.partition_point(|&i| i < m);
                let mut new_key = key.clone();
                new_key.insert(pos, m);
                let signed = if pos % 2 == 0 { dc } else { Expr::negate(dc) };
                out.accumulate(new_key, signed);
            }
        }
        Ok(out)
    }

    /// Graded-antisymmetric wedge product.
    pub fn wedge(&self, other: &KForm) -> Result<KForm, GeomError> {
        self.check_chart_form(other)?;
        let degree = self.degree + other.degree;
        if degree > self.chart.dim() {
            return Err(GeomError::DegreeOverflow {
                degree,
                dim: self.chart.dim(),
            });
        }
        let mut out = KForm::zero(self.chart.clone(), degree)?;
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                if let Some((key, sign)) = merge_indices(ka, kb) {
                    let coeff = ca.clone() * cb.clone();
                    let signed = if sign > 0 { coeff } else { Expr::negate(coeff) };
                    out.accumulate(key, signed);
                }
            }
        }
        Ok(out)
    }

    /// Interior product i_X ω (contraction on the first slot).
    pub fn interior(&self, field: &VectorField) -> Result<KForm, GeomError> {
        if self.chart != *field.chart() {
            return Err(GeomError::ChartMismatch);
        }
        if self.degree == 0 {
            return Err(GeomError::WrongDegree {
                expected: 1,
                got: 0,
            });
        }
        let mut out = KForm::zero(self.chart.clone(), self.degree - 1)?;
        for (key, coeff) in &self.terms {
            for (slot, &idx) in key.iter().enumerate() {
                let comp = field.component(idx);
                if comp.is_const_zero() {
                    continue;
                }
                let mut new_key = key.clone();
                new_key.remove(slot);
                let term = coeff.clone() * comp.clone();
                let signed = if slot % 2 == 0 {
                    term
                } else {
                    Expr::negate(term)
                };
                out.accumulate(new_key, signed);
            }
        }
        Ok(out)
    }

    /// Pairing of a 1-form with a vector field: Σ_i ω_i X^i.
    pub fn pair(&self, field: &VectorField) -> Result<Expr, GeomError> {
        if self.degree != 1 {
            return Err(GeomError::WrongDegree {
                expected: 1,
                got: self.degree,
            });
        }
        Ok(self.interior(field)?.coefficient(&[]))
    }

    /// Lie derivative along Y via the Cartan formula i_Y dω + d(i_Y ω).
    /// Top-degree forms have dω = 0; 0-forms have no interior product, so
    /// only the complementary term contributes in those cases.
    pub fn lie_derivative(&self, field: &VectorField) -> Result<KForm, GeomError> {
        if self.chart != *field.chart() {
            return Err(GeomError::ChartMismatch);
        }
        let mut out = KForm::zero(self.chart.clone(), self.degree)?;
        if self.degree < self.chart.dim() {
            out = out.add(&self.exterior_derivative()?.interior(field)?)?;
        }
        if self.degree > 0 {
            let inner = self.interior(field)?;
            if inner.degree < self.chart.dim() {
                out = out.add(&inner.exterior_derivative()?)?;
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self, sampler: &SampleSpec, tol: f64) -> Result<bool, GeomError> {
        for coeff in self.terms.values() {
            if !coeff.is_zero(sampler, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest coefficient magnitude over the sampled points.
    pub fn sup_on_samples(&self, sampler: &SampleSpec) -> Result<f64, GeomError> {
        let mut sup: f64 = 0.0;
        for coeff in self.terms.values() {
            sup = sup.max(coeff.sup_on_samples(sampler)?);
        }
        Ok(sup)
    }
}

/// Merges two strictly increasing index tuples; `None` when they share an
/// index (the wedge vanishes), otherwise the merged tuple and the parity
/// sign of the shuffle.
fn merge_indices(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut sign = 1;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining entries of a.
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, sign))
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (key, coeff)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{coeff}")?;
            for (m, idx) in key.iter().enumerate() {
                write!(
                    f,
                    "{}d{}",
                    if m == 0 { " " } else { "∧" },
                    self.chart.name(*idx)
                )?;
            }
        }
        Ok(())
    }
}
