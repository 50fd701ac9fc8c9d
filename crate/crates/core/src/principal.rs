//! One-dimensional principal actions along a distinguished coordinate.
//!
//! Every structure group here is one-dimensional and abelian — the real
//! line, the circle, or the positive half-line — and every action is a
//! translation of one chart coordinate in the group's canonical additive
//! chart. The positive half-line is always handled in its exponential
//! chart (s = log x), where the action is again additive, the generator is
//! the unit coordinate field and x⁻¹dx becomes ds; exponentiation happens
//! only at serialization. With a one-dimensional group the adjoint action
//! and the left-translation differential are both the identity, so the
//! group equation of the reconstruction pipeline degenerates to a scalar
//! quadrature.

use thiserror::Error;

use crate::geometry::{Chart, GeomError, KForm, VectorField};
use crate::symexpr::{SampleSpec, DEFAULT_ZERO_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrincipalError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("vector field is not projectable: component `{component}` varies along the fiber")]
    NotProjectable { component: String },
    #[error("connection form must have degree 1, got {0}")]
    WrongDegree(usize),
    #[error("connection check failed: {0}")]
    BadConnection(String),
}

/// The three one-dimensional structure groups, all realized additively on
/// their canonical chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// (R, +): the fiber coordinate itself shifts.
    AdditiveLine,
    /// S¹: an angle coordinate shifts (stored unwrapped).
    Circle,
    /// (R₊, ·) in the exponential chart: the stored coordinate is the
    /// logarithm of the multiplicative one.
    PositiveLine,
}

impl GroupKind {
    /// Converts a group element from its natural parameterization into the
    /// canonical additive chart (log for the positive line).
    pub fn to_additive(&self, g: f64) -> Result<f64, PrincipalError> {
        match self {
            GroupKind::AdditiveLine | GroupKind::Circle => Ok(g),
            GroupKind::PositiveLine => {
                if g > 0.0 {
                    Ok(g.ln())
                } else {
                    Err(PrincipalError::BadConnection(format!(
                        "positive-line group element must be > 0, got {g}"
                    )))
                }
            }
        }
    }

    /// Inverse of [`GroupKind::to_additive`].
    pub fn from_additive(&self, g: f64) -> f64 {
        match self {
            GroupKind::AdditiveLine | GroupKind::Circle => g,
            GroupKind::PositiveLine => g.exp(),
        }
    }
}

/// A free action of a one-dimensional group translating one chart
/// coordinate; its infinitesimal generator is the unit coordinate field of
/// the fiber, which is complete on the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberAction {
    chart: Chart,
    fiber_index: usize,
    kind: GroupKind,
    generator: VectorField,
}

impl FiberAction {
    pub fn new(chart: Chart, fiber: &str, kind: GroupKind) -> Result<FiberAction, PrincipalError> {
        let fiber_index = chart.index_of(fiber)?;
        let generator = VectorField::coordinate(chart.clone(), fiber)?;
        Ok(FiberAction {
            chart,
            fiber_index,
            kind,
            generator,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn fiber_name(&self) -> &str {
        self.chart.name(self.fiber_index)
    }

    pub fn fiber_index(&self) -> usize {
        self.fiber_index
    }

    pub fn generator(&self) -> &VectorField {
        &self.generator
    }

    /// The action Φ(g, ·): shifts the fiber coordinate by g (additive
    /// chart).
    pub fn translate(&self, g: f64, state: &[f64]) -> Vec<f64> {
        let mut out = state.to_vec();
        out[self.fiber_index] += g;
        out
    }

    /// Chart of the quotient: the fiber coordinate deleted. All bundles
    /// here are trivial products, so no more machinery is needed.
    pub fn quotient_chart(&self) -> Chart {
        self.chart
            .without(self.fiber_name())
            .expect("fiber coordinate exists by construction")
    }

    /// Drops the fiber component of a state.
    pub fn project_state(&self, state: &[f64]) -> Vec<f64> {
        state
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.fiber_index)
            .map(|(_, v)| *v)
            .collect()
    }

    /// True iff every non-fiber component of X is (sampled) independent of
    /// the fiber coordinate.
    pub fn is_projectable(
        &self,
        field: &VectorField,
        sampler: &SampleSpec,
    ) -> Result<bool, PrincipalError> {
        if *field.chart() != self.chart {
            return Err(GeomError::ChartMismatch.into());
        }
        let fiber = self.fiber_name();
        for (i, comp) in field.components().iter().enumerate() {
            if i == self.fiber_index {
                continue;
            }
            let d = comp.differentiate(fiber);
            if !d
                .is_zero(sampler, DEFAULT_ZERO_TOL)
                .map_err(GeomError::from)?
            {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// π_*X on the quotient chart: the fiber coordinate and its component
    /// are dropped, the remaining components re-read on the quotient chart.
    pub fn pushforward(
        &self,
        field: &VectorField,
        sampler: &SampleSpec,
    ) -> Result<VectorField, PrincipalError> {
        if !self.is_projectable(field, sampler)? {
            let offending = field
                .components()
                .iter()
                .enumerate()
                .find(|(i, c)| *i != self.fiber_index && c.contains(self.fiber_name()))
                .map(|(i, _)| self.chart.name(i).to_string())
                .unwrap_or_else(|| "?".to_string());
            return Err(PrincipalError::NotProjectable {
                component: offending,
            });
        }
        let components = field
            .components()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.fiber_index)
            .map(|(_, c)| c.clone())
            .collect();
        Ok(VectorField::new(self.quotient_chart(), components)?)
    }
}

/// A principal connection form for a one-dimensional action: a 1-form η
/// with η(Y) ≡ 1 and L_Y η = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection1D {
    form: KForm,
}

impl Connection1D {
    pub fn new(form: KForm) -> Result<Connection1D, PrincipalError> {
        if form.degree() != 1 {
            return Err(PrincipalError::WrongDegree(form.degree()));
        }
        Ok(Connection1D { form })
    }

    pub fn form(&self) -> &KForm {
        &self.form
    }
}

/// Residuals of the two connection invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionReport {
    /// sup |η(Y) - 1| over samples.
    pub pairing_residual: f64,
    /// sup of the components of L_Y η over samples.
    pub invariance_residual: f64,
}

impl ConnectionReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.pairing_residual <= tol && self.invariance_residual <= tol
    }
}

/// Checks η(Y) ≡ 1 and L_Y η = 0 on samples, reporting both residuals.
pub fn verify_connection(
    connection: &Connection1D,
    action: &FiberAction,
    sampler: &SampleSpec,
) -> Result<ConnectionReport, PrincipalError> {
    let eta = connection.form();
    if *eta.chart() != *action.chart() {
        return Err(GeomError::ChartMismatch.into());
    }
    let pairing = eta.pair(action.generator())?;
    let defect = pairing - crate::symexpr::Expr::one();
    let pairing_residual = defect.sup_on_samples(sampler).map_err(GeomError::from)?;
    let invariance_residual = eta
        .lie_derivative(action.generator())?
        .sup_on_samples(sampler)?;
    Ok(ConnectionReport {
        pairing_residual,
        invariance_residual,
    })
}

/// Horizontal part X - η(X)·Y. The result pairs to zero with η and has the
/// same pushforward as X.
pub fn horizontal_lift_field(
    field: &VectorField,
    connection: &Connection1D,
    action: &FiberAction,
) -> Result<VectorField, PrincipalError> {
    if *field.chart() != *action.chart() {
        return Err(GeomError::ChartMismatch.into());
    }
    let coefficient = connection.form().pair(field)?;
    let vertical = action.generator().scale_expr(&coefficient);
    Ok(field.sub(&vertical)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::Expr;

    fn sleigh_chart() -> Chart {
        Chart::builder()
            .linear("xi1")
            .linear("xi2")
            .periodic("theta0")
            .build()
            .unwrap()
    }

    fn x2(chart: &Chart) -> VectorField {
        VectorField::new(
            chart.clone(),
            vec![
                Expr::cos(Expr::coord("theta0")),
                Expr::sin(Expr::coord("theta0")),
                Expr::zero(),
            ],
        )
        .unwrap()
    }

    fn alpha3(chart: &Chart) -> Connection1D {
        Connection1D::new(
            KForm::one_form(
                chart.clone(),
                vec![Expr::zero(), Expr::one(), Expr::negate(Expr::coord("xi1"))],
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn sleigh_translation_projects_the_motion_field() {
        let chart = sleigh_chart();
        let sampler = chart.sample_spec(9);
        let action = FiberAction::new(chart.clone(), "xi2", GroupKind::AdditiveLine).unwrap();
        assert!(action.is_projectable(&x2(&chart), &sampler).unwrap());

        let reduced = action.pushforward(&x2(&chart), &sampler).unwrap();
        assert_eq!(reduced.chart().dim(), 2);
        let expected = VectorField::new(
            reduced.chart().clone(),
            vec![Expr::cos(Expr::coord("theta0")), Expr::zero()],
        )
        .unwrap();
        assert!(reduced
            .sub(&expected)
            .unwrap()
            .is_zero(&sampler, DEFAULT_ZERO_TOL)
            .unwrap());
    }

    #[test]
    fn fiber_dependent_coefficient_blocks_projection() {
        let chart = sleigh_chart();
        let sampler = chart.sample_spec(9);
        let action = FiberAction::new(chart.clone(), "xi2", GroupKind::AdditiveLine).unwrap();
        let bad = VectorField::new(
            chart.clone(),
            vec![Expr::coord("xi2"), Expr::zero(), Expr::zero()],
        )
        .unwrap();
        assert!(!action.is_projectable(&bad, &sampler).unwrap());
        assert!(matches!(
            action.pushforward(&bad, &sampler),
            Err(PrincipalError::NotProjectable { component }) if component == "xi1"
        ));
    }

    #[test]
    fn generator_projects_to_zero() {
        let chart = sleigh_chart();
        let sampler = chart.sample_spec(9);
        let action = FiberAction::new(chart.clone(), "xi2", GroupKind::AdditiveLine).unwrap();
        let pushed = action.pushforward(action.generator(), &sampler).unwrap();
        assert!(pushed.is_zero(&sampler, DEFAULT_ZERO_TOL).unwrap());
    }

    #[test]
    fn lift_of_generator_vanishes_and_lift_is_idempotent() {
        let chart = sleigh_chart();
        let sampler = chart.sample_spec(9);
        let action = FiberAction::new(chart.clone(), "xi2", GroupKind::AdditiveLine).unwrap();
        let conn = alpha3(&chart);

        let lifted_generator = horizontal_lift_field(action.generator(), &conn, &action).unwrap();
        assert!(lifted_generator
            .is_zero(&sampler, DEFAULT_ZERO_TOL)
            .unwrap());

        let lift1 = horizontal_lift_field(&x2(&chart), &conn, &action).unwrap();
        let lift2 = horizontal_lift_field(&lift1, &conn, &action).unwrap();
        assert!(lift1
            .sub(&lift2)
            .unwrap()
            .is_zero(&sampler, DEFAULT_ZERO_TOL)
            .unwrap());
        // The lift is annihilated by the connection.
        assert!(conn
            .form()
            .pair(&lift1)
            .unwrap()
            .is_zero(&sampler, DEFAULT_ZERO_TOL)
            .unwrap());
        // And it projects to the same reduced field.
        let a = action.pushforward(&lift1, &sampler).unwrap();
        let b = action.pushforward(&x2(&chart), &sampler).unwrap();
        assert!(a
            .sub(&b)
            .unwrap()
            .is_zero(&sampler, DEFAULT_ZERO_TOL)
            .unwrap());
    }

    #[test]
    fn connection_checks_pass_and_fail_where_expected() {
        let chart = sleigh_chart();
        let sampler = chart.sample_spec(9);
        let action = FiberAction::new(chart.clone(), "xi2", GroupKind::AdditiveLine).unwrap();

        let report = verify_connection(&alpha3(&chart), &action, &sampler).unwrap();
        assert!(report.pass(DEFAULT_ZERO_TOL), "{report:?}");

        // dxi1 pairs to 0 with d/dxi2, not 1.
        let wrong =
            Connection1D::new(KForm::coordinate_differential(chart.clone(), "xi1").unwrap())
                .unwrap();
        let report = verify_connection(&wrong, &action, &sampler).unwrap();
        assert!(!report.pass(DEFAULT_ZERO_TOL));
        assert!((report.pairing_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn group_kind_charts_convert_both_ways() {
        assert_eq!(GroupKind::AdditiveLine.to_additive(0.5).unwrap(), 0.5);
        let g = GroupKind::PositiveLine.to_additive(2.0).unwrap();
        assert!((g - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((GroupKind::PositiveLine.from_additive(g) - 2.0).abs() < 1e-15);
        assert!(GroupKind::PositiveLine.to_additive(-1.0).is_err());
    }
}
