//! Polar normal form r' = a(t)·r + r³, θ' = ω(t) + δ(t)·r on the punctured
//! plane R₊ × S¹. The angular translation is a circle action with
//! connection dθ; the reduced system is the scalar radial equation.

use super::{
    ClosureExpectation, ClosureProbe, ModelBundle, ModelError, ModelId, OutputColumn,
    OutputTransform, SystemTerm,
};
use crate::geometry::{Chart, KForm, VectorField};
use crate::ode::ControlSignal;
use crate::principal::{Connection1D, FiberAction, GroupKind};
use crate::symexpr::Expr;

pub fn bundle() -> Result<ModelBundle, ModelError> {
    let chart = Chart::builder()
        .linear_in("r", 0.25, 1.5)
        .periodic("theta")
        .build()?;
    let r = || Expr::coord("r");

    let x1 = VectorField::new(chart.clone(), vec![Expr::powi(r(), 3), Expr::zero()])?;
    let x2 = VectorField::new(chart.clone(), vec![r(), Expr::zero()])?;
    let x3 = VectorField::coordinate(chart.clone(), "theta")?;
    let x4 = VectorField::new(chart.clone(), vec![Expr::zero(), r()])?;
    let sym = x3.clone();

    let alpha = KForm::coordinate_differential(chart.clone(), "theta")?;
    let action = FiberAction::new(chart.clone(), "theta", GroupKind::Circle)?;
    let connection = Connection1D::new(alpha.clone())?;

    Ok(ModelBundle {
        id: ModelId::Hopf,
        chart,
        fields: vec![("X1", x1), ("X2", x2), ("X3", x3), ("X4", x4), ("Y", sym)],
        forms: vec![("alpha", alpha)],
        dual_frame: vec!["alpha"],
        frame_duals: vec!["Y"],
        system_terms: vec![
            SystemTerm {
                slot: None,
                field: "X1",
            },
            SystemTerm {
                slot: Some("a"),
                field: "X2",
            },
            SystemTerm {
                slot: Some("omega"),
                field: "X3",
            },
            SystemTerm {
                slot: Some("delta"),
                field: "X4",
            },
        ],
        control_slots: vec!["a", "omega", "delta"],
        default_controls: vec![
            ("a", ControlSignal::constant(-1.0)),
            ("omega", ControlSignal::constant(1.0)),
            ("delta", ControlSignal::constant(0.5)),
        ],
        symmetry_checks: vec![("Y", vec!["X1", "X2", "X3", "X4"])],
        invariant_form_checks: vec![],
        vg_basis: None,
        subtables: vec![],
        contact_forms: vec![],
        automorphic_frame: None,
        flag_expected: None,
        closure_probe: ClosureProbe {
            fields: vec!["X1", "X2", "X3", "X4"],
            max_depth: 5,
            max_dim: 8,
            expected: ClosureExpectation::NonClosure,
        },
        reduced_closure_dim: Some(2),
        action,
        connection,
        output_columns: vec![
            OutputColumn {
                coord: "r",
                column: "r",
                transform: OutputTransform::Identity,
            },
            OutputColumn {
                coord: "theta",
                column: "theta",
                transform: OutputTransform::Identity,
            },
        ],
        default_initial: vec![("r", 0.5), ("theta", 0.0)],
        singular_notes: "r = 0 collapses the radial frame; default sampling keeps r >= 0.25",
    })
}
