//! Planar system x' = n·x·y, y' = -y² + a1(t)·y + a2(t) on the half-plane
//! x > 0, handled entirely in the logarithmic chart s = log x where the
//! scaling symmetry x d/dx becomes d/ds, the scaling action becomes a
//! translation, and the connection x⁻¹dx becomes ds. The x column is
//! exponentiated only at serialization.

use super::{
    ClosureExpectation, ClosureProbe, ModelBundle, ModelError, ModelId, OutputColumn,
    OutputTransform, SystemTerm,
};
use crate::geometry::{Chart, KForm, VectorField};
use crate::ode::ControlSignal;
use crate::principal::{Connection1D, FiberAction, GroupKind};
use crate::symexpr::Expr;

pub fn bundle(n: i32) -> Result<ModelBundle, ModelError> {
    let chart = Chart::builder()
        .linear_in("s", -1.5, 1.5)
        .linear_in("y", -1.5, 1.5)
        .build()?;
    let y = || Expr::coord("y");

    // Drift n·y d/ds - y² d/dy plus the two control directions of the
    // quadratic equation.
    let x1 = VectorField::new(
        chart.clone(),
        vec![
            Expr::constant(n as f64) * y(),
            Expr::negate(Expr::powi(y(), 2)),
        ],
    )?;
    let x2 = VectorField::new(chart.clone(), vec![Expr::zero(), y()])?;
    let x3 = VectorField::coordinate(chart.clone(), "y")?;
    let sym = VectorField::coordinate(chart.clone(), "s")?;

    let alpha = KForm::coordinate_differential(chart.clone(), "s")?;
    let action = FiberAction::new(chart.clone(), "s", GroupKind::PositiveLine)?;
    let connection = Connection1D::new(alpha.clone())?;

    Ok(ModelBundle {
        id: ModelId::Gambier(n),
        chart,
        fields: vec![("X1", x1), ("X2", x2), ("X3", x3), ("Y", sym)],
        forms: vec![("alpha", alpha)],
        dual_frame: vec!["alpha"],
        frame_duals: vec!["Y"],
        system_terms: vec![
            SystemTerm {
                slot: None,
                field: "X1",
            },
            SystemTerm {
                slot: Some("a1"),
                field: "X2",
            },
            SystemTerm {
                slot: Some("a2"),
                field: "X3",
            },
        ],
        control_slots: vec!["a1", "a2"],
        default_controls: vec![
            ("a1", ControlSignal::constant(0.3)),
            (
                "a2",
                ControlSignal::Sinusoid {
                    amplitude: 0.3,
                    omega: 1.0,
                    phase: 0.0,
                    offset: 0.0,
                },
            ),
        ],
        symmetry_checks: vec![("Y", vec!["X1", "X2", "X3"])],
        invariant_form_checks: vec![],
        vg_basis: None,
        subtables: vec![],
        contact_forms: vec![],
        automorphic_frame: None,
        flag_expected: None,
        closure_probe: ClosureProbe {
            fields: vec!["X1", "X2", "X3"],
            max_depth: 5,
            max_dim: 8,
            expected: ClosureExpectation::NonClosure,
        },
        reduced_closure_dim: Some(3),
        action,
        connection,
        output_columns: vec![
            OutputColumn {
                coord: "s",
                column: "x",
                transform: OutputTransform::Exp,
            },
            OutputColumn {
                coord: "y",
                column: "y",
                transform: OutputTransform::Identity,
            },
        ],
        default_initial: vec![("x", 1.0), ("y", 0.5)],
        singular_notes: "x > 0 is enforced by the logarithmic chart",
    })
}
