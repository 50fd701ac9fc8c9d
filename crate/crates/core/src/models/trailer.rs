//! Trailer-chain kinematics on R² × (S¹)^{n+1}: a leading car towing n
//! trailers, coordinates (xi1, xi2) for the last trailer's position and
//! theta_0 ... theta_n for the axle angles. The constraint distribution is
//! spanned by the steering field X1 = d/dtheta_n and the rolling field X2
//! built from chained cosine projections.

use super::{
    ClosureExpectation, ClosureProbe, ModelBundle, ModelError, ModelId, NamedTable, OutputColumn,
    OutputTransform, SystemTerm,
};
use crate::geometry::{Chart, CoordSpec, KForm, VectorField};
use crate::liealg::StructureTable;
use crate::ode::ControlSignal;
use crate::principal::{Connection1D, FiberAction, GroupKind};
use crate::symexpr::Expr;

fn theta(i: u32) -> Expr {
    Expr::coord(format!("theta{i}"))
}

/// theta_j - theta_{j-1}.
fn angle_step(j: u32) -> Expr {
    theta(j) - theta(j - 1)
}

/// pi_i = prod_{j=i+1}^{n} cos(theta_j - theta_{j-1}); pi_n = 1.
fn pi_factor(i: u32, n: u32) -> Expr {
    Expr::product(((i + 1)..=n).map(|j| Expr::cos(angle_step(j))).collect())
}

/// Chart for the n-trailer system. Angle sampling is kept inside a window
/// where consecutive axles stay within a quarter turn of each other, away
/// from the jackknife loci cos(theta_j - theta_{j-1}) = 0.
pub fn trailer_chart(n: u32) -> Chart {
    let mut coords = vec![CoordSpec::linear("xi1"), CoordSpec::linear("xi2")];
    for i in 0..=n {
        let spec = CoordSpec::periodic(format!("theta{i}"));
        coords.push(if n >= 1 {
            spec.with_range(0.0, 1.3)
        } else {
            spec
        });
    }
    Chart::new(coords).expect("trailer coordinates are distinct")
}

/// The two constraint-distribution generators of the n-trailer system.
pub fn trailer_generators(n: u32) -> (Chart, VectorField, VectorField) {
    let chart = trailer_chart(n);
    let x1 = VectorField::coordinate(chart.clone(), &format!("theta{n}"))
        .expect("steering coordinate exists");

    // X2 = pi_0 cos(theta0) d/dxi1 + pi_0 sin(theta0) d/dxi2
    //      + sum_{i=0}^{n-1} pi_{i+1} sin(theta_{i+1} - theta_i) d/dtheta_i
    let mut components = vec![
        pi_factor(0, n) * Expr::cos(theta(0)),
        pi_factor(0, n) * Expr::sin(theta(0)),
    ];
    for i in 0..n {
        components.push(pi_factor(i + 1, n) * Expr::sin(angle_step(i + 1)));
    }
    components.push(Expr::zero()); // d/dtheta_n
    let x2 = VectorField::new(chart.clone(), components).expect("component count matches");
    (chart, x1, x2)
}

fn field(chart: &Chart, comps: Vec<Expr>) -> Result<VectorField, ModelError> {
    Ok(VectorField::new(chart.clone(), comps)?)
}

fn one_form(chart: &Chart, coeffs: Vec<Expr>) -> Result<KForm, ModelError> {
    Ok(KForm::one_form(chart.clone(), coeffs)?)
}

fn trailer_controls() -> Vec<(&'static str, ControlSignal)> {
    vec![
        (
            "b1",
            ControlSignal::Sinusoid {
                amplitude: 1.0,
                omega: 1.0,
                phase: 0.0,
                offset: 1.0,
            },
        ),
        (
            "b2",
            ControlSignal::Sinusoid {
                amplitude: 1.0,
                omega: 1.0,
                phase: std::f64::consts::FRAC_PI_2,
                offset: 0.0,
            },
        ),
    ]
}

/// n = 0: the sleigh case on R² × S¹. The frame (X1, X2, X3) spans the
/// tangent space everywhere, alpha2 and alpha3 are contact forms, and the
/// fiber translation along xi2 reduces the system to R × S¹.
pub fn sleigh_bundle() -> Result<ModelBundle, ModelError> {
    let (chart, x1, x2) = trailer_generators(0);
    let sin0 = || Expr::sin(theta(0));
    let cos0 = || Expr::cos(theta(0));

    let x3 = field(&chart, vec![Expr::negate(sin0()), cos0(), Expr::zero()])?;
    let y1 = field(
        &chart,
        vec![
            Expr::negate(Expr::coord("xi2")),
            Expr::coord("xi1"),
            Expr::one(),
        ],
    )?;
    let y2 = VectorField::coordinate(chart.clone(), "xi1")?;
    let y3 = VectorField::coordinate(chart.clone(), "xi2")?;

    let alpha1 = one_form(&chart, vec![Expr::zero(), Expr::zero(), Expr::one()])?;
    let alpha2 = one_form(&chart, vec![Expr::one(), Expr::zero(), Expr::coord("xi2")])?;
    let alpha3 = one_form(
        &chart,
        vec![Expr::zero(), Expr::one(), Expr::negate(Expr::coord("xi1"))],
    )?;

    let mut expected = StructureTable::new(3);
    expected.set(0, 1, 2, 1.0); // [X1, X2] = X3
    expected.set(0, 2, 1, -1.0); // [X1, X3] = -X2

    let mut y_table = StructureTable::new(3);
    y_table.set(0, 1, 2, -1.0);
    y_table.set(0, 2, 1, 1.0);

    let action = FiberAction::new(chart.clone(), "xi2", GroupKind::AdditiveLine)?;
    let connection = Connection1D::new(alpha3.clone())?;

    Ok(ModelBundle {
        id: ModelId::Trailer(0),
        chart,
        fields: vec![
            ("X1", x1),
            ("X2", x2),
            ("X3", x3),
            ("Y1", y1),
            ("Y2", y2),
            ("Y3", y3),
        ],
        forms: vec![("alpha1", alpha1), ("alpha2", alpha2), ("alpha3", alpha3)],
        dual_frame: vec!["alpha1", "alpha2", "alpha3"],
        frame_duals: vec!["Y1", "Y2", "Y3"],
        system_terms: vec![
            SystemTerm {
                slot: Some("b1"),
                field: "X1",
            },
            SystemTerm {
                slot: Some("b2"),
                field: "X2",
            },
        ],
        control_slots: vec!["b1", "b2"],
        default_controls: trailer_controls(),
        symmetry_checks: vec![
            ("Y1", vec!["X1", "X2", "X3"]),
            ("Y2", vec!["X1", "X2", "X3"]),
            ("Y3", vec!["X1", "X2", "X3"]),
        ],
        invariant_form_checks: vec![
            ("alpha2", vec!["X1", "X2", "X3"]),
            ("alpha3", vec!["X1", "X2", "X3"]),
        ],
        vg_basis: Some((vec!["X1", "X2", "X3"], expected)),
        subtables: vec![NamedTable {
            label: "symmetry frame",
            fields: vec!["Y1", "Y2", "Y3"],
            table: y_table,
        }],
        contact_forms: vec!["alpha2", "alpha3"],
        automorphic_frame: Some(vec!["X1", "X2", "X3"]),
        flag_expected: Some(vec![2, 3]),
        closure_probe: ClosureProbe {
            fields: vec!["X1", "X2"],
            max_depth: 5,
            max_dim: 8,
            expected: ClosureExpectation::Dimension(3),
        },
        reduced_closure_dim: Some(3),
        action,
        connection,
        output_columns: vec![
            OutputColumn {
                coord: "xi1",
                column: "xi1",
                transform: OutputTransform::Identity,
            },
            OutputColumn {
                coord: "xi2",
                column: "xi2",
                transform: OutputTransform::Identity,
            },
            OutputColumn {
                coord: "theta0",
                column: "theta0",
                transform: OutputTransform::Identity,
            },
        ],
        default_initial: vec![("xi1", 1.0), ("xi2", 0.0), ("theta0", 0.5)],
        singular_notes: "none: the frame is global on R^2 x S^1",
    })
}

/// n = 1 on R² × T². The six-field algebra is not locally automorphic, but
/// the combinations Z1 = X1 + X4, Z2 = X2 + X6, Z3 = X3 - X5 together with
/// X4 form a frame whose dual carries the connection.
pub fn one_trailer_bundle() -> Result<ModelBundle, ModelError> {
    let (chart, x1, x2) = trailer_generators(1);
    let sin0 = || Expr::sin(theta(0));
    let cos0 = || Expr::cos(theta(0));
    let s01 = || Expr::sin(angle_step(1));
    let c01 = || Expr::cos(angle_step(1));

    let x3 = field(
        &chart,
        vec![
            Expr::negate(s01() * cos0()),
            Expr::negate(s01() * sin0()),
            c01(),
            Expr::zero(),
        ],
    )?;
    let x4 = field(
        &chart,
        vec![sin0(), Expr::negate(cos0()), Expr::one(), Expr::zero()],
    )?;
    let x5 = field(
        &chart,
        vec![
            c01() * sin0(),
            Expr::negate(c01() * cos0()),
            c01(),
            Expr::zero(),
        ],
    )?;
    let x6 = field(
        &chart,
        vec![
            Expr::negate(s01() * sin0()),
            s01() * cos0(),
            Expr::negate(s01()),
            Expr::zero(),
        ],
    )?;

    let z1 = x1.add(&x4)?;
    let z2 = x2.add(&x6)?;
    let z3 = x3.sub(&x5)?;

    let y1 = field(
        &chart,
        vec![
            Expr::negate(Expr::coord("xi2")),
            Expr::coord("xi1"),
            Expr::one(),
            Expr::one(),
        ],
    )?;
    let y2 = VectorField::coordinate(chart.clone(), "xi1")?;
    let y3 = VectorField::coordinate(chart.clone(), "xi2")?;
    let y4 = x4.clone();

    let alpha1 = one_form(
        &chart,
        vec![Expr::zero(), Expr::zero(), Expr::zero(), Expr::one()],
    )?;
    // alpha2 = dxi1 + xi2 dtheta1 - sin(theta0)(dtheta0 - dtheta1)
    let alpha2 = one_form(
        &chart,
        vec![
            Expr::one(),
            Expr::zero(),
            Expr::negate(sin0()),
            Expr::coord("xi2") + sin0(),
        ],
    )?;
    // alpha3 = dxi2 + cos(theta0)(dtheta0 - dtheta1) - xi1 dtheta1
    let alpha3 = one_form(
        &chart,
        vec![
            Expr::zero(),
            Expr::one(),
            cos0(),
            Expr::negate(cos0()) - Expr::coord("xi1"),
        ],
    )?;
    let alpha4 = one_form(
        &chart,
        vec![
            Expr::zero(),
            Expr::zero(),
            Expr::one(),
            Expr::constant(-1.0),
        ],
    )?;

    let mut expected = StructureTable::new(6);
    expected.set(0, 1, 2, 1.0); // [X1, X2] = X3
    expected.set(0, 2, 1, -1.0); // [X1, X3] = -X2
    expected.set(0, 4, 5, 1.0); // [X1, X5] = X6
    expected.set(0, 5, 4, -1.0); // [X1, X6] = -X5
    expected.set(1, 2, 3, 1.0); // [X2, X3] = X4
    expected.set(1, 3, 4, 1.0); // [X2, X4] = X5
    expected.set(1, 4, 3, 1.0); // [X2, X5] = X4
    expected.set(2, 3, 5, 1.0); // [X3, X4] = X6
    expected.set(2, 5, 3, 1.0); // [X3, X6] = X4
    expected.set(3, 4, 5, -1.0); // [X4, X5] = -X6
    expected.set(3, 5, 4, 1.0); // [X4, X6] = X5
    expected.set(4, 5, 3, 1.0); // [X5, X6] = X4

    let mut z_table = StructureTable::new(4);
    z_table.set(0, 1, 2, 1.0); // [Z1, Z2] = Z3
    z_table.set(0, 2, 1, -1.0); // [Z1, Z3] = -Z2

    let mut sl2_table = StructureTable::new(3);
    sl2_table.set(0, 1, 2, -1.0); // [X4, X5] = -X6
    sl2_table.set(0, 2, 1, 1.0); // [X4, X6] = X5
    sl2_table.set(1, 2, 0, 1.0); // [X5, X6] = X4

    let mut y_table = StructureTable::new(4);
    y_table.set(0, 1, 2, -1.0);
    y_table.set(0, 2, 1, 1.0);

    let action = FiberAction::new(chart.clone(), "xi2", GroupKind::AdditiveLine)?;
    let connection = Connection1D::new(alpha3.clone())?;

    Ok(ModelBundle {
        id: ModelId::Trailer(1),
        chart,
        fields: vec![
            ("X1", x1),
            ("X2", x2),
            ("X3", x3),
            ("X4", x4),
            ("X5", x5),
            ("X6", x6),
            ("Z1", z1),
            ("Z2", z2),
            ("Z3", z3),
            ("Y1", y1),
            ("Y2", y2),
            ("Y3", y3),
            ("Y4", y4),
        ],
        forms: vec![
            ("alpha1", alpha1),
            ("alpha2", alpha2),
            ("alpha3", alpha3),
            ("alpha4", alpha4),
        ],
        dual_frame: vec!["alpha1", "alpha2", "alpha3", "alpha4"],
        frame_duals: vec!["Y1", "Y2", "Y3", "Y4"],
        system_terms: vec![
            SystemTerm {
                slot: Some("b1"),
                field: "X1",
            },
            SystemTerm {
                slot: Some("b2"),
                field: "X2",
            },
        ],
        control_slots: vec!["b1", "b2"],
        default_controls: trailer_controls(),
        symmetry_checks: vec![
            ("Y1", vec!["Z1", "Z2", "Z3", "X4"]),
            (
                "Y2",
                vec!["Z1", "Z2", "Z3", "X4", "X1", "X2", "X3", "X5", "X6"],
            ),
            (
                "Y3",
                vec!["Z1", "Z2", "Z3", "X4", "X1", "X2", "X3", "X5", "X6"],
            ),
            ("Y4", vec!["Z1", "Z2", "Z3", "X4"]),
        ],
        invariant_form_checks: vec![
            ("alpha2", vec!["X1", "X2", "X3", "X4", "X5", "X6"]),
            ("alpha3", vec!["X1", "X2", "X3", "X4", "X5", "X6"]),
        ],
        vg_basis: Some((vec!["X1", "X2", "X3", "X4", "X5", "X6"], expected)),
        subtables: vec![
            NamedTable {
                label: "Z frame",
                fields: vec!["Z1", "Z2", "Z3", "X4"],
                table: z_table,
            },
            NamedTable {
                label: "X4 X5 X6",
                fields: vec!["X4", "X5", "X6"],
                table: sl2_table,
            },
            NamedTable {
                label: "symmetry frame",
                fields: vec!["Y1", "Y2", "Y3", "Y4"],
                table: y_table,
            },
        ],
        contact_forms: vec![],
        automorphic_frame: Some(vec!["Z1", "Z2", "Z3", "X4"]),
        flag_expected: Some(vec![2, 3, 4]),
        closure_probe: ClosureProbe {
            fields: vec!["X1", "X2"],
            max_depth: 6,
            max_dim: 10,
            expected: ClosureExpectation::Dimension(6),
        },
        reduced_closure_dim: None,
        action,
        connection,
        output_columns: vec![
            OutputColumn {
                coord: "xi1",
                column: "xi1",
                transform: OutputTransform::Identity,
            },
            OutputColumn {
                coord: "xi2",
                column: "xi2",
                transform: OutputTransform::Identity,
            },
            OutputColumn {
                coord: "theta0",
                column: "theta0",
                transform: OutputTransform::Identity,
            },
            OutputColumn {
                coord: "theta1",
                column: "theta1",
                transform: OutputTransform::Identity,
            },
        ],
        default_initial: vec![("xi1", 1.0), ("xi2", 0.0), ("theta0", 0.4), ("theta1", 0.9)],
        singular_notes: "cos(theta1 - theta0) = 0 degrades flag genericity; \
                         default sampling keeps the angle difference inside (-1.3, 1.3)",
    })
}
