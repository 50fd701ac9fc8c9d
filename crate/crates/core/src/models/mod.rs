//! Registry of the built-in systems: trailer chains (n = 0 is the sleigh
//! case), the Gambier-type system in its logarithmic chart, and the Hopf
//! normal form. A loaded bundle carries every named field, form, action and
//! connection of its model, plus the expectations (tables, flag profiles,
//! closure caps) that the verification layer checks against.
//!
//! Bundles self-verify on load: dual-frame pairings, connection invariants,
//! symmetry commutations and form invariance are all sampled, and the first
//! failure aborts the load with its residual.

mod gambier;
mod hopf;
mod trailer;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{Chart, GeomError, KForm, VectorField};
use crate::liealg::{LieError, StructureTable};
use crate::ode::{ControlSignal, OdeError, TDepVectorField};
use crate::principal::{Connection1D, FiberAction, PrincipalError};
use crate::symexpr::{SampleSpec, DEFAULT_ZERO_TOL};

pub use trailer::{trailer_chart, trailer_generators};

/// Seed used for the self-verification pass at load time.
const SELF_CHECK_SEED: u64 = 0xC0FFEE;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Principal(#[from] PrincipalError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
    #[error("model `{0}` has no registered bundle (flag profiles only)")]
    NotLoadable(ModelId),
    #[error("the multiplicative-chart model needs a non-zero integer parameter")]
    BadParameter,
    #[error("self-check `{check}` failed with residual {residual:.3e}")]
    SelfCheck { check: String, residual: f64 },
    #[error("model has no field named `{0}`")]
    UnknownField(String),
    #[error("model has no form named `{0}`")]
    UnknownForm(String),
    #[error("model has no control slot named `{0}`")]
    UnknownControl(String),
    #[error("initial condition does not name `{0}`")]
    MissingInitial(String),
    #[error("initial condition names unknown coordinate `{0}`")]
    UnknownInitial(String),
    #[error("initial value for `{name}` is invalid: {reason}")]
    BadInitial { name: String, reason: String },
}

/// Identifier of a model. Trailer counts above 1 are valid for flag-profile
/// queries but carry no registered bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelId {
    Trailer(u32),
    Gambier(i32),
    Hopf,
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Trailer(n) => write!(f, "trailer{n}"),
            ModelId::Gambier(n) => write!(f, "gambier({n})"),
            ModelId::Hopf => write!(f, "hopf"),
        }
    }
}

impl FromStr for ModelId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "hopf" {
            return Ok(ModelId::Hopf);
        }
        if let Some(rest) = s.strip_prefix("trailer") {
            if let Ok(n) = rest.parse::<u32>() {
                return Ok(ModelId::Trailer(n));
            }
        }
        if let Some(rest) = s.strip_prefix("gambier") {
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .unwrap_or(rest);
            if let Ok(n) = inner.parse::<i32>() {
                return Ok(ModelId::Gambier(n));
            }
        }
        Err(ModelError::UnknownModel(s.to_string()))
    }
}

/// One additive term of the t-dependent system: either bound to a named
/// control slot or a fixed drift term (implicit constant signal 1).
#[derive(Debug, Clone)]
pub struct SystemTerm {
    pub slot: Option<&'static str>,
    pub field: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureExpectation {
    Dimension(usize),
    NonClosure,
}

/// Caps and expectation for generating the bracket closure of the system's
/// constituent fields. Time-dependent spans are probed through the constant
/// fields themselves, which is what the finite-dimensionality criterion is
/// about.
#[derive(Debug, Clone)]
pub struct ClosureProbe {
    pub fields: Vec<&'static str>,
    pub max_depth: usize,
    pub max_dim: usize,
    pub expected: ClosureExpectation,
}

/// A named commutation table over a subset of the registry fields.
#[derive(Debug, Clone)]
pub struct NamedTable {
    pub label: &'static str,
    pub fields: Vec<&'static str>,
    pub table: StructureTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputTransform {
    Identity,
    /// Serialized value is exp(stored value); the model lives in a
    /// logarithmic chart internally.
    Exp,
}

impl OutputTransform {
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            OutputTransform::Identity => v,
            OutputTransform::Exp => v.exp(),
        }
    }

    pub fn invert(&self, v: f64) -> Option<f64> {
        match self {
            OutputTransform::Identity => Some(v),
            OutputTransform::Exp => (v > 0.0).then(|| v.ln()),
        }
    }
}

/// Mapping from one chart coordinate to its serialized column.
#[derive(Debug, Clone)]
pub struct OutputColumn {
    pub coord: &'static str,
    pub column: &'static str,
    pub transform: OutputTransform,
}

/// Everything known about one registered model.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub id: ModelId,
    pub chart: Chart,
    fields: Vec<(&'static str, VectorField)>,
    forms: Vec<(&'static str, KForm)>,
    /// Names of the forms making up the dual frame, aligned with
    /// `frame_duals`.
    pub dual_frame: Vec<&'static str>,
    /// Names of the fields the dual frame pairs against (delta pairing).
    pub frame_duals: Vec<&'static str>,
    pub system_terms: Vec<SystemTerm>,
    pub control_slots: Vec<&'static str>,
    pub default_controls: Vec<(&'static str, ControlSignal)>,
    /// (symmetry field, fields it must commute with).
    pub symmetry_checks: Vec<(&'static str, Vec<&'static str>)>,
    /// (form, fields whose Lie derivative of it must vanish).
    pub invariant_form_checks: Vec<(&'static str, Vec<&'static str>)>,
    /// Basis names + expected structure constants of the closed algebra,
    /// when the model has one.
    pub vg_basis: Option<(Vec<&'static str>, StructureTable)>,
    pub subtables: Vec<NamedTable>,
    /// Forms alpha with alpha ∧ d(alpha) nowhere zero (odd-dimensional
    /// models only).
    pub contact_forms: Vec<&'static str>,
    /// Frame whose evaluated component matrix must be invertible at generic
    /// points.
    pub automorphic_frame: Option<Vec<&'static str>>,
    pub flag_expected: Option<Vec<usize>>,
    pub closure_probe: ClosureProbe,
    /// Expected dimension of the closure of the reduced system's fields.
    pub reduced_closure_dim: Option<usize>,
    pub action: FiberAction,
    pub connection: Connection1D,
    pub output_columns: Vec<OutputColumn>,
    pub default_initial: Vec<(&'static str, f64)>,
    pub singular_notes: &'static str,
}

/// Test hook: negates one component of one registry field. Applied after
/// self-verification so that downstream checks, not the loader, report the
/// damage.
#[derive(Debug, Clone)]
pub struct Fault {
    pub field: String,
    pub component: String,
}

impl ModelBundle {
    /// Loads and self-verifies a bundle.
    pub fn load(id: ModelId) -> Result<ModelBundle, ModelError> {
        Self::load_with_faults(id, &[])
    }

    /// Loads, self-verifies, then injects `faults` (test hook).
    pub fn load_with_faults(id: ModelId, faults: &[Fault]) -> Result<ModelBundle, ModelError> {
        let mut bundle = match id {
            ModelId::Trailer(0) => trailer::sleigh_bundle()?,
            ModelId::Trailer(1) => trailer::one_trailer_bundle()?,
            ModelId::Trailer(_) => return Err(ModelError::NotLoadable(id)),
            ModelId::Gambier(0) => return Err(ModelError::BadParameter),
            ModelId::Gambier(n) => gambier::bundle(n)?,
            ModelId::Hopf => hopf::bundle()?,
        };
        bundle.self_verify()?;
        for fault in faults {
            bundle.apply_fault(fault)?;
        }
        Ok(bundle)
    }

    pub fn loadable_ids() -> Vec<ModelId> {
        vec![
            ModelId::Trailer(0),
            ModelId::Trailer(1),
            ModelId::Gambier(1),
            ModelId::Hopf,
        ]
    }

    pub fn field(&self, name: &str) -> Result<&VectorField, ModelError> {
        self.fields
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| ModelError::UnknownField(name.to_string()))
    }

    pub fn form(&self, name: &str) -> Result<&KForm, ModelError> {
        self.forms
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| ModelError::UnknownForm(name.to_string()))
    }

    pub fn field_names(&self) -> Vec<&'static str> {
        self.fields.iter().map(|(n, _)| *n).collect()
    }

    pub fn fields_by_names(&self, names: &[&str]) -> Result<Vec<VectorField>, ModelError> {
        names.iter().map(|n| self.field(n).cloned()).collect()
    }

    /// Sampler drawing from this model's chart ranges (singular loci are
    /// excluded by the ranges themselves).
    pub fn sampler(&self, seed: u64) -> SampleSpec {
        self.chart.sample_spec(seed)
    }

    /// Control signals with defaults filled in; unknown names are rejected.
    pub fn resolve_controls(
        &self,
        given: &BTreeMap<String, ControlSignal>,
    ) -> Result<Vec<(&'static str, ControlSignal)>, ModelError> {
        for name in given.keys() {
            if !self.control_slots.iter().any(|s| s == name) {
                return Err(ModelError::UnknownControl(name.clone()));
            }
        }
        Ok(self
            .default_controls
            .iter()
            .map(|(slot, default)| {
                let signal = given.get(*slot).cloned().unwrap_or_else(|| default.clone());
                (*slot, signal)
            })
            .collect())
    }

    /// The t-dependent system with the supplied control signals (drift
    /// terms keep their implicit constant 1).
    pub fn system(
        &self,
        given: &BTreeMap<String, ControlSignal>,
    ) -> Result<TDepVectorField, ModelError> {
        let controls = self.resolve_controls(given)?;
        let terms = self
            .system_terms
            .iter()
            .map(|term| {
                let signal = match term.slot {
                    None => ControlSignal::constant(1.0),
                    Some(slot) => controls
                        .iter()
                        .find(|(s, _)| *s == slot)
                        .map(|(_, sig)| sig.clone())
                        .expect("system slots are a subset of control slots"),
                };
                Ok((signal, self.field(term.field)?.clone()))
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(TDepVectorField::new(terms)?)
    }

    /// The constituent fields of the system, in term order.
    pub fn system_fields(&self) -> Result<Vec<VectorField>, ModelError> {
        self.system_terms
            .iter()
            .map(|t| self.field(t.field).cloned())
            .collect()
    }

    /// Initial state from serialized column values (defaults filled in,
    /// inverse transforms applied, unknown or missing names rejected).
    pub fn initial_state(&self, given: &BTreeMap<String, f64>) -> Result<Vec<f64>, ModelError> {
        for name in given.keys() {
            if !self.output_columns.iter().any(|c| c.column == name) {
                return Err(ModelError::UnknownInitial(name.clone()));
            }
        }
        self.output_columns
            .iter()
            .map(|col| {
                let value = given
                    .get(col.column)
                    .copied()
                    .or_else(|| {
                        self.default_initial
                            .iter()
                            .find(|(n, _)| *n == col.column)
                            .map(|(_, v)| *v)
                    })
                    .ok_or_else(|| ModelError::MissingInitial(col.column.to_string()))?;
                col.transform
                    .invert(value)
                    .ok_or_else(|| ModelError::BadInitial {
                        name: col.column.to_string(),
                        reason: format!("{value} is outside the coordinate's domain"),
                    })
            })
            .collect()
    }

    /// Column spec for a trajectory on the quotient chart (fiber dropped).
    pub fn reduced_output_columns(&self) -> Vec<OutputColumn> {
        let fiber = self.action.fiber_name();
        self.output_columns
            .iter()
            .filter(|c| c.coord != fiber)
            .cloned()
            .collect()
    }

    fn apply_fault(&mut self, fault: &Fault) -> Result<(), ModelError> {
        let chart = self.chart.clone();
        let idx = chart.index_of(&fault.component)?;
        let entry = self
            .fields
            .iter_mut()
            .find(|(n, _)| *n == fault.field)
            .ok_or_else(|| ModelError::UnknownField(fault.field.clone()))?;
        let mut comps: Vec<_> = entry.1.components().to_vec();
        comps[idx] = crate::symexpr::Expr::negate(comps[idx].clone());
        entry.1 = VectorField::new(chart, comps)?;
        Ok(())
    }

    /// Sampled verification of the registry data itself: dual-frame
    /// pairings, connection invariants, symmetry commutations, invariant
    /// forms. The first failing check aborts with its residual.
    fn self_verify(&self) -> Result<(), ModelError> {
        let sampler = self.sampler(SELF_CHECK_SEED);

        for (i, form_name) in self.dual_frame.iter().enumerate() {
            let form = self.form(form_name)?;
            for (j, dual_name) in self.frame_duals.iter().enumerate() {
                let dual = self.field(dual_name)?;
                let delta = if i == j { 1.0 } else { 0.0 };
                let defect = form.pair(dual)? - crate::symexpr::Expr::constant(delta);
                let residual = defect.sup_on_samples(&sampler).map_err(GeomError::from)?;
                if residual > DEFAULT_ZERO_TOL {
                    return Err(ModelError::SelfCheck {
                        check: format!("dual-frame pairing {form_name}({dual_name})"),
                        residual,
                    });
                }
            }
        }

        let conn = crate::principal::verify_connection(&self.connection, &self.action, &sampler)?;
        if !conn.pass(DEFAULT_ZERO_TOL) {
            return Err(ModelError::SelfCheck {
                check: "connection invariants".to_string(),
                residual: conn.pairing_residual.max(conn.invariance_residual),
            });
        }

        for (sym_name, targets) in &self.symmetry_checks {
            let sym = self.field(sym_name)?;
            for target_name in targets {
                let target = self.field(target_name)?;
                let residual = sym.lie_derivative(target)?.sup_on_samples(&sampler)?;
                if residual > DEFAULT_ZERO_TOL {
                    return Err(ModelError::SelfCheck {
                        check: format!("symmetry L_{sym_name} {target_name}"),
                        residual,
                    });
                }
            }
        }

        for (form_name, field_names) in &self.invariant_form_checks {
            let form = self.form(form_name)?;
            for field_name in field_names {
                let field = self.field(field_name)?;
                let residual = form.lie_derivative(field)?.sup_on_samples(&sampler)?;
                if residual > DEFAULT_ZERO_TOL {
                    return Err(ModelError::SelfCheck {
                        check: format!("invariance L_{field_name} {form_name}"),
                        residual,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_ids_round_trip_through_strings() {
        for (s, id) in [
            ("trailer0", ModelId::Trailer(0)),
            ("trailer1", ModelId::Trailer(1)),
            ("trailer4", ModelId::Trailer(4)),
            ("gambier(1)", ModelId::Gambier(1)),
            ("gambier(-2)", ModelId::Gambier(-2)),
            ("hopf", ModelId::Hopf),
        ] {
            assert_eq!(ModelId::from_str(s).unwrap(), id);
        }
        assert_eq!(ModelId::Gambier(3).to_string(), "gambier(3)");
        assert!(ModelId::from_str("carousel").is_err());
    }

    #[test]
    fn every_registered_bundle_loads_and_self_verifies() {
        for id in ModelBundle::loadable_ids() {
            let bundle = ModelBundle::load(id).unwrap();
            assert_eq!(bundle.id, id);
            assert_eq!(bundle.dual_frame.len(), bundle.frame_duals.len());
        }
    }

    #[test]
    fn unknown_and_unloadable_ids_error() {
        assert!(matches!(
            ModelBundle::load(ModelId::Trailer(2)),
            Err(ModelError::NotLoadable(_))
        ));
        assert!(matches!(
            ModelBundle::load(ModelId::Gambier(0)),
            Err(ModelError::BadParameter)
        ));
    }

    #[test]
    fn registered_tables_verify_against_their_fields() {
        for id in ModelBundle::loadable_ids() {
            let bundle = ModelBundle::load(id).unwrap();
            let sampler = bundle.sampler(17);
            if let Some((names, expected)) = &bundle.vg_basis {
                let fields = bundle.fields_by_names(names).unwrap();
                let report =
                    crate::liealg::verify_table(&fields, names, expected, &sampler, 1e-9).unwrap();
                assert!(report.pass, "{id} main table: {:?}", report.max_residual);
            }
            for sub in &bundle.subtables {
                let fields = bundle.fields_by_names(&sub.fields).unwrap();
                let report =
                    crate::liealg::verify_table(&fields, &sub.fields, &sub.table, &sampler, 1e-9)
                        .unwrap();
                assert!(
                    report.pass,
                    "{id} subtable {}: max residual {:.3e}",
                    sub.label, report.max_residual
                );
            }
        }
    }

    #[test]
    fn faults_apply_after_verification() {
        let fault = Fault {
            field: "X3".to_string(),
            component: "xi1".to_string(),
        };
        let bundle = ModelBundle::load_with_faults(ModelId::Trailer(0), &[fault]).unwrap();
        // The corrupted field no longer matches the bracket of the
        // generators.
        let sampler = bundle.sampler(3);
        let x1 = bundle.field("X1").unwrap();
        let x2 = bundle.field("X2").unwrap();
        let x3 = bundle.field("X3").unwrap();
        let defect = x1.lie_bracket(x2).unwrap().sub(x3).unwrap();
        assert!(!defect.is_zero(&sampler, DEFAULT_ZERO_TOL).unwrap());
    }

    #[test]
    fn controls_resolve_defaults_and_reject_unknowns() {
        let bundle = ModelBundle::load(ModelId::Trailer(0)).unwrap();
        let resolved = bundle.resolve_controls(&BTreeMap::new()).unwrap();
        assert_eq!(resolved.len(), 2);

        let mut bogus = BTreeMap::new();
        bogus.insert("b9".to_string(), ControlSignal::constant(1.0));
        assert!(matches!(
            bundle.resolve_controls(&bogus),
            Err(ModelError::UnknownControl(n)) if n == "b9"
        ));
    }
}
