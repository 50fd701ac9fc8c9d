use std::fmt;
use std::sync::Arc;

use super::GeomError;
use crate::symexpr::{Point, SampleSpec, DEFAULT_RANGE, PERIODIC_RANGE};

/// One coordinate of a chart: its name, whether it is circle-valued, and the
/// range used when sampling generic points.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordSpec {
    pub name: String,
    pub periodic: bool,
    pub range: (f64, f64),
}

impl CoordSpec {
    pub fn linear(name: impl Into<String>) -> Self {
        CoordSpec {
            name: name.into(),
            periodic: false,
            range: DEFAULT_RANGE,
        }
    }

    pub fn periodic(name: impl Into<String>) -> Self {
        CoordSpec {
            name: name.into(),
            periodic: true,
            range: PERIODIC_RANGE,
        }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = (lo, hi);
        self
    }
}

/// An ordered set of named coordinates. Cheap to clone; fields and forms
/// hold one.
#[derive(Clone)]
pub struct Chart {
    coords: Arc<[CoordSpec]>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chart[")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{}", c.name, if c.periodic { "°" } else { "" })?;
        }
        write!(f, "]")
    }
}

impl PartialEq for Chart {
    /// Charts agree when their coordinate names and periodicity flags agree;
    /// sampling ranges are tuning, not identity.
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.coords, &other.coords)
            || (self.coords.len() == other.coords.len()
                && self
                    .coords
                    .iter()
                    .zip(other.coords.iter())
                    .all(|(a, b)| a.name == b.name && a.periodic == b.periodic))
    }
}

impl Chart {
    pub fn new(coords: Vec<CoordSpec>) -> Result<Chart, GeomError> {
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].iter().any(|d| d.name == c.name) {
                return Err(GeomError::DuplicateCoordinate(c.name.clone()));
            }
        }
        Ok(Chart {
            coords: coords.into(),
        })
    }

    pub fn builder() -> ChartBuilder {
        ChartBuilder { coords: Vec::new() }
    }

    /// One-coordinate chart, used for scalar curves such as group elements.
    pub fn scalar(name: impl Into<String>) -> Chart {
        Chart {
            coords: vec![CoordSpec::linear(name)].into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[CoordSpec] {
        &self.coords
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coords.iter().map(|c| c.name.as_str())
    }

    pub fn name(&self, index: usize) -> &str {
        &self.coords[index].name
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GeomError> {
        self.coords
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| GeomError::UnknownCoordinate(name.to_string()))
    }

    /// Sampler drawing each coordinate from its chart range.
    pub fn sample_spec(&self, seed: u64) -> SampleSpec {
        let mut spec = SampleSpec::new(seed);
        for c in self.coords.iter() {
            spec = spec.with_range(c.name.clone(), c.range.0, c.range.1);
        }
        spec
    }

    pub fn point(&self, state: &[f64]) -> Result<Point, GeomError> {
        if state.len() != self.dim() {
            return Err(GeomError::StateLength {
                expected: self.dim(),
                got: state.len(),
            });
        }
        let mut p = Point::new();
        for (c, v) in self.coords.iter().zip(state) {
            p.insert(c.name.clone(), *v);
        }
        Ok(p)
    }

    pub fn state(&self, point: &Point) -> Result<Vec<f64>, GeomError> {
        self.coords
            .iter()
            .map(|c| {
                point
                    .get(&c.name)
                    .ok_or_else(|| GeomError::UnknownCoordinate(c.name.clone()))
            })
            .collect()
    }

    /// Chart with one coordinate removed (quotient by a fiber direction).
    pub fn without(&self, name: &str) -> Result<Chart, GeomError> {
        let idx = self.index_of(name)?;
        let coords: Vec<CoordSpec> = self
            .coords
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, c)| c.clone())
            .collect();
        Ok(Chart {
            coords: coords.into(),
        })
    }

    /// Wraps periodic components into [0, 2π).
    pub fn wrap_state(&self, state: &[f64]) -> Vec<f64> {
        state
            .iter()
            .zip(self.coords.iter())
            .map(|(v, c)| if c.periodic { wrap_angle(*v) } else { *v })
            .collect()
    }
}

/// Maps an unwrapped angle into [0, 2π).
pub(crate) fn wrap_angle(v: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = v.rem_euclid(tau);
    if w == tau {
        0.0
    } else {
        w
    }
}

pub struct ChartBuilder {
    coords: Vec<CoordSpec>,
}

impl ChartBuilder {
    pub fn linear(mut self, name: impl Into<String>) -> Self {
        self.coords.push(CoordSpec::linear(name));
        self
    }

    pub fn linear_in(mut self, name: impl Into<String>, lo: f64, hi: f64) -> Self {
        self.coords.push(CoordSpec::linear(name).with_range(lo, hi));
        self
    }

    pub fn periodic(mut self, name: impl Into<String>) -> Self {
        self.coords.push(CoordSpec::periodic(name));
        self
    }

    pub fn build(self) -> Result<Chart, GeomError> {
        Chart::new(self.coords)
    }
}
