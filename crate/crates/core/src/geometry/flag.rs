use nalgebra::DMatrix;

use super::{GeomError, VectorField};
use crate::symexpr::{Point, SampleSpec};

/// Relative singular-value cutoff for rank decisions. Components are exact
/// trigonometric polynomials evaluated in double precision, so true rank
/// gaps sit many orders of magnitude above roundoff.
pub const RANK_REL_TOL: f64 = 1e-8;

// Singular values falling in this band around the cutoff make the rank
// decision untrustworthy; the point is resampled.
const AMBIGUOUS_LO: f64 = 1e-11;
const AMBIGUOUS_HI: f64 = 1e-5;

/// Ranks of the derived flag `D ⊂ D + [D,D] ⊂ ...` evaluated at several
/// sampled points.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagProfile {
    /// Element-wise maximum over the per-point profiles.
    pub ranks: Vec<usize>,
    /// False when the sampled points disagreed (singular loci present).
    pub unanimous: bool,
    /// The individual profile per sampled point.
    pub per_point: Vec<Vec<usize>>,
}

enum RankOutcome {
    Rank(usize),
    Ambiguous,
}

fn eval_matrix(fields: &[VectorField], point: &Point) -> Result<DMatrix<f64>, GeomError> {
    let dim = fields[0].chart().dim();
    let mut mat = DMatrix::zeros(dim, fields.len());
    for (j, f) in fields.iter().enumerate() {
        let col = f.evaluate(point)?;
        for (i, v) in col.iter().enumerate() {
            mat[(i, j)] = *v;
        }
    }
    Ok(mat)
}

fn rank_of(mat: &DMatrix<f64>) -> RankOutcome {
    let svd = mat.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return RankOutcome::Rank(0);
    }
    let mut rank = 0;
    for s in svd.singular_values.iter() {
        let rel = s / max;
        if rel > AMBIGUOUS_LO && rel < AMBIGUOUS_HI {
            return RankOutcome::Ambiguous;
        }
        if rel >= RANK_REL_TOL {
            rank += 1;
        }
    }
    RankOutcome::Rank(rank)
}

/// Greedy spanning subset of `fields` at `point`: modified Gram-Schmidt
/// over the fields ordered by expression size (ties by position), so the
/// spanning set feeding the next bracket level stays as small as possible.
fn spanning_subset(fields: &[VectorField], point: &Point) -> Result<Vec<VectorField>, GeomError> {
    let dim = fields[0].chart().dim();
    let mut order: Vec<usize> = (0..fields.len()).collect();
    let size_of = |f: &VectorField| -> usize { f.components().iter().map(|c| c.size()).sum() };
    let sizes: Vec<usize> = fields.iter().map(size_of).collect();
    order.sort_by_key(|&i| (sizes[i], i));

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for &idx in &order {
        let f = &fields[idx];
        let mut v = f.evaluate(point)?;
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (x, c) in v.iter_mut().zip(b) {
                *x -= dot * c;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > RANK_REL_TOL * norm0.max(1.0) {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
            kept.push(f.clone());
            if kept.len() == dim {
                break;
            }
        }
    }
    Ok(kept)
}

/// Derived-flag ranks at a single point. Each level adjoins the pairwise
/// brackets of a spanning set of the previous level; ranks come from the
/// singular values of the evaluated component matrix. Stops at full rank,
/// at a rank plateau, or after `max_level` growth steps.
pub fn derived_flag_ranks_at(
    generators: &[VectorField],
    max_level: usize,
    point: &Point,
) -> Result<Vec<usize>, GeomError> {
    match flag_ranks_inner(generators, max_level, point)? {
        RanksOrAmbiguous::Ranks(r) => Ok(r),
        RanksOrAmbiguous::Ambiguous => Err(GeomError::DegeneratePoint { resamples: 1 }),
    }
}

enum RanksOrAmbiguous {
    Ranks(Vec<usize>),
    Ambiguous,
}

fn flag_ranks_inner(
    generators: &[VectorField],
    max_level: usize,
    point: &Point,
) -> Result<RanksOrAmbiguous, GeomError> {
    if generators.is_empty() {
        return Err(GeomError::EmptyGenerators);
    }
    let chart = generators[0].chart().clone();
    for g in generators {
        if *g.chart() != chart {
            return Err(GeomError::ChartMismatch);
        }
    }
    let dim = chart.dim();

    let mut ranks = Vec::new();
    let mut spanning = generators.to_vec();
    let rank0 = match rank_of(&eval_matrix(&spanning, point)?) {
        RankOutcome::Rank(r) => r,
        RankOutcome::Ambiguous => return Ok(RanksOrAmbiguous::Ambiguous),
    };
    ranks.push(rank0);
    spanning = spanning_subset(&spanning, point)?;

    for _ in 0..max_level {
        if *ranks.last().unwrap() == dim {
            break;
        }
        let mut candidates = spanning.clone();
        for i in 0..spanning.len() {
            for j in (i + 1)..spanning.len() {
                candidates.push(spanning[i].lie_bracket(&spanning[j])?);
            }
        }
        let rank = match rank_of(&eval_matrix(&candidates, point)?) {
            RankOutcome::Rank(r) => r,
            RankOutcome::Ambiguous => return Ok(RanksOrAmbiguous::Ambiguous),
        };
        let stalled = rank == *ranks.last().unwrap();
        ranks.push(rank);
        if stalled || rank == dim {
            break;
        }
        spanning = spanning_subset(&candidates, point)?;
    }
    Ok(RanksOrAmbiguous::Ranks(ranks))
}

/// Flag profile over `points` generic points. A point whose rank decisions
/// are ambiguous is replaced (up to 5 attempts each); if the profiles then
/// disagree the maximum profile is reported with `unanimous = false`.
pub fn derived_flag_profile(
    generators: &[VectorField],
    max_level: usize,
    sampler: &SampleSpec,
    points: usize,
) -> Result<FlagProfile, GeomError> {
    if generators.is_empty() {
        return Err(GeomError::EmptyGenerators);
    }
    let chart = generators[0].chart().clone();
    let mut per_point = Vec::with_capacity(points);
    for slot in 0..points {
        let mut found = None;
        for attempt in 0u64..5 {
            let salted = sampler.reseeded((slot as u64) * 8 + attempt + 1);
            let point = salted
                .points_n(chart.names(), 1)
                .pop()
                .expect("one point requested");
            match flag_ranks_inner(generators, max_level, &point)? {
                RanksOrAmbiguous::Ranks(r) => {
                    found = Some(r);
                    break;
                }
                RanksOrAmbiguous::Ambiguous => continue,
            }
        }
        match found {
            Some(r) => per_point.push(r),
            None => return Err(GeomError::DegeneratePoint { resamples: 5 }),
        }
    }

    let len = per_point.iter().map(Vec::len).max().unwrap_or(0);
    let mut ranks = vec![0usize; len];
    for profile in &per_point {
        for (i, slot) in ranks.iter_mut().enumerate() {
            // A profile that stopped early stays at its final rank.
            let v = profile
                .get(i)
                .or_else(|| profile.last())
                .copied()
                .unwrap_or(0);
            *slot = (*slot).max(v);
        }
    }
    let unanimous = per_point.iter().all(|p| *p == per_point[0]);
    Ok(FlagProfile {
        ranks,
        unanimous,
        per_point,
    })
}
