//! The selection unit: combines per-BS minimum-distance reports into the
//! candidate each BS cancels with.

use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::coding::Constellation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum SuStrategy {
    /// Every BS cancels with its own minimum-distance candidate, enumerated
    /// over the users it actually receives.
    #[default]
    LocalArgmin,
    /// The candidate reported by most BSs; ties to the smallest index.
    Plurality,
    /// Exact centralized selection from per-candidate partial distances.
    /// Not a reduced-message scheme; kept as a reference.
    SumOfPartials,
}

impl SuStrategy {
    pub fn name(self) -> &'static str {
        match self {
            SuStrategy::LocalArgmin => "local-argmin",
            SuStrategy::Plurality => "plurality",
            SuStrategy::SumOfPartials => "sum-of-partials",
        }
    }
}

impl FromStr for SuStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local-argmin" => Ok(Self::LocalArgmin),
            "plurality" => Ok(Self::Plurality),
            "sum-of-partials" => Ok(Self::SumOfPartials),
            _ => Err(Error::InvalidParameter(format!(
                "unknown SU strategy '{s}'"
            ))),
        }
    }
}

/// What one BS sends the selection unit for one symbol time.
#[derive(Debug, Clone, PartialEq)]
pub struct BsReport {
    pub bs: usize,
    /// Index of the candidate with the smallest local distance.
    pub argmin: usize,
    /// Local distance of every candidate (sum-of-partials only).
    pub partials: Option<Vec<f64>>,
}

impl BsReport {
    pub fn from_partials(bs: usize, partials: Vec<f64>, keep_partials: bool) -> Self {
        Self {
            bs,
            argmin: argmin_index(&partials),
            partials: keep_partials.then_some(partials),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    /// One candidate index per BS, in BS order.
    PerBs(Vec<usize>),
    /// The same candidate for every BS.
    Common(usize),
}

impl Selection {
    pub fn for_bs(&self, m: usize) -> usize {
        match self {
            Selection::PerBs(v) => v[m],
            Selection::Common(l) => *l,
        }
    }
}

/// First index of the smallest value.
pub fn argmin_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// `|r - G s'|^2` for every candidate `s'`, where candidate entry `i` is the
/// constellation index transmitted on column `positions[i]` of `gains` and all
/// other columns carry nothing.
pub fn partial_distances(
    observation: &[Complex64],
    gains: &CMatrix,
    positions: &[usize],
    candidates: &[Vec<usize>],
    constellation: &Constellation,
) -> Vec<f64> {
    candidates
        .iter()
        .map(|cand| {
            (0..observation.len())
                .map(|n| {
                    let row = gains.row(n);
                    let mut d = observation[n];
                    for (&p, &q) in positions.iter().zip(cand) {
                        d -= row[p] * constellation.point(q);
                    }
                    d.norm_sqr()
                })
                .sum()
        })
        .collect()
}

/// Combine the reports of `num_bs` base stations over `gamma` candidates.
pub fn su_select(
    reports: &[BsReport],
    num_bs: usize,
    gamma: usize,
    strategy: SuStrategy,
) -> Result<Selection> {
    let mut by_bs: Vec<Option<&BsReport>> = vec![None; num_bs];
    for r in reports {
        if r.bs >= num_bs || r.argmin >= gamma.max(1) {
            return Err(Error::InvalidParameter(format!(
                "report ({}, {}) outside {num_bs} BSs and {gamma} candidates",
                r.bs, r.argmin
            )));
        }
        by_bs[r.bs] = Some(r);
    }
    let by_bs: Vec<&BsReport> = by_bs
        .into_iter()
        .enumerate()
        .map(|(m, r)| r.ok_or(Error::MissingReport(m)))
        .collect::<Result<_>>()?;
    if gamma <= 1 {
        return Ok(match strategy {
            SuStrategy::LocalArgmin => Selection::PerBs(vec![0; num_bs]),
            _ => Selection::Common(0),
        });
    }
    match strategy {
        SuStrategy::LocalArgmin => Ok(Selection::PerBs(by_bs.iter().map(|r| r.argmin).collect())),
        SuStrategy::Plurality => {
            let mut votes = vec![0usize; gamma];
            for r in &by_bs {
                votes[r.argmin] += 1;
            }
            let top = votes.iter().copied().max().unwrap_or(0);
            Ok(Selection::Common(
                votes.iter().position(|&v| v == top).unwrap_or(0),
            ))
        }
        SuStrategy::SumOfPartials => {
            let mut total = vec![0.0; gamma];
            for r in &by_bs {
                let partials = r.partials.as_ref().ok_or(Error::MissingReport(r.bs))?;
                if partials.len() != gamma {
                    return Err(Error::Shape {
                        context: "partial distances",
                        expected: gamma,
                        actual: partials.len(),
                    });
                }
                for (t, p) in total.iter_mut().zip(partials) {
                    *t += p;
                }
            }
            Ok(Selection::Common(argmin_index(&total)))
        }
    }
}
