//! The intermediate share: the only object that crosses the party
//! boundary. It carries reduced representations, treatment, outcome, and
//! ids -- and has no field that could hold a reducer or raw covariates.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::AnchorData;
use crate::error::{Error, Result};
use crate::reduction::Reducer;
use crate::tabular::PartyDataset;

/// One party's contribution to the collaboration.
#[derive(Debug, Clone, PartialEq)]
pub struct IntermediateShare {
    pub party_id: usize,
    /// Reduced local data, n_k x m_k.
    pub reduced: Array2<f64>,
    /// Reduced anchor data, r x m_k; the same r for every party.
    pub reduced_anchor: Array2<f64>,
    pub treatment: Vec<bool>,
    pub outcome: Array1<f64>,
    pub ids: Vec<u64>,
}

impl IntermediateShare {
    pub fn reduced_dim(&self) -> usize {
        self.reduced.ncols()
    }

    pub fn anchor_rows(&self) -> usize {
        self.reduced_anchor.nrows()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Reduce a party's covariates and the anchor with the party's local
/// reducer; treatment, outcome, and ids pass through unchanged.
pub fn make_intermediate_share(
    party: &PartyDataset,
    reducer: &Reducer,
    anchor: &AnchorData,
) -> Result<IntermediateShare> {
    if anchor.width() != party.population.m() {
        return Err(Error::DimensionMismatch(format!(
            "anchor has {} covariates but the party has {}",
            anchor.width(),
            party.population.m()
        )));
    }
    let reduced = reducer.apply(party.population.covariates())?;
    let reduced_anchor = reducer.apply(anchor.matrix())?;
    Ok(IntermediateShare {
        party_id: party.party_id,
        reduced,
        reduced_anchor,
        treatment: party.population.treatment().to_vec(),
        outcome: party.population.outcome().clone(),
        ids: party.population.ids().to_vec(),
    })
}

/// Wire format for share exchange. The schema is fixed: there is no slot
/// for reducer parameters, so a reducer cannot round-trip through it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShareEnvelope {
    pub format_version: u32,
    pub party_id: usize,
    pub reduced_dim: usize,
    pub anchor_rows: usize,
    /// Row-major n_k x reduced_dim.
    pub reduced: Vec<Vec<f64>>,
    /// Row-major anchor_rows x reduced_dim.
    pub reduced_anchor: Vec<Vec<f64>>,
    pub treatment: Vec<u8>,
    pub outcome: Vec<f64>,
    pub ids: Vec<u64>,
}

pub const SHARE_FORMAT_VERSION: u32 = 1;

impl ShareEnvelope {
    pub fn from_share(share: &IntermediateShare) -> Self {
        let rows = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect();
        ShareEnvelope {
            format_version: SHARE_FORMAT_VERSION,
            party_id: share.party_id,
            reduced_dim: share.reduced_dim(),
            anchor_rows: share.anchor_rows(),
            reduced: rows(&share.reduced),
            reduced_anchor: rows(&share.reduced_anchor),
            treatment: share.treatment.iter().map(|&t| u8::from(t)).collect(),
            outcome: share.outcome.to_vec(),
            ids: share.ids.clone(),
        }
    }

    pub fn into_share(self) -> Result<IntermediateShare> {
        if self.format_version != SHARE_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported share format version {}",
                self.format_version
            )));
        }
        let to_matrix = |rows: &[Vec<f64>], cols: usize| -> Result<Array2<f64>> {
            let mut m = Array2::zeros((rows.len(), cols));
            for (i, row) in rows.iter().enumerate() {
                if row.len() != cols {
                    return Err(Error::DimensionMismatch(format!(
                        "envelope row {i} has {} values, expected {cols}",
                        row.len()
                    )));
                }
                for (j, &v) in row.iter().enumerate() {
                    m[[i, j]] = v;
                }
            }
            Ok(m)
        };
        let reduced = to_matrix(&self.reduced, self.reduced_dim)?;
        let reduced_anchor = to_matrix(&self.reduced_anchor, self.reduced_dim)?;
        if reduced_anchor.nrows() != self.anchor_rows {
            return Err(Error::DimensionMismatch(format!(
                "envelope declares {} anchor rows but carries {}",
                self.anchor_rows,
                reduced_anchor.nrows()
            )));
        }
        let n = reduced.nrows();
        if self.treatment.len() != n || self.outcome.len() != n || self.ids.len() != n {
            return Err(Error::DimensionMismatch(
                "envelope treatment/outcome/ids do not match the reduced rows".into(),
            ));
        }
        let mut treatment = Vec::with_capacity(n);
        for (i, &t) in self.treatment.iter().enumerate() {
            match t {
                0 => treatment.push(false),
                1 => treatment.push(true),
                other => {
                    return Err(Error::Domain(format!(
                        "envelope treatment[{i}] must be 0 or 1, got {other}"
                    )))
                }
            }
        }
        Ok(IntermediateShare {
            party_id: self.party_id,
            reduced,
            reduced_anchor,
            treatment,
            outcome: Array1::from_vec(self.outcome),
            ids: self.ids,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collaboration::generate_anchor;
    use crate::reduction::{LinearReducer, Reducer};
    use crate::tabular::testutil::tiny_population;

    fn party(n: usize, seed: u64) -> PartyDataset {
        PartyDataset {
            party_id: 0,
            population: tiny_population(n, seed),
        }
    }

    #[test]
    fn identity_reducer_shares_the_raw_rows() {
        let p = party(10, 1);
        let anchor = generate_anchor(&p.population.column_bounds(), 6, 2).unwrap();
        let reducer = Reducer::Linear(LinearReducer::identity(3));
        let share = make_intermediate_share(&p, &reducer, &anchor).unwrap();
        assert_eq!(&share.reduced, p.population.covariates());
        assert_eq!(share.anchor_rows(), 6);
    }

    #[test]
    fn all_parties_carry_the_same_anchor_rows() {
        let a = party(8, 1);
        let b = PartyDataset {
            party_id: 1,
            population: tiny_population(12, 2),
        };
        let anchor = generate_anchor(&a.population.column_bounds(), 20, 3).unwrap();
        let reducer = Reducer::Linear(LinearReducer::identity(3));
        let sa = make_intermediate_share(&a, &reducer, &anchor).unwrap();
        let sb = make_intermediate_share(&b, &reducer, &anchor).unwrap();
        assert_eq!(sa.anchor_rows(), 20);
        assert_eq!(sb.anchor_rows(), 20);
    }

    #[test]
    fn envelope_round_trips() {
        let p = party(9, 4);
        let anchor = generate_anchor(&p.population.column_bounds(), 5, 7).unwrap();
        let reducer = Reducer::Linear(crate::reduction::fit_pca(p.population.covariates(), 2).unwrap());
        let share = make_intermediate_share(&p, &reducer, &anchor).unwrap();
        let envelope = ShareEnvelope::from_share(&share);
        let text = envelope.to_json().unwrap();
        let back = ShareEnvelope::from_json(&text).unwrap().into_share().unwrap();
        assert_eq!(back, share);
    }
}
