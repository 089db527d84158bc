//! The composite score: per-slot scaling factors derived from baseline
//! sensitivity, four group scores and their sum.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::Slot;

/// Published sensitivities, slot order as in [`Slot::ALL`].
pub const PUBLISHED_SIGMAS: [f64; 13] = [0.4, 0.6, 2.0, 0.7, 0.9, 1.1, 1.7, 3.1, 1.0, 1.7, 0.9, 0.8, 1.4];

/// Published scaling factors, slot order as in [`Slot::ALL`].
pub const PUBLISHED_SCALES: [f64; 13] = [
    1.00, 0.50, 0.20, 0.50, 0.50, 0.33, 0.25, 0.14, 0.33, 0.25, 0.50, 0.50, 0.33,
];

/// How far a supplied `s` may sit from `scale_factor(sigma)` before it is
/// reported. Covers two-decimal rounding of the published factors.
pub const SCALE_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Cls,
    Seg,
    Loc,
    Ass,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::Cls, Group::Seg, Group::Loc, Group::Ass];

    pub fn slots(&self) -> &'static [Slot] {
        match self {
            Group::Cls => &[Slot::AccGw, Slot::AccGs],
            Group::Seg => &[Slot::IouS, Slot::IouA, Slot::IouL],
            Group::Loc => &[Slot::ApD, Slot::ApI, Slot::ApP, Slot::ApT, Slot::ApR],
            Group::Ass => &[Slot::IouF, Slot::AssaT, Slot::AssaR],
        }
    }
}

/// `1 / max(1, ceil(2 sigma))`.
pub fn scale_factor(sigma: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Domain(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    Ok(1.0 / (2.0 * sigma).ceil().max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotScale {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub s: f64,
}

/// A supplied `(sigma, s)` pair that disagrees with [`scale_factor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleWarning {
    pub slot: Slot,
    pub sigma: f64,
    pub s: f64,
    pub derived: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Slot, SlotScale>", into = "BTreeMap<Slot, SlotScale>")]
pub struct ScalingTable {
    entries: BTreeMap<Slot, SlotScale>,
}

impl TryFrom<BTreeMap<Slot, SlotScale>> for ScalingTable {
    type Error = Error;

    fn try_from(entries: BTreeMap<Slot, SlotScale>) -> Result<Self> {
        ScalingTable::new(entries)
    }
}

impl From<ScalingTable> for BTreeMap<Slot, SlotScale> {
    fn from(t: ScalingTable) -> Self {
        t.entries
    }
}

impl Default for ScalingTable {
    /// The published table.
    fn default() -> Self {
        let entries = Slot::ALL
            .iter()
            .zip(PUBLISHED_SIGMAS.iter().zip(PUBLISHED_SCALES))
            .map(|(&slot, (&sigma, s))| (slot, SlotScale { sigma: Some(sigma), s }))
            .collect();
        ScalingTable { entries }
    }
}

impl ScalingTable {
    /// Every slot must be present with `s` in `(0, 1]`.
    pub fn new(entries: BTreeMap<Slot, SlotScale>) -> Result<Self> {
        if let Some(slot) = Slot::ALL.iter().find(|s| !entries.contains_key(s)) {
            return Err(Error::IncompleteInput(slot.key().into()));
        }
        for (slot, e) in &entries {
            if !(e.s > 0.0 && e.s <= 1.0) {
                return Err(Error::Domain(format!(
                    "scaling factor for {slot} must lie in (0, 1], got {}",
                    e.s
                )));
            }
            if let Some(sigma) = e.sigma {
                scale_factor(sigma)?;
            }
        }
        Ok(ScalingTable { entries })
    }

    /// Table with every `s` derived from its sigma.
    pub fn from_sigmas(sigmas: &BTreeMap<Slot, f64>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for slot in Slot::ALL {
            let sigma = *sigmas
                .get(&slot)
                .ok_or_else(|| Error::IncompleteInput(slot.key().into()))?;
            entries.insert(
                slot,
                SlotScale {
                    sigma: Some(sigma),
                    s: scale_factor(sigma)?,
                },
            );
        }
        Ok(ScalingTable { entries })
    }

    pub fn get(&self, slot: Slot) -> SlotScale {
        self.entries[&slot]
    }

    pub fn scale(&self, slot: Slot) -> f64 {
        self.entries[&slot].s
    }

    pub fn sigma(&self, slot: Slot) -> Option<f64> {
        self.entries[&slot].sigma
    }

    /// Slots whose `s` differs from `scale_factor(sigma)` by more than
    /// [`SCALE_TOLERANCE`].
    pub fn warnings(&self) -> Vec<ScaleWarning> {
        self.entries
            .iter()
            .filter_map(|(&slot, e)| {
                let sigma = e.sigma?;
                let derived = scale_factor(sigma).ok()?;
                ((derived - e.s).abs() > SCALE_TOLERANCE).then_some(ScaleWarning {
                    slot,
                    sigma,
                    s: e.s,
                    derived,
                })
            })
            .collect()
    }
}

/// Population standard deviation of each slot's column over baselines, and
/// the factors derived from it.
pub fn estimate_sigmas(baselines: &[BTreeMap<Slot, f64>]) -> Result<ScalingTable> {
    let mut sigmas = BTreeMap::new();
    for slot in Slot::ALL {
        let column: Vec<f64> = baselines.iter().filter_map(|b| b.get(&slot).copied()).collect();
        if column.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "slot {slot} has {} baseline score(s), need at least 2",
                column.len()
            )));
        }
        if column.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite baseline score for {slot}")));
        }
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        sigmas.insert(slot, var.sqrt());
    }
    ScalingTable::from_sigmas(&sigmas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupScores {
    pub cls: f64,
    pub seg: f64,
    pub loc: f64,
    pub ass: f64,
    pub total: f64,
}

impl GroupScores {
    pub fn get(&self, g: Group) -> f64 {
        match g {
            Group::Cls => self.cls,
            Group::Seg => self.seg,
            Group::Loc => self.loc,
            Group::Ass => self.ass,
        }
    }
}

/// Each group is the `s`-weighted mean of its task scores, so it stays in
/// `[0, 100]`; the total is the sum of the four groups.
///
/// With `partial`, missing slots are dropped and the remaining weights of
/// their group renormalized; a group with no slot left is still an error.
pub fn vtda(scores: &BTreeMap<Slot, f64>, table: &ScalingTable, partial: bool) -> Result<GroupScores> {
    for (slot, &v) in scores {
        if !v.is_finite() || !(0.0..=100.0).contains(&v) {
            return Err(Error::Domain(format!("{slot} score {v} outside [0, 100]")));
        }
    }
    let mut groups = [0.0; 4];
    for (out, g) in groups.iter_mut().zip(Group::ALL) {
        let mut num = 0.0;
        let mut den = 0.0;
        for &slot in g.slots() {
            match scores.get(&slot) {
                Some(&x) => {
                    num += table.scale(slot) * x;
                    den += table.scale(slot);
                }
                None if partial => {}
                None => return Err(Error::IncompleteInput(slot.key().into())),
            }
        }
        if den == 0.0 {
            return Err(Error::IncompleteInput(g.slots()[0].key().into()));
        }
        *out = num / den;
    }
    let [cls, seg, loc, ass] = groups;
    Ok(GroupScores {
        cls,
        seg,
        loc,
        ass,
        total: cls + seg + loc + ass,
    })
}
