use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The thirteen metric slots that feed the composite score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    AccGw,
    AccGs,
    IouS,
    IouA,
    IouL,
    ApD,
    ApI,
    ApP,
    ApT,
    ApR,
    IouF,
    AssaT,
    AssaR,
}

impl Slot {
    pub const ALL: [Slot; 13] = [
        Slot::AccGw,
        Slot::AccGs,
        Slot::IouS,
        Slot::IouA,
        Slot::IouL,
        Slot::ApD,
        Slot::ApI,
        Slot::ApP,
        Slot::ApT,
        Slot::ApR,
        Slot::IouF,
        Slot::AssaT,
        Slot::AssaR,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Slot::AccGw => "acc_gw",
            Slot::AccGs => "acc_gs",
            Slot::IouS => "iou_s",
            Slot::IouA => "iou_a",
            Slot::IouL => "iou_l",
            Slot::ApD => "ap_d",
            Slot::ApI => "ap_i",
            Slot::ApP => "ap_p",
            Slot::ApT => "ap_t",
            Slot::ApR => "ap_r",
            Slot::IouF => "iou_f",
            Slot::AssaT => "assa_t",
            Slot::AssaR => "assa_r",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Slot::ALL
            .into_iter()
            .find(|slot| slot.key() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown metric slot `{s}`")))
    }
}

/// One metric value in `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub slot: Slot,
    pub value: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_class: BTreeMap<String, f64>,
}

impl TaskScore {
    pub fn new(slot: Slot, value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=100.0).contains(&value) {
            return Err(Error::Domain(format!("{slot} score {value} outside [0, 100]")));
        }
        Ok(TaskScore {
            slot,
            value,
            per_class: BTreeMap::new(),
        })
    }

    pub fn with_breakdown(mut self, per_class: BTreeMap<String, f64>) -> Self {
        self.per_class = per_class;
        self
    }
}
