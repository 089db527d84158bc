use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ten benchmark tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Tag,
    Sem,
    Drivable,
    Lane,
    Det,
    Ins,
    Pose,
    Mot,
    Mots,
    Flow,
}

impl Task {
    pub const ALL: [Task; 10] = [
        Task::Tag,
        Task::Sem,
        Task::Drivable,
        Task::Lane,
        Task::Det,
        Task::Ins,
        Task::Pose,
        Task::Mot,
        Task::Mots,
        Task::Flow,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Task::Tag => "tag",
            Task::Sem => "sem",
            Task::Drivable => "drivable",
            Task::Lane => "lane",
            Task::Det => "det",
            Task::Ins => "ins",
            Task::Pose => "pose",
            Task::Mot => "mot",
            Task::Mots => "mots",
            Task::Flow => "flow",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.key() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown task `{s}`")))
    }
}
