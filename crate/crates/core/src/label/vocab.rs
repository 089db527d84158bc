//! Category and tag vocabularies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Object classes shared by detection, instance segmentation, pose and tracking.
pub const INSTANCE_CLASSES: [&str; 8] = [
    "pedestrian",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
];

/// Semantic segmentation classes; the index is the class id in semantic maps.
pub const SEMANTIC_CLASSES: [&str; 19] = [
    "road",
    "sidewalk",
    "building",
    "wall",
    "fence",
    "pole",
    "traffic light",
    "traffic sign",
    "vegetation",
    "terrain",
    "sky",
    "pedestrian",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
];

/// Drivable-area classes. Background is predicted but never scored.
pub const DRIVABLE_CLASSES: [&str; 3] = ["direct", "alternative", "background"];
pub const DRIVABLE_BACKGROUND: u8 = 2;

pub const LANE_CATEGORIES: [&str; 8] = [
    "crosswalk",
    "double other",
    "double white",
    "double yellow",
    "road curb",
    "single other",
    "single white",
    "single yellow",
];
pub const LANE_DIRECTIONS: [&str; 2] = ["parallel", "vertical"];
pub const LANE_STYLES: [&str; 2] = ["solid", "dashed"];
pub const LANE_DIRECTION_KEY: &str = "laneDirection";
pub const LANE_STYLE_KEY: &str = "laneStyle";

macro_rules! tag_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("unknown {} `{}`", stringify!($name).to_lowercase(), other)),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

tag_enum!(Weather {
    Rainy => "rainy",
    Snowy => "snowy",
    Clear => "clear",
    Overcast => "overcast",
    PartlyCloudy => "partly cloudy",
    Foggy => "foggy",
    Undefined => "undefined",
});

tag_enum!(Scene {
    Tunnel => "tunnel",
    Residential => "residential",
    ParkingLot => "parking lot",
    CityStreet => "city street",
    GasStations => "gas stations",
    Highway => "highway",
    Undefined => "undefined",
});

/// Which task's schema a label file is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSchema {
    /// Structural checks only; any category accepted.
    Generic,
    Tagging,
    Detection,
    InstanceSegmentation,
    Pose,
    /// Box tracking (MOT).
    Tracking,
    /// Mask tracking (MOTS); also the ground truth of the flow proxy.
    SegTracking,
    Semantic,
    Drivable,
    Lane,
}

impl LabelSchema {
    pub fn categories(&self) -> Option<&'static [&'static str]> {
        match self {
            LabelSchema::Generic | LabelSchema::Tagging => None,
            LabelSchema::Detection
            | LabelSchema::InstanceSegmentation
            | LabelSchema::Pose
            | LabelSchema::Tracking
            | LabelSchema::SegTracking => Some(&INSTANCE_CLASSES),
            LabelSchema::Semantic => Some(&SEMANTIC_CLASSES),
            LabelSchema::Drivable => Some(&DRIVABLE_CLASSES),
            LabelSchema::Lane => Some(&LANE_CATEGORIES),
        }
    }

    pub fn requires_video(&self) -> bool {
        matches!(self, LabelSchema::Tracking | LabelSchema::SegTracking)
    }

    pub fn requires_id(&self) -> bool {
        self.requires_video()
    }
}
