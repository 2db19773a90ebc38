use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Transmission framework: the dense image baseline or one of the keypoint
/// (GSC) variants. `*_ot` variants run selective OT correction at the
/// receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framework {
    #[serde(rename = "imagecom")]
    ImageCom,
    Gscs,
    Gscm,
    GscsOt,
    GscmOt,
}

/// How the receiver assembles movable objects and the static scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composition {
    /// Static scene and objects composed in one pass.
    Joint,
    /// Objects composed one by one, merged, then the static scene appended.
    PerObject,
}

impl Framework {
    pub const ALL: [Framework; 5] = [
        Framework::ImageCom,
        Framework::Gscs,
        Framework::Gscm,
        Framework::GscsOt,
        Framework::GscmOt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Framework::ImageCom => "imagecom",
            Framework::Gscs => "gscs",
            Framework::Gscm => "gscm",
            Framework::GscsOt => "gscs_ot",
            Framework::GscmOt => "gscm_ot",
        }
    }

    pub fn is_dense(self) -> bool {
        self == Framework::ImageCom
    }

    pub fn uses_ot(self) -> bool {
        matches!(self, Framework::GscsOt | Framework::GscmOt)
    }

    /// `None` for the dense baseline.
    pub fn composition(self) -> Option<Composition> {
        match self {
            Framework::ImageCom => None,
            Framework::Gscs | Framework::GscsOt => Some(Composition::Joint),
            Framework::Gscm | Framework::GscmOt => Some(Composition::PerObject),
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Framework {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Framework::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown framework `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Framework::ALL {
            assert_eq!(f.as_str().parse::<Framework>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{f}\""));
        }
        assert!("gsc".parse::<Framework>().is_err());
    }
}
