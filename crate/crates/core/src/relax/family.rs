use alloc::string::String;
use alloc::vec::Vec;

use super::{RelaxError, RelaxationSpec};
use crate::decompose::GsrtScheme;

/// Named rungs of the relaxation ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Sdp,
    Rlt,
    SocRlt,
    SocRltB,
    GsrtA,
    GsrtB,
    Sst,
    KsocSub,
    KsocFull,
    /// SOC-RLT plus the diagonal LMI `α diag(u)⁻¹diag(x) ⪰ X`.
    AlphaLmi,
    /// SOC-RLT plus the Hadamard LMI of every convex constraint.
    Rtc,
    /// SOC-RLT plus both of the above.
    Hsoc,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::Sdp,
        Family::Rlt,
        Family::SocRlt,
        Family::SocRltB,
        Family::GsrtA,
        Family::GsrtB,
        Family::Sst,
        Family::KsocSub,
        Family::KsocFull,
        Family::AlphaLmi,
        Family::Rtc,
        Family::Hsoc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sdp => "sdp",
            Family::Rlt => "rlt",
            Family::SocRlt => "soc-rlt",
            Family::SocRltB => "soc-rlt-b",
            Family::GsrtA => "gsrt-a",
            Family::GsrtB => "gsrt-b",
            Family::Sst => "sst",
            Family::KsocSub => "ksoc-sub",
            Family::KsocFull => "ksoc-full",
            Family::AlphaLmi => "alpha-lmi",
            Family::Rtc => "rtc",
            Family::Hsoc => "hsoc",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|f| f.name()).collect::<Vec<_>>().join(", ")
    }

    pub fn parse(s: &str) -> Result<Family, RelaxError> {
        let t = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.name() == t)
            .ok_or_else(|| RelaxError::UnknownRelaxation { name: s.into(), valid: Self::valid_names() })
    }

    /// Families whose LMIs read `α_u` directly (no alpha row is appended).
    pub fn needs_alpha(self) -> bool {
        matches!(self, Family::AlphaLmi | Family::Rtc | Family::Hsoc)
    }

    /// Families that have an alpha-row variant in a ladder.
    pub fn has_alpha_variant(self) -> bool {
        !matches!(self, Family::Sdp) && !self.needs_alpha()
    }

    pub fn spec(self) -> RelaxationSpec {
        let base = RelaxationSpec::default();
        let rlt = RelaxationSpec { rlt: true, ..base.clone() };
        let soc = RelaxationSpec { soc_rlt: true, ..rlt.clone() };
        let gsrt_a = RelaxationSpec { gsrt: Some(GsrtScheme::A), ..soc.clone() };
        match self {
            Family::Sdp => base,
            Family::Rlt => rlt,
            Family::SocRlt => soc,
            Family::SocRltB => RelaxationSpec { soc_rlt_b: true, ..soc },
            Family::GsrtA => gsrt_a,
            Family::GsrtB => RelaxationSpec { gsrt: Some(GsrtScheme::B), ..soc },
            Family::Sst => RelaxationSpec { sst: true, ..gsrt_a },
            Family::KsocSub => RelaxationSpec { sst: true, ksoc_sub: true, ..gsrt_a },
            Family::KsocFull => RelaxationSpec { ksoc_full: true, ..gsrt_a },
            Family::AlphaLmi => RelaxationSpec { lmi35: true, ..soc },
            Family::Rtc => RelaxationSpec { hsoc: true, ..soc },
            Family::Hsoc => RelaxationSpec { lmi35: true, hsoc: true, ..soc },
        }
    }
}

impl core::fmt::Display for Family {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Family {
    type Err = RelaxError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::parse(s)
    }
}
