use serde::{Deserialize, Serialize};

use crate::geometry::{distance, Deployment};

use super::OperatorConfig;

/// The four combinations of exclusive/shared spectrum and exclusive/shared BSs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingRegime {
    NoSharing,
    BsSharingOnly,
    SpectrumSharingOnly,
    FullSharing,
}

impl SharingRegime {
    pub const ALL: [SharingRegime; 4] = [
        SharingRegime::NoSharing,
        SharingRegime::BsSharingOnly,
        SharingRegime::SpectrumSharingOnly,
        SharingRegime::FullSharing,
    ];

    /// UEs may attach to any operator's BS.
    pub fn shares_bs(self) -> bool {
        matches!(self, SharingRegime::BsSharingOnly | SharingRegime::FullSharing)
    }

    /// All operators transmit over the pooled band.
    pub fn shares_spectrum(self) -> bool {
        matches!(self, SharingRegime::SpectrumSharingOnly | SharingRegime::FullSharing)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SharingRegime::NoSharing => "no_sharing",
            SharingRegime::BsSharingOnly => "bs_sharing_only",
            SharingRegime::SpectrumSharingOnly => "spectrum_sharing_only",
            SharingRegime::FullSharing => "full_sharing",
        }
    }
}

impl std::fmt::Display for SharingRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Serving BS per UE; `None` when no admissible BS exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    pub serving: Vec<Option<usize>>,
}

/// Nearest admissible BS; ties go to the lowest BS index.
pub fn associate(deployment: &Deployment, regime: SharingRegime) -> Association {
    let region = deployment.region;
    let serving = deployment
        .ue
        .iter()
        .map(|ue| {
            let mut best: Option<(usize, f64)> = None;
            for (b, bs) in deployment.bs.iter().enumerate() {
                if !regime.shares_bs() && bs.operator != ue.operator {
                    continue;
                }
                let d = distance(bs.pos, ue.pos, region);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((b, d));
                }
            }
            best.map(|(b, _)| b)
        })
        .collect();
    Association { serving }
}

/// Bandwidth a UE of `ue_operator` transmits over: its own licence under
/// exclusive spectrum, the pooled coalition band otherwise.
pub fn operative_bandwidth(ue_operator: usize, regime: SharingRegime, ops: &[OperatorConfig]) -> f64 {
    if regime.shares_spectrum() {
        ops.iter().map(|o| o.bandwidth_hz).sum()
    } else {
        ops[ue_operator].bandwidth_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Region, Site};

    fn site(x: f64, y: f64, operator: usize) -> Site {
        Site {
            pos: Point::new(x, y),
            operator,
        }
    }

    fn deployment(bs: Vec<Site>, ue: Vec<Site>) -> Deployment {
        Deployment {
            region: Region::unit_km_torus(),
            bs,
            ue,
        }
    }

    #[test]
    fn exclusive_maps_to_own_operator() {
        let d = deployment(
            vec![site(100.0, 100.0, 0), site(110.0, 100.0, 1)],
            vec![site(112.0, 100.0, 0), site(98.0, 100.0, 1)],
        );
        for regime in [SharingRegime::NoSharing, SharingRegime::SpectrumSharingOnly] {
            assert_eq!(associate(&d, regime).serving, vec![Some(0), Some(1)]);
        }
    }

    #[test]
    fn bs_sharing_picks_nearer_foreign_bs() {
        let d = deployment(
            vec![site(100.0, 100.0, 0), site(300.0, 100.0, 1)],
            vec![site(290.0, 100.0, 0)],
        );
        assert_eq!(associate(&d, SharingRegime::NoSharing).serving, vec![Some(0)]);
        assert_eq!(associate(&d, SharingRegime::BsSharingOnly).serving, vec![Some(1)]);
        assert_eq!(associate(&d, SharingRegime::FullSharing).serving, vec![Some(1)]);
    }

    #[test]
    fn operator_without_bs_is_outside() {
        let d = deployment(
            vec![site(100.0, 100.0, 0)],
            vec![site(500.0, 500.0, 1), site(501.0, 500.0, 1)],
        );
        assert_eq!(associate(&d, SharingRegime::NoSharing).serving, vec![None, None]);
        assert_eq!(associate(&d, SharingRegime::FullSharing).serving, vec![Some(0), Some(0)]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let d = deployment(
            vec![site(100.0, 100.0, 0), site(300.0, 100.0, 0)],
            vec![site(200.0, 100.0, 0)],
        );
        assert_eq!(associate(&d, SharingRegime::NoSharing).serving, vec![Some(0)]);
    }

    #[test]
    fn operative_bandwidth_examples() {
        let op = |w| OperatorConfig {
            bandwidth_hz: w,
            bs_per_km2: 50.0,
            ue_per_km2: 250.0,
        };
        let two = [op(500e6), op(500e6)];
        assert_eq!(operative_bandwidth(0, SharingRegime::NoSharing, &two), 500e6);
        assert_eq!(operative_bandwidth(0, SharingRegime::BsSharingOnly, &two), 500e6);
        assert_eq!(operative_bandwidth(0, SharingRegime::FullSharing, &two), 1e9);
        assert_eq!(operative_bandwidth(1, SharingRegime::SpectrumSharingOnly, &two), 1e9);
        for r in SharingRegime::ALL {
            assert_eq!(operative_bandwidth(0, r, &[op(300e6)]), 300e6);
        }
    }
}
