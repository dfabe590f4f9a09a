use rand::Rng;

use crate::error::Result;
use crate::geometry::{distance, unit_vector, Deployment};
use crate::radio::{draw_link_state, fading_sample, ChannelParams, LinkClass, LinkState};
use crate::rng::{DropStream, Streams};

use super::association::{associate, operative_bandwidth};
use super::scheduler::{argmax_random_tie, round_robin, SchedulerPolicy};
use super::{InterferenceMode, Scenario, ServingLink};

/// Links shorter than this are evaluated at this distance; the path-loss
/// fits are anchored at 1 m.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Slow link state for every BS–UE pair of a drop, drawn independently per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DropLinks {
    n_ue: usize,
    states: Vec<LinkState>,
}

impl DropLinks {
    pub fn draw<R: Rng + ?Sized>(deployment: &Deployment, channel: &ChannelParams, rng: &mut R) -> Result<Self> {
        let region = deployment.region;
        let mut states = Vec::with_capacity(deployment.bs.len() * deployment.ue.len());
        for bs in &deployment.bs {
            for ue in &deployment.ue {
                let d = distance(bs.pos, ue.pos, region).max(MIN_LINK_DISTANCE_M);
                states.push(draw_link_state(d, channel, rng)?);
            }
        }
        Ok(Self {
            n_ue: deployment.ue.len(),
            states,
        })
    }

    /// Builds a table from a per-pair function; for constructed test cases.
    pub fn from_fn(deployment: &Deployment, mut f: impl FnMut(usize, usize) -> LinkState) -> Self {
        let n_ue = deployment.ue.len();
        let states = (0..deployment.bs.len())
            .flat_map(|b| (0..n_ue).map(move |u| (b, u)))
            .map(|(b, u)| f(b, u))
            .collect();
        Self { n_ue, states }
    }

    #[inline]
    pub fn get(&self, bs: usize, ue: usize) -> &LinkState {
        &self.states[bs * self.n_ue + ue]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropOutcome {
    /// Time-averaged rate per UE, bits/s.
    pub rates: Vec<f64>,
    pub serving: Vec<ServingLink>,
    /// Slots in which each UE was scheduled.
    pub slots_won: Vec<u64>,
}

/// A co-band BS that can reach a victim UE.
struct Interferer {
    bs: u32,
    /// Band power · G_UE(arrival) · mean path gain; only the BS-side gain and fading vary by slot.
    static_gain: f64,
    /// Unit vector from the interfering BS toward the victim.
    dir: (f64, f64),
}

const IDLE: u32 = u32::MAX;

/// Simulates `scenario.sim.slots` slots on one drop.
///
/// Each (BS, band) pair is an independent scheduling domain that serves one
/// UE per slot. Under exclusive spectrum each operator has its own band;
/// otherwise every transmission shares one pooled band. A scheduled UE's
/// SINR counts every other active transmission on its band.
pub fn run_drop(
    deployment: &Deployment,
    links: &DropLinks,
    scenario: &Scenario,
    streams: &Streams,
    drop: u64,
) -> DropOutcome {
    let sim = &scenario.sim;
    let regime = scenario.regime;
    let region = deployment.region;
    let n_ue = deployment.ue.len();
    let n_bs = deployment.bs.len();
    let assoc = associate(deployment, regime);

    let n_bands = if regime.shares_spectrum() {
        1
    } else {
        scenario.operators.len()
    };
    let band_of = |ue: usize| {
        if regime.shares_spectrum() {
            0
        } else {
            deployment.ue[ue].operator
        }
    };
    let band_width: Vec<f64> = (0..n_bands)
        .map(|b| operative_bandwidth(b, regime, &scenario.operators))
        .collect();
    let rm = &sim.rate_model;
    let noise: Vec<f64> = band_width.iter().map(|&w| rm.noise_power(w)).collect();
    let p_tx = rm.tx_power_w();
    // A BS hosting several exclusive bands splits its power across them at
    // constant spectral density.
    let hosted: f64 = if regime.shares_bs() { band_width.iter().sum() } else { 0.0 };
    let band_power: Vec<f64> = band_width
        .iter()
        .map(|&w| if hosted > 0.0 { p_tx * w / hosted } else { p_tx })
        .collect();
    let bs_lin = sim.bs_antenna.linear();
    let ue_lin = sim.ue_antenna.linear();

    let mut serving = vec![ServingLink::Outside; n_ue];
    let mut mean_signal = vec![0.0; n_ue];
    let mut serve_dir = vec![(0.0, 0.0); n_ue];
    let mut domains: Vec<Vec<u32>> = vec![Vec::new(); n_bs * n_bands];
    for (u, s) in assoc.serving.iter().enumerate() {
        let Some(b) = *s else { continue };
        let link = links.get(b, u);
        serving[u] = link.class.into();
        if link.class == LinkClass::Outage {
            continue;
        }
        mean_signal[u] = band_power[band_of(u)] * bs_lin.main * ue_lin.main * link.mean_path_gain;
        serve_dir[u] = unit_vector(deployment.bs[b].pos, deployment.ue[u].pos, region);
        domains[b * n_bands + band_of(u)].push(u as u32);
    }

    let with_interference = sim.interference == InterferenceMode::Sinr;
    let interferers: Vec<Vec<Interferer>> = (0..n_ue)
        .map(|u| {
            if !with_interference || mean_signal[u] == 0.0 {
                return Vec::new();
            }
            let own = assoc.serving[u].expect("served UE");
            let here = deployment.ue[u].pos;
            let look = unit_vector(here, deployment.bs[own].pos, region);
            (0..n_bs)
                .filter(|&m| m != own)
                .filter_map(|m| {
                    let link = links.get(m, u);
                    if link.class == LinkClass::Outage {
                        return None;
                    }
                    let toward_bs = unit_vector(here, deployment.bs[m].pos, region);
                    let cos_arrival = look.0 * toward_bs.0 + look.1 * toward_bs.1;
                    Some(Interferer {
                        bs: m as u32,
                        static_gain: band_power[band_of(u)] * ue_lin.gain_for_cos(cos_arrival) * link.mean_path_gain,
                        dir: (-toward_bs.0, -toward_bs.1),
                    })
                })
                .collect()
        })
        .collect();

    let mut fading_rng = streams.drop_stream(drop, DropStream::Fading);
    let mut tie_rng = streams.drop_stream(drop, DropStream::Scheduler);
    let mut intf_rng = streams.drop_stream(drop, DropStream::InterferenceFading);

    let mut active = vec![IDLE; domains.len()];
    let mut active_fading = vec![0.0; domains.len()];
    let mut draws: Vec<f64> = Vec::new();
    let mut rate_sum = vec![0.0; n_ue];
    let mut slots_won = vec![0u64; n_ue];

    for slot in 0..sim.slots as u64 {
        for (d, cell) in domains.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            // Serving-link fading is drawn for the whole cell under either
            // policy so both see the same channel sequence.
            draws.clear();
            draws.extend(cell.iter().map(|_| fading_sample(&mut fading_rng)));
            let k = match sim.policy {
                // instantaneous / mean SNR is exactly the fading draw
                SchedulerPolicy::TemporalFairOpportunistic => {
                    argmax_random_tie(draws.iter().copied().enumerate(), &mut tie_rng)
                }
                SchedulerPolicy::RoundRobin => round_robin(cell.len(), slot),
            }
            .expect("nonempty cell");
            active[d] = cell[k];
            active_fading[d] = draws[k];
        }

        for (d, &u) in active.iter().enumerate() {
            if u == IDLE {
                continue;
            }
            let u = u as usize;
            let band = d % n_bands;
            let mut interference = 0.0;
            for intf in &interferers[u] {
                let v = active[intf.bs as usize * n_bands + band];
                if v == IDLE {
                    continue;
                }
                let beam = serve_dir[v as usize];
                let cos_departure = beam.0 * intf.dir.0 + beam.1 * intf.dir.1;
                interference +=
                    intf.static_gain * bs_lin.gain_for_cos(cos_departure) * fading_sample(&mut intf_rng);
            }
            let sinr = mean_signal[u] * active_fading[d] / (noise[band] + interference);
            rate_sum[u] += rm.rate(band_width[band], sinr);
            slots_won[u] += 1;
        }
    }

    let t = sim.slots as f64;
    DropOutcome {
        rates: rate_sum.into_iter().map(|r| r / t).collect(),
        serving,
        slots_won,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Region, Site};
    use crate::radio::{interference_power, Transmitter};
    use crate::sim::{OperatorConfig, SharingRegime, SimSettings};

    fn site(x: f64, y: f64, operator: usize) -> Site {
        Site {
            pos: Point::new(x, y),
            operator,
        }
    }

    fn scenario(regime: SharingRegime, ops: usize, slots: usize) -> Scenario {
        Scenario {
            regime,
            operators: vec![
                OperatorConfig {
                    bandwidth_hz: 500e6,
                    bs_per_km2: 0.0,
                    ue_per_km2: 0.0,
                };
                ops
            ],
            sim: SimSettings {
                slots,
                ..SimSettings::default()
            },
        }
    }

    #[test]
    fn single_link_matches_closed_form() {
        let dep = Deployment {
            region: Region::unit_km_torus(),
            bs: vec![site(100.0, 100.0, 0)],
            ue: vec![site(150.0, 100.0, 0)],
        };
        let sc = scenario(SharingRegime::NoSharing, 1, 1);
        let ch = sc.sim.channel;
        let link = LinkState::with_shadowing(LinkClass::Los, 50.0, 0.0, &ch);
        let links = DropLinks::from_fn(&dep, |_, _| link);
        let streams = Streams::new(4);
        let out = run_drop(&dep, &links, &sc, &streams, 0);

        // Recompute the one fading draw the scheduler consumed.
        let g = fading_sample(&mut streams.drop_stream(0, DropStream::Fading));
        let rm = sc.sim.rate_model;
        let pl_db = 69.8 + 20.0 * 50f64.log10();
        let rx_dbm = 30.0 + 20.0 + 10.0 - pl_db;
        let snr = 10f64.powf((rx_dbm - 30.0) / 10.0) * g / rm.noise_power(500e6);
        let expected = 0.8 * 500e6 * (1.0 + 0.5 * snr).log2();
        assert!((out.rates[0] / expected - 1.0).abs() < 1e-12);
        assert_eq!(out.serving[0], ServingLink::Los);
    }

    #[test]
    fn outage_and_outside_ues_get_zero() {
        let dep = Deployment {
            region: Region::unit_km_torus(),
            bs: vec![site(100.0, 100.0, 0)],
            ue: vec![site(150.0, 100.0, 0), site(900.0, 900.0, 0), site(400.0, 400.0, 1)],
        };
        let sc = scenario(SharingRegime::NoSharing, 2, 200);
        let ch = sc.sim.channel;
        let links = DropLinks::from_fn(&dep, |_, u| {
            if u == 1 {
                LinkState::OUTAGE
            } else {
                LinkState::with_shadowing(LinkClass::Nlos, 100.0, 0.0, &ch)
            }
        });
        let out = run_drop(&dep, &links, &sc, &Streams::new(1), 0);
        assert!(out.rates[0] > 0.0);
        assert_eq!(out.rates[1], 0.0);
        assert_eq!(out.rates[2], 0.0);
        assert_eq!(out.serving, vec![ServingLink::Nlos, ServingLink::Outage, ServingLink::Outside]);
        assert_eq!(out.slots_won, vec![200, 0, 0]);
    }

    /// Two cells facing each other; the hot loop's interference must equal the
    /// reference `interference_power` built from explicit angles.
    #[test]
    fn slot_interference_matches_reference() {
        let region = Region::unit_km_torus();
        let dep = Deployment {
            region,
            bs: vec![site(100.0, 500.0, 0), site(300.0, 500.0, 0)],
            ue: vec![site(200.0, 500.0, 0), site(320.0, 505.0, 0)],
        };
        let mut sc = scenario(SharingRegime::NoSharing, 1, 1);
        sc.sim.interference = InterferenceMode::Sinr;
        let ch = sc.sim.channel;
        let links = DropLinks::from_fn(&dep, |b, u| {
            let d = distance(dep.bs[b].pos, dep.ue[u].pos, region);
            LinkState::with_shadowing(LinkClass::Los, d, 0.0, &ch)
        });
        // UE 0 (x=200) is served by BS 0 and lies between the two BSs; BS 1
        // beams east to UE 1, so UE 0 sits behind BS 1's beam.
        let streams = Streams::new(12);
        let out = run_drop(&dep, &links, &sc, &streams, 0);

        let mut fading = streams.drop_stream(0, DropStream::Fading);
        let g0 = fading_sample(&mut fading);
        let mut intf = streams.drop_stream(0, DropStream::InterferenceFading);
        let f_into_0 = fading_sample(&mut intf);
        let rm = sc.sim.rate_model;
        let p = rm.tx_power_w();
        let i0 = interference_power(
            dep.ue[0].pos,
            dep.bs[0].pos,
            &[Transmitter {
                bs: dep.bs[1].pos,
                scheduled_ue: dep.ue[1].pos,
                link: *links.get(1, 0),
                fading: f_into_0,
            }],
            &sc.sim.bs_antenna,
            &sc.sim.ue_antenna,
            p,
            region,
        )
        .unwrap();
        let s0 = p * 100.0 * 10.0 * links.get(0, 0).mean_path_gain * g0;
        let expected = rm.rate(500e6, s0 / (rm.noise_power(500e6) + i0));
        assert!((out.rates[0] / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snr_only_dominates_sinr_pointwise() {
        let region = Region::unit_km_torus();
        let sc_sinr = scenario(SharingRegime::FullSharing, 2, 400);
        let mut sc_snr = sc_sinr.clone();
        sc_snr.sim.interference = InterferenceMode::SnrOnly;
        let dep = Deployment {
            region,
            bs: (0..6).map(|i| site(60.0 + 40.0 * i as f64, 500.0, i % 2)).collect(),
            ue: (0..18).map(|i| site(50.0 + 15.0 * i as f64, 510.0 + (i % 3) as f64, i % 2)).collect(),
        };
        let ch = sc_sinr.sim.channel;
        let links = DropLinks::from_fn(&dep, |b, u| {
            let d = distance(dep.bs[b].pos, dep.ue[u].pos, region);
            LinkState::with_shadowing(LinkClass::Los, d.max(1.0), 0.0, &ch)
        });
        let streams = Streams::new(2);
        let a = run_drop(&dep, &links, &sc_sinr, &streams, 0);
        let b = run_drop(&dep, &links, &sc_snr, &streams, 0);
        assert!(a.rates.iter().zip(&b.rates).all(|(x, y)| x <= y));
        assert!(a.rates.iter().zip(&b.rates).any(|(x, y)| x < y));
    }
}
