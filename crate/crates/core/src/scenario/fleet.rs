use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FleetSpec, TruncNormal};
use crate::ev::{EvState, EvType};
use crate::rng::{stream_rng, Stream};

/// EVs grouped by station, in ascending station and EV id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    pub stations: Vec<Vec<EvState>>,
}

impl Fleet {
    pub fn n_evs(&self) -> usize {
        self.stations.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EvState> {
        self.stations.iter().flatten()
    }
}

/// Draws one sample from `d` by rejection, so the density shape inside the
/// bounds is preserved.
pub fn sample_truncated_normal<R: Rng + ?Sized>(d: &TruncNormal, rng: &mut R) -> f64 {
    let sd = d.variance.sqrt();
    if sd == 0.0 {
        return d.mean.clamp(d.lower, d.upper);
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let x = d.mean + sd * z;
        if d.lower <= x && x <= d.upper {
            return x;
        }
    }
}

/// Generates station `station` of the fleet from its own derived seed stream,
/// so stations can be built in any order or in parallel.
pub fn generate_station(spec: &FleetSpec, seed: u64, station: usize) -> Vec<EvState> {
    let mut rng = stream_rng(seed, Stream::Fleet, station as u64);
    let per_station = spec.evs_per_station();
    let mut evs = Vec::with_capacity(per_station);
    let mut local = 0usize;
    for t in EvType::ALL {
        let dist = spec.soc.for_type(t);
        for _ in 0..spec.type_counts.get(t) {
            let init = sample_truncated_normal(&dist.initial, &mut rng);
            let exp = match &dist.expected {
                Some(e) => sample_truncated_normal(e, &mut rng),
                None => init,
            };
            let id = (station * per_station + local) as u32;
            evs.push(EvState::new(
                id,
                t,
                init,
                exp,
                spec.e_rated_kwh,
                spec.p_max_kw,
                spec.plug_in_s,
                spec.plug_out_s,
            ));
            local += 1;
        }
    }
    evs
}

/// Monte Carlo fleet for `spec`, deterministic in `seed`.
pub fn generate_fleet(spec: &FleetSpec, seed: u64) -> Fleet {
    use rayon::prelude::*;
    let stations = (0..spec.n_stations())
        .into_par_iter()
        .map(|j| generate_station(spec, seed, j))
        .collect();
    Fleet { stations }
}
