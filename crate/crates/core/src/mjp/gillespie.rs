use super::ReactionNetwork;
use crate::dist::exponential;
use crate::rng::RngStream;

/// Exact MJP state at `t1` started from `x0` at `t0` (direct method).
pub fn gillespie_simulate(
    net: &ReactionNetwork,
    x0: &[i64],
    theta: &[f64],
    t0: f64,
    t1: f64,
    rng: &mut RngStream,
) -> Vec<i64> {
    assert!(t1 >= t0, "gillespie_simulate needs t1 >= t0");
    let mut x = x0.to_vec();
    let mut h = vec![0.0; net.num_reactions()];
    gillespie_advance(net, &mut x, theta, t1 - t0, rng, &mut h);
    x
}

/// Advances `x` in place over a horizon `dt`; returns the number of events.
pub(crate) fn gillespie_advance(
    net: &ReactionNetwork,
    x: &mut [i64],
    theta: &[f64],
    dt: f64,
    rng: &mut RngStream,
    h: &mut [f64],
) -> u64 {
    let mut t = 0.0;
    let mut events = 0;
    loop {
        net.hazards_into(x, theta, h);
        let total: f64 = h.iter().sum();
        if total <= 0.0 {
            return events;
        }
        t += exponential(rng, total);
        if t > dt {
            return events;
        }
        let mut u = rng.uniform() * total;
        let mut pick = h.len() - 1;
        for (i, &hi) in h.iter().enumerate() {
            if u < hi {
                pick = i;
                break;
            }
            u -= hi;
        }
        // Rounding can leave `u` just past the last positive hazard.
        while h[pick] == 0.0 {
            pick -= 1;
        }
        net.fire(x, pick, 1);
        events += 1;
    }
}
