use rand::Rng;

use super::Lifetime;

/// Schedule in which queue `refreshed` is replaced by a fresh copy at each
/// epoch start `ℓ ≥ 2` with probability `p`; all other queues persist.
/// One uniform draw is made per epoch boundary regardless of `p`.
pub fn dynamic_refresh_process<R: Rng + ?Sized>(
    n_queues: usize,
    refreshed: usize,
    p: f64,
    epoch_len: u64,
    horizon: u64,
    rng: &mut R,
) -> Vec<Lifetime> {
    let mut out: Vec<Lifetime> = (0..n_queues)
        .filter(|&q| q != refreshed)
        .map(|queue| Lifetime { queue, join: 1, leave: None })
        .collect();
    let mut current = Lifetime { queue: refreshed, join: 1, leave: None };
    let mut t0 = epoch_len + 1;
    while t0 <= horizon {
        if rng.gen::<f64>() < p {
            out.push(Lifetime { leave: Some(t0 - 1), ..current });
            current = Lifetime { queue: refreshed, join: t0, leave: None };
        }
        t0 += epoch_len;
    }
    out.push(current);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamKey};

    #[test]
    fn never_refresh_is_static() {
        let mut rng = stream(1, StreamKey::Refresh);
        let s = dynamic_refresh_process(2, 1, 0.0, 10, 100, &mut rng);
        assert_eq!(
            s,
            vec![Lifetime { queue: 0, join: 1, leave: None }, Lifetime { queue: 1, join: 1, leave: None }]
        );
    }

    #[test]
    fn always_refresh_every_epoch() {
        let mut rng = stream(1, StreamKey::Refresh);
        let s = dynamic_refresh_process(2, 1, 1.0, 10, 35, &mut rng);
        let q1: Vec<_> = s.iter().filter(|l| l.queue == 1).map(|l| (l.join, l.leave)).collect();
        assert_eq!(q1, vec![(1, Some(10)), (11, Some(20)), (21, Some(30)), (31, None)]);
    }

    #[test]
    fn refresh_frequency_tracks_p() {
        let mut rng = stream(2, StreamKey::Refresh);
        let s = dynamic_refresh_process(2, 1, 0.25, 1, 40_001, &mut rng);
        let refreshes = s.iter().filter(|l| l.queue == 1).count() - 1;
        // 4σ of Binomial(40000, 0.25) ≈ 346.
        assert!((refreshes as i64 - 10_000).abs() < 350, "{refreshes}");
    }
}
