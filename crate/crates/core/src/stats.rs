//! Keyed randomness and Monte-Carlo bookkeeping.
//!
//! Draws are never taken from a shared sequential stream. Each draw is
//! addressed by an [`RngKey`], so the order in which a simulation asks for
//! random numbers cannot change what it gets.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Address of one random draw: a run seed plus up to four stream labels.
///
/// The seed and the first three labels form the ChaCha key and the fourth
/// label selects the stream, so distinct keys never share a keystream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngKey {
    pub seed: u64,
    pub labels: [u64; 4],
}

impl RngKey {
    pub const fn new(seed: u64, labels: [u64; 4]) -> Self {
        Self { seed, labels }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&self.seed.to_le_bytes());
        for (i, label) in self.labels[..3].iter().enumerate() {
            bytes[8 * (i + 1)..8 * (i + 2)].copy_from_slice(&label.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(self.labels[3]);
        rng
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&self) -> f64 {
        self.rng().random::<f64>()
    }

    /// A 64-bit value, used to derive child seeds.
    pub fn derive_seed(&self) -> u64 {
        self.rng().random::<u64>()
    }
}

const NEGATIVE_WEIGHT_TOL: f64 = 1e-12;
const WEIGHT_SUM_TOL: f64 = 1e-6;

/// Draws index `i` with probability `weights[i]`.
///
/// Negative weights down to `-1e-12` are clamped to zero and the weights are
/// renormalized. Larger negatives, non-finite weights, or a total off by more
/// than `1e-6` are rejected.
pub fn draw_categorical(key: &RngKey, weights: &[f64]) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::Domain("cannot draw from an empty distribution".into()));
    }
    let mut total = 0.0;
    for &w in weights {
        if !w.is_finite() || w < -NEGATIVE_WEIGHT_TOL {
            return Err(Error::Domain(format!("invalid probability weight {w}")));
        }
        total += w.max(0.0);
    }
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Domain(format!("probability weights sum to {total}")));
    }
    let u = key.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        let w = w.max(0.0);
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return Ok(i);
            }
        }
    }
    // Rounding can leave `u` a hair above the accumulated total.
    Ok(last_positive)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

/// Per-variable sufficient statistics (count, sum, sum of squares).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tally {
    vars: BTreeMap<String, Moments>,
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, variable: &str, value: f64) {
        let m = match self.vars.get_mut(variable) {
            Some(m) => m,
            None => self.vars.entry(variable.to_owned()).or_default(),
        };
        m.count += 1;
        m.sum += value;
        m.sum_sq += value * value;
    }

    pub fn merge(&mut self, other: &Tally) {
        for (name, o) in &other.vars {
            let m = self.vars.entry(name.clone()).or_default();
            m.count += o.count;
            m.sum += o.sum;
            m.sum_sq += o.sum_sq;
        }
    }

    pub fn count(&self, variable: &str) -> u64 {
        self.vars.get(variable).map_or(0, |m| m.count)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    /// Sample mean and standard error of the mean.
    pub fn mean_and_se(&self, variable: &str) -> Result<(f64, f64)> {
        let m = self.vars.get(variable).copied().unwrap_or_default();
        if m.count < 2 {
            return Err(Error::InsufficientData { variable: variable.to_owned(), count: m.count });
        }
        let n = m.count as f64;
        let mean = m.sum / n;
        let var = ((m.sum_sq - m.sum * mean) / (n - 1.0)).max(0.0);
        Ok((mean, (var / n).sqrt()))
    }

    pub fn mean(&self, variable: &str) -> Option<f64> {
        self.vars.get(variable).filter(|m| m.count > 0).map(|m| m.sum / m.count as f64)
    }
}

/// Shots per work unit. Fixed so that results do not depend on pool size.
pub const CHUNK: u64 = 2048;

/// Runs `shots` independent shots in parallel and merges their tallies.
///
/// Shots are grouped into fixed chunks that are tallied independently and
/// merged in chunk order, so the result is bit-identical for any number of
/// worker threads.
pub fn run_shots<F>(shots: u64, shot: F) -> Result<Tally>
where
    F: Fn(u64, &mut Tally) -> Result<()> + Sync,
{
    let chunks = shots.div_ceil(CHUNK);
    let partials: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(shots) {
                shot(i, &mut t)?;
            }
            Ok(t)
        })
        .collect();
    let mut total = Tally::new();
    for p in partials {
        total.merge(&p?);
    }
    Ok(total)
}

/// Two-sample z statistic for the difference of two independent means.
pub fn z_score(a: (f64, f64), b: (f64, f64)) -> f64 {
    let se = (a.1 * a.1 + b.1 * b.1).sqrt();
    if se == 0.0 {
        if a.0 == b.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a.0 - b.0) / se
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_weights_always_pick_the_mass() {
        for i in 0..100 {
            let key = RngKey::new(1, [i, 0, 0, 0]);
            assert_eq!(draw_categorical(&key, &[1.0, 0.0, 0.0]).unwrap(), 0);
            assert_eq!(draw_categorical(&key, &[0.0, 0.0, 1.0]).unwrap(), 2);
        }
    }

    #[test]
    fn fair_coin_frequency_is_within_band() {
        let n = 100_000;
        let zeros =
            (0..n).filter(|&i| draw_categorical(&RngKey::new(42, [7, i, 0, 0]), &[0.5, 0.5]).unwrap() == 0).count();
        let f = zeros as f64 / n as f64;
        assert!((0.494..=0.506).contains(&f), "frequency {f}");
    }

    #[test]
    fn same_key_same_draw() {
        let key = RngKey::new(99, [1, 2, 3, 4]);
        let w = [0.2, 0.3, 0.5];
        assert_eq!(draw_categorical(&key, &w).unwrap(), draw_categorical(&key, &w).unwrap());
        assert_eq!(key.uniform(), key.uniform());
    }

    #[test]
    fn stream_label_changes_the_draw() {
        let a = RngKey::new(5, [0, 0, 0, 0]).uniform();
        let b = RngKey::new(5, [0, 0, 0, 1]).uniform();
        let c = RngKey::new(5, [0, 0, 1, 0]).uniform();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn weight_validation() {
        let key = RngKey::new(0, [0; 4]);
        assert!(draw_categorical(&key, &[-1e-13, 1.0]).is_ok());
        assert_eq!(draw_categorical(&key, &[-1e-13, 1.0]).unwrap(), 1);
        assert!(draw_categorical(&key, &[-1e-3, 1.001]).is_err());
        assert!(draw_categorical(&key, &[0.5, 0.4]).is_err());
        assert!(draw_categorical(&key, &[f64::NAN, 1.0]).is_err());
        assert!(draw_categorical(&key, &[]).is_err());
        // Within the renormalization band.
        assert!(draw_categorical(&key, &[0.5, 0.5 + 1e-8]).is_ok());
    }

    #[test]
    fn constant_samples_have_zero_se() {
        let mut t = Tally::new();
        for _ in 0..1000 {
            t.record("x", -1.0);
            t.record("y", 0.5);
        }
        assert_eq!(t.mean_and_se("x").unwrap(), (-1.0, 0.0));
        assert_eq!(t.mean_and_se("y").unwrap(), (0.5, 0.0));
    }

    #[test]
    fn fair_sign_samples_have_unit_scale_se() {
        let mut t = Tally::new();
        for i in 0..10_000u64 {
            let u = RngKey::new(3, [i, 0, 0, 0]).uniform();
            t.record("s", if u < 0.5 { 1.0 } else { -1.0 });
        }
        let (_, se) = t.mean_and_se("s").unwrap();
        assert!((se - 0.01).abs() < 5e-4, "se {se}");
    }

    #[test]
    fn insufficient_data() {
        let mut t = Tally::new();
        assert!(matches!(t.mean_and_se("x"), Err(Error::InsufficientData { count: 0, .. })));
        t.record("x", 1.0);
        assert!(matches!(t.mean_and_se("x"), Err(Error::InsufficientData { count: 1, .. })));
    }

    #[test]
    fn run_shots_is_independent_of_pool_size() {
        let shot = |i: u64, t: &mut Tally| {
            t.record("u", RngKey::new(8, [i, 0, 0, 0]).uniform());
            Ok(())
        };
        let wide = run_shots(10_000, shot).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let narrow = pool.install(|| run_shots(10_000, shot)).unwrap();
        assert_eq!(wide, narrow);
        assert_eq!(wide.count("u"), 10_000);
    }

    proptest! {
        #[test]
        fn merged_tallies_match_concatenation(
            xs in prop::collection::vec(-1000i32..1000, 0..60),
            ys in prop::collection::vec(-1000i32..1000, 0..60),
        ) {
            let mut a = Tally::new();
            let mut b = Tally::new();
            let mut all = Tally::new();
            for &x in &xs { a.record("v", x as f64); all.record("v", x as f64); }
            for &y in &ys { b.record("v", y as f64); all.record("v", y as f64); }
            let mut ab = a.clone();
            ab.merge(&b);
            let mut ba = b.clone();
            ba.merge(&a);
            // Integer samples keep every partial sum exact.
            prop_assert_eq!(&ab, &all);
            prop_assert_eq!(&ba, &all);
        }

        #[test]
        fn merge_is_associative(
            xs in prop::collection::vec(-50i32..50, 0..20),
            ys in prop::collection::vec(-50i32..50, 0..20),
            zs in prop::collection::vec(-50i32..50, 0..20),
        ) {
            let tally = |v: &[i32], name: &str| {
                let mut t = Tally::new();
                for &x in v { t.record(name, x as f64); }
                t
            };
            let (a, b, c) = (tally(&xs, "p"), tally(&ys, "q"), tally(&zs, "p"));
            let mut left = a.clone(); left.merge(&b); left.merge(&c);
            let mut bc = b.clone(); bc.merge(&c);
            let mut right = a.clone(); right.merge(&bc);
            prop_assert_eq!(left, right);
        }

        #[test]
        fn clamping_never_moves_weights_far(w in 0.0f64..1.0, tiny in 0.0f64..1e-12) {
            let key = RngKey::new(0, [0; 4]);
            let i = draw_categorical(&key, &[-tiny, w, 1.0 - w]).unwrap();
            prop_assert!(i == 1 || i == 2);
        }
    }
}
