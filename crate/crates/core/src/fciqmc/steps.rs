//! The per-iteration moves: spawning, death/cloning, annihilation, and the
//! population-control shift.
//!
//! Parent copies are handled in bulk. The `n` copies of one sign on one key
//! are split over proposals with binomial draws, and the children for a
//! proposal chosen `m` times are `m⌊p⌋ + Binomial(m, p − ⌊p⌋)`. This has the
//! same distribution as treating each copy separately.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::circuit::{BasisState, LocalOp, C64};
use crate::clock::{ClockKey, ClockOracle};

use super::store::{Bucket, Child, WalkerStore, Weight};
use super::{FciqmcError, RngStreams, SimParams};

/// Matrix elements below this magnitude never spawn.
const SPAWN_CUTOFF: f64 = 1e-14;

pub type SpawnBuffer = Vec<Child>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DeathCounts {
    pub died: u64,
    pub cloned: u64,
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("valid binomial").sample(rng)
    }
}

/// Number of successes when each of `n` trials yields `⌊p⌋` plus a
/// Bernoulli(`p − ⌊p⌋`) extra.
fn stochastic_round<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> Option<u64> {
    let whole = p.floor();
    let base = n.checked_mul(whole as u64)?;
    base.checked_add(binomial(rng, n, p - whole))
}

fn signum(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Places `initial_walkers` positive real walkers on `(ψ₀, t = 0)`.
pub fn init_population(p: &SimParams, o: &ClockOracle) -> WalkerStore {
    let mut store = WalkerStore::empty(o.time_points());
    *store.bucket_mut(0) = Bucket::from_sorted_unchecked(vec![(o.psi0(), Weight::new(p.initial_walkers, 0))]);
    store
}

/// Spawn children from every walker of bucket `t` into `out`. Returns the
/// number of walkers spawned.
pub fn spawn_bucket<R: Rng + ?Sized>(
    o: &ClockOracle,
    t: usize,
    bucket: &Bucket,
    dtau: f64,
    rng: &mut R,
    out: &mut Vec<Child>,
) -> Result<u64, FciqmcError> {
    let last = o.time_points() - 1;
    let overflow = FciqmcError::Overflow { t };
    let mut spawned = 0u64;
    for &(state, w) in bucket.entries() {
        for (copies, sign, imaginary) in [(w.re.unsigned_abs(), w.re.signum(), false), (w.im.unsigned_abs(), w.im.signum(), true)] {
            if copies == 0 {
                continue;
            }
            let moves: [(usize, f64, u64); 2] = if t == 0 {
                [(1, 1.0, copies), (0, 0.0, 0)]
            } else if t == last {
                [(last - 1, 1.0, copies), (0, 0.0, 0)]
            } else {
                let up = binomial(rng, copies, 0.5);
                [(t + 1, 0.5, up), (t - 1, 0.5, copies - up)]
            };
            for (to_t, p_time, n) in moves {
                if n == 0 {
                    continue;
                }
                let (op, dagger) = o.link_between(t, to_t);
                let dim = op.dim();
                let scale = dtau * dim as f64 / p_time;
                let from_local = op.local_index(state);
                let mut remaining = n;
                for l in 0..dim {
                    if remaining == 0 {
                        break;
                    }
                    let m = if l + 1 == dim { remaining } else { binomial(rng, remaining, 1.0 / (dim - l) as f64) };
                    remaining -= m;
                    if m == 0 {
                        continue;
                    }
                    let amp = if dagger { op.matrix()[(from_local, l)].conj() } else { op.matrix()[(l, from_local)] };
                    let h = -0.5 * amp;
                    // real parents: R ← Re h (sign −), I ← Im h (sign −)
                    // imaginary parents: R ← Im h (sign +), I ← Re h (sign −)
                    let (re_src, re_sign, im_src, im_sign) =
                        if imaginary { (h.im, 1, h.re, -1) } else { (h.re, -1, h.im, -1) };
                    let mut child = Weight::ZERO;
                    if re_src.abs() > SPAWN_CUTOFF {
                        let k = stochastic_round(rng, m, scale * re_src.abs()).ok_or(overflow.clone())?;
                        child.re = i64::try_from(k).map_err(|_| overflow.clone())? * sign * re_sign * signum(re_src);
                    }
                    if im_src.abs() > SPAWN_CUTOFF {
                        let k = stochastic_round(rng, m, scale * im_src.abs()).ok_or(overflow.clone())?;
                        child.im = i64::try_from(k).map_err(|_| overflow.clone())? * sign * im_sign * signum(im_src);
                    }
                    if !child.is_zero() {
                        spawned += child.magnitude();
                        out.push(Child { key: ClockKey::new(op.embed(state, l), to_t), weight: child });
                    }
                }
            }
        }
    }
    Ok(spawned)
}

/// Spawning over the whole store, bucket by bucket in time order.
pub fn spawn_step(store: &WalkerStore, o: &ClockOracle, dtau: f64, rngs: &mut RngStreams) -> Result<(SpawnBuffer, u64), FciqmcError> {
    let mut buffer = Vec::new();
    let mut spawned = 0;
    for t in 0..store.time_points() {
        spawned += spawn_bucket(o, t, store.bucket(t), dtau, rngs.stream(t), &mut buffer)?;
    }
    Ok((buffer, spawned))
}

/// Diagonal death (`p_d > 0`) or cloning (`p_d < 0`) of the parents in bucket
/// `t`, with `p_d = δτ(H_ii − S)`.
pub fn death_bucket<R: Rng + ?Sized>(
    o: &ClockOracle,
    t: usize,
    bucket: &mut Bucket,
    shift: f64,
    dtau: f64,
    rng: &mut R,
) -> Result<DeathCounts, FciqmcError> {
    let mut counts = DeathCounts::default();
    let entries = bucket.entries_mut();
    for (state, w) in entries.iter_mut() {
        let pd = dtau * (o.diagonal_element(ClockKey::new(*state, t)) - shift);
        for comp in [&mut w.re, &mut w.im] {
            let n = comp.unsigned_abs();
            if n == 0 || pd == 0.0 {
                continue;
            }
            let sign = comp.signum();
            if pd > 0.0 {
                let dead = binomial(rng, n, pd.min(1.0));
                counts.died += dead;
                *comp -= sign * dead as i64;
            } else {
                let extra = stochastic_round(rng, n, -pd).ok_or(FciqmcError::Overflow { t })?;
                counts.cloned += extra;
                let extra = i64::try_from(extra).map_err(|_| FciqmcError::Overflow { t })?;
                *comp = comp.checked_add(sign * extra).ok_or(FciqmcError::Overflow { t })?;
            }
        }
    }
    entries.retain(|(_, w)| !w.is_zero());
    Ok(counts)
}

pub fn death_step(
    store: &mut WalkerStore,
    o: &ClockOracle,
    shift: f64,
    dtau: f64,
    rngs: &mut RngStreams,
) -> Result<DeathCounts, FciqmcError> {
    let mut total = DeathCounts::default();
    for t in 0..store.time_points() {
        let c = death_bucket(o, t, store.bucket_mut(t), shift, dtau, rngs.stream(t))?;
        total.died += c.died;
        total.cloned += c.cloned;
    }
    Ok(total)
}

/// Merge `children` (all at this bucket's time) into the parents, summing
/// weights per state and dropping zeros. Returns the number of walkers lost
/// to sign cancellation.
pub fn annihilate_bucket(bucket: &mut Bucket, t: usize, mut children: Vec<(BasisState, Weight)>) -> Result<u64, FciqmcError> {
    if children.is_empty() {
        return Ok(0);
    }
    children.sort_unstable_by_key(|&(s, _)| s);
    let parents = std::mem::take(bucket.entries_mut());
    let mut merged = Vec::with_capacity(parents.len() + children.len());
    let mut annihilated = 0u64;
    let (mut pi, mut ci) = (0, 0);
    while pi < parents.len() || ci < children.len() {
        let state = match (parents.get(pi), children.get(ci)) {
            (Some(&(p, _)), Some(&(c, _))) => p.min(c),
            (Some(&(p, _)), None) => p,
            (None, Some(&(c, _))) => c,
            (None, None) => unreachable!(),
        };
        let mut sum = Weight::ZERO;
        let (mut abs_re, mut abs_im) = (0u64, 0u64);
        let mut take = |w: Weight| -> Result<(), FciqmcError> {
            abs_re += w.re.unsigned_abs();
            abs_im += w.im.unsigned_abs();
            sum = sum.checked_add(w).ok_or(FciqmcError::Overflow { t })?;
            Ok(())
        };
        while pi < parents.len() && parents[pi].0 == state {
            take(parents[pi].1)?;
            pi += 1;
        }
        while ci < children.len() && children[ci].0 == state {
            take(children[ci].1)?;
            ci += 1;
        }
        annihilated += (abs_re - sum.re.unsigned_abs()) + (abs_im - sum.im.unsigned_abs());
        if !sum.is_zero() {
            merged.push((state, sum));
        }
    }
    *bucket.entries_mut() = merged;
    Ok(annihilated)
}

pub fn annihilate(store: &mut WalkerStore, buffer: SpawnBuffer) -> Result<u64, FciqmcError> {
    let mut per_t: Vec<Vec<(BasisState, Weight)>> = vec![Vec::new(); store.time_points()];
    for c in buffer {
        per_t[c.key.t].push((c.key.state, c.weight));
    }
    let mut total = 0;
    for (t, children) in per_t.into_iter().enumerate() {
        total += annihilate_bucket(store.bucket_mut(t), t, children)?;
    }
    Ok(total)
}

/// `S ← S − ζ/(A δτ) · ln(N_now / N_prev)`.
pub fn update_shift(shift: f64, walkers_now: u64, walkers_prev: u64, p: &SimParams) -> Result<f64, FciqmcError> {
    if walkers_prev == 0 {
        return Err(FciqmcError::ZeroPopulation);
    }
    let ratio = walkers_now as f64 / walkers_prev as f64;
    Ok(shift - p.shift_damping / (p.shift_interval as f64 * p.dtau) * ratio.ln())
}

/// Numerator `Re Σ conj(W_j) O_ji W_i` and denominator `Σ |W_i|²` of the
/// quadratic estimator on one bucket.
pub fn measure_parts(bucket: &Bucket, op: &LocalOp) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(i, wi) in bucket.entries() {
        den += wi.norm_sqr();
        let li = op.local_index(i);
        let wi = wi.to_complex();
        for lj in 0..op.dim() {
            let o_ji: C64 = op.matrix()[(lj, li)];
            if o_ji.norm_sqr() == 0.0 {
                continue;
            }
            let j = op.embed(i, lj);
            let wj = if j == i { Some(wi) } else { bucket.get(j).map(Weight::to_complex) };
            if let Some(wj) = wj {
                num += (wj.conj() * o_ji * wi).re;
            }
        }
    }
    (num, den)
}

/// `⟨O⟩` on the time-`t` bucket, or `None` if it is empty.
pub fn measure(store: &WalkerStore, op: &LocalOp, t: usize) -> Option<f64> {
    let (num, den) = measure_parts(store.bucket(t), op);
    (den > 0.0).then(|| num / den)
}
