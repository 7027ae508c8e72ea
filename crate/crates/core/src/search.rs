//! Best-first (A*) search over a pluggable state space.

use std::cmp::Ordering;
use std::collections::hash_map::{DefaultHasher, Entry as MapEntry};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::graph::Time;
use crate::schedule::Schedule;

/// A state space searched by [`astar`].
///
/// `f` must be admissible and should be monotone along paths.
pub trait SearchSpace {
    type State;

    fn root(&self) -> Self::State;
    fn expand(&self, s: &Self::State, out: &mut Vec<Self::State>);
    fn f(&self, s: &Self::State) -> Time;
    fn depth(&self, s: &Self::State) -> usize;
    fn is_goal(&self, s: &Self::State) -> bool;
    /// Canonical key for duplicate detection, or `None` when the space is
    /// duplicate-free by construction.
    fn key(&self, s: &Self::State) -> Option<Vec<u8>>;
    /// Complete encoding of the state, used by audits and the oracle.
    fn full_key(&self, s: &Self::State) -> Vec<u8>;
    /// Schedule represented by a goal state.
    fn schedule(&self, s: &Self::State) -> Schedule;
    /// Rough heap footprint of one stored state.
    fn state_bytes(&self, s: &Self::State) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Solved,
    Timeout,
    Memory,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Solved => "solved",
            Outcome::Timeout => "timeout",
            Outcome::Memory => "memory",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchStats {
    pub states_created: u64,
    pub states_expanded: u64,
    pub duplicates_discarded: u64,
    pub peak_open_size: u64,
    /// Seconds, measured by the configured [`Clock`].
    pub elapsed: f64,
    pub outcome: Outcome,
}

/// How elapsed time is measured.
///
/// `Expansions` makes timeouts and reported times a pure function of the
/// search, so repeated runs produce identical output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Clock {
    #[default]
    Wall,
    Expansions { per_second: u64 },
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Known valid schedule; states with larger f are never stored.
    pub upper_bound: Option<Schedule>,
    pub upper_bound_length: Time,
    pub timeout: Option<Duration>,
    pub clock: Clock,
    /// Approximate cap on bytes held by the open list and duplicate set.
    pub memory_limit: Option<usize>,
    pub duplicate_detection: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            upper_bound: None,
            upper_bound_length: Time::MAX,
            timeout: None,
            clock: Clock::Wall,
            memory_limit: None,
            duplicate_detection: true,
        }
    }
}

impl SearchConfig {
    pub fn with_upper_bound(mut self, s: Schedule, length: Time) -> Self {
        self.upper_bound = Some(s);
        self.upper_bound_length = length;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub schedule: Option<Schedule>,
    pub length: Option<Time>,
    pub stats: SearchStats,
}

struct Entry<S> {
    f: Time,
    depth: usize,
    seq: u64,
    state: S,
}

impl<S> PartialEq for Entry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S> Eq for Entry<S> {}

impl<S> PartialOrd for Entry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S> Ord for Entry<S> {
    // max-heap: lowest f, then deepest, then oldest pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Timer {
    clock: Clock,
    started: Instant,
}

impl Timer {
    fn elapsed(&self, expanded: u64) -> f64 {
        match self.clock {
            Clock::Wall => self.started.elapsed().as_secs_f64(),
            Clock::Expansions { per_second } => expanded as f64 / per_second.max(1) as f64,
        }
    }
}

pub fn astar<P: SearchSpace>(space: &P, cfg: &SearchConfig) -> SearchResult {
    astar_observed(space, cfg, &mut |_, _| {})
}

/// [`astar`] that reports every created state, with its f-value, to
/// `observer` before any duplicate or bound check.
pub fn astar_observed<P: SearchSpace>(
    space: &P,
    cfg: &SearchConfig,
    observer: &mut dyn FnMut(&P::State, Time),
) -> SearchResult {
    let timer = Timer { clock: cfg.clock, started: Instant::now() };
    let mut stats = SearchStats {
        states_created: 0,
        states_expanded: 0,
        duplicates_discarded: 0,
        peak_open_size: 0,
        elapsed: 0.0,
        outcome: Outcome::Solved,
    };
    let bound = if cfg.upper_bound.is_some() { cfg.upper_bound_length } else { Time::MAX };
    let mut open: BinaryHeap<Entry<P::State>> = BinaryHeap::new();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut bytes = 0usize;
    let mut seq = 0u64;

    let root = space.root();
    let root_f = space.f(&root);
    stats.states_created += 1;
    observer(&root, root_f);
    if cfg.duplicate_detection {
        if let Some(k) = space.key(&root) {
            bytes += k.len() + 48;
            seen.insert(k);
        }
    }
    if root_f <= bound {
        bytes += space.state_bytes(&root);
        open.push(Entry { f: root_f, depth: space.depth(&root), seq, state: root });
        seq += 1;
    }
    stats.peak_open_size = open.len() as u64;

    let finish = |mut stats: SearchStats, expanded: u64, schedule: Option<Schedule>, length: Option<Time>| {
        stats.elapsed = timer.elapsed(expanded);
        SearchResult { schedule, length, stats }
    };

    let mut children = Vec::new();
    while let Some(entry) = open.pop() {
        bytes = bytes.saturating_sub(space.state_bytes(&entry.state));
        if let Some(h) = &cfg.upper_bound {
            if entry.f >= bound {
                // nothing left in the open list can beat the known schedule
                return finish(stats.clone(), stats.states_expanded, Some(h.clone()), Some(bound));
            }
        }
        if space.is_goal(&entry.state) {
            let s = space.schedule(&entry.state);
            return finish(stats.clone(), stats.states_expanded, Some(s), Some(entry.f));
        }
        if let Some(limit) = cfg.timeout {
            if timer.elapsed(stats.states_expanded) > limit.as_secs_f64() {
                stats.outcome = Outcome::Timeout;
                return finish(stats.clone(), stats.states_expanded, None, None);
            }
        }
        stats.states_expanded += 1;
        children.clear();
        space.expand(&entry.state, &mut children);
        for child in children.drain(..) {
            let f = space.f(&child);
            stats.states_created += 1;
            observer(&child, f);
            if f > bound {
                continue;
            }
            if cfg.duplicate_detection {
                if let Some(k) = space.key(&child) {
                    if seen.contains(&k) {
                        stats.duplicates_discarded += 1;
                        continue;
                    }
                    bytes += k.len() + 48;
                    seen.insert(k);
                }
            }
            bytes += space.state_bytes(&child);
            open.push(Entry { f, depth: space.depth(&child), seq, state: child });
            seq += 1;
        }
        stats.peak_open_size = stats.peak_open_size.max(open.len() as u64);
        if let Some(limit) = cfg.memory_limit {
            if bytes > limit {
                stats.outcome = Outcome::Memory;
                return finish(stats.clone(), stats.states_expanded, None, None);
            }
        }
    }
    // Every stored state was pruned by the bound, so the bound is optimal.
    match &cfg.upper_bound {
        Some(h) => finish(stats.clone(), stats.states_expanded, Some(h.clone()), Some(bound)),
        None => unreachable!("a finite state space always contains a goal"),
    }
}

/// Records full state encodings to count repeated states and 64-bit hash
/// collisions between distinct states.
#[derive(Debug, Default)]
pub struct DuplicateAudit {
    seen: HashSet<Vec<u8>>,
    by_hash: HashMap<u64, Vec<u8>>,
    pub states: u64,
    pub duplicates: u64,
    pub collisions: u64,
}

impl DuplicateAudit {
    pub fn record(&mut self, key: Vec<u8>) {
        self.states += 1;
        if self.seen.contains(&key) {
            self.duplicates += 1;
            return;
        }
        let mut h = DefaultHasher::new();
        key.hash(&mut h);
        match self.by_hash.entry(h.finish()) {
            MapEntry::Occupied(e) => {
                if *e.get() != key {
                    self.collisions += 1;
                }
            }
            MapEntry::Vacant(e) => {
                e.insert(key.clone());
            }
        }
        self.seen.insert(key);
    }
}

/// Runs [`astar`] while auditing every created state.
pub fn astar_audited<P: SearchSpace>(space: &P, cfg: &SearchConfig) -> (SearchResult, DuplicateAudit) {
    let mut audit = DuplicateAudit::default();
    let r = astar_observed(space, cfg, &mut |s, _| audit.record(space.full_key(s)));
    (r, audit)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Chooses bits one at a time; cost is the number of ones plus a
    /// penalty when the final word is zero.
    struct Bits {
        len: usize,
    }

    impl SearchSpace for Bits {
        type State = Vec<bool>;

        fn root(&self) -> Vec<bool> {
            Vec::new()
        }
        fn expand(&self, s: &Vec<bool>, out: &mut Vec<Vec<bool>>) {
            for b in [false, true] {
                let mut c = s.clone();
                c.push(b);
                out.push(c);
            }
        }
        fn f(&self, s: &Vec<bool>) -> Time {
            let ones = s.iter().filter(|&&b| b).count() as Time;
            if s.len() == self.len && ones == 0 {
                10
            } else {
                ones.max(1)
            }
        }
        fn depth(&self, s: &Vec<bool>) -> usize {
            s.len()
        }
        fn is_goal(&self, s: &Vec<bool>) -> bool {
            s.len() == self.len
        }
        fn key(&self, _: &Vec<bool>) -> Option<Vec<u8>> {
            None
        }
        fn full_key(&self, s: &Vec<bool>) -> Vec<u8> {
            s.iter().map(|&b| b as u8).collect()
        }
        fn schedule(&self, s: &Vec<bool>) -> Schedule {
            Schedule::new(vec![0; s.len()], vec![0; s.len()], 1)
        }
        fn state_bytes(&self, s: &Vec<bool>) -> usize {
            s.len() + 24
        }
    }

    #[test]
    fn finds_cheapest_goal() {
        let r = astar(&Bits { len: 3 }, &SearchConfig::default());
        assert_eq!(r.length, Some(1));
        assert_eq!(r.stats.outcome, Outcome::Solved);
        assert!(r.stats.states_expanded <= r.stats.states_created);
        assert_eq!(r.stats.duplicates_discarded, 0);
    }

    #[test]
    fn upper_bound_short_circuits() {
        let known = Schedule::new(vec![0; 3], vec![0; 3], 1);
        let cfg = SearchConfig::default().with_upper_bound(known.clone(), 1);
        let r = astar(&Bits { len: 3 }, &cfg);
        assert_eq!(r.stats.states_expanded, 0);
        assert_eq!(r.schedule, Some(known));
    }

    #[test]
    fn expansion_clock_times_out() {
        let cfg = SearchConfig {
            timeout: Some(Duration::from_secs(1)),
            clock: Clock::Expansions { per_second: 2 },
            ..SearchConfig::default()
        };
        // f is flat at 1 for a long time, so the search must expand many states
        let r = astar(&Bits { len: 40 }, &cfg);
        assert_eq!(r.stats.outcome, Outcome::Timeout);
        assert_eq!(r.stats.states_expanded, 3);
    }

    #[test]
    fn memory_cap_reports_outcome() {
        let cfg = SearchConfig { memory_limit: Some(64), ..SearchConfig::default() };
        let r = astar(&Bits { len: 40 }, &cfg);
        assert_eq!(r.stats.outcome, Outcome::Memory);
        assert!(r.schedule.is_none());
    }

    #[test]
    fn stats_serialize_with_flat_names() {
        let r = astar(&Bits { len: 2 }, &SearchConfig::default());
        let json = serde_json::to_string(&r.stats).unwrap();
        for field in ["statesCreated", "statesExpanded", "duplicatesDiscarded", "peakOpenSize", "elapsed", "outcome"] {
            assert!(json.contains(field), "{json}");
        }
    }

    #[test]
    fn audit_counts_repeats() {
        let mut a = DuplicateAudit::default();
        a.record(vec![1, 2]);
        a.record(vec![1, 2]);
        a.record(vec![3]);
        assert_eq!((a.states, a.duplicates, a.collisions), (3, 1, 0));
    }

    #[test]
    fn observer_sees_every_created_state() {
        let mut seen = 0u64;
        let r = astar_observed(&Bits { len: 3 }, &SearchConfig::default(), &mut |_, _| seen += 1);
        assert_eq!(seen, r.stats.states_created);
    }
}
