use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use checkworthy_core::pipeline::ScoreMatrix;
use checkworthy_core::{Language, Sentence};

pub const DEFAULT_TTL: Duration = Duration::from_secs(3600);

/// Time source for expiry, swappable in tests.
pub trait Clock: Send + Sync + 'static {
    fn now(&self) -> Instant;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Clone)]
pub struct ManualClock {
    now: Arc<Mutex<Instant>>,
}

impl ManualClock {
    pub fn new() -> Self {
        ManualClock {
            now: Arc::new(Mutex::new(Instant::now())),
        }
    }

    pub fn advance(&self, by: Duration) {
        *self.now.lock().unwrap_or_else(|e| e.into_inner()) += by;
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Instant {
        *self.now.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// One analyzed document: its sentences and the scores for every source.
#[derive(Debug)]
pub struct SessionRecord {
    pub id: String,
    pub created_at: Instant,
    pub language: Language,
    pub sentences: Vec<Sentence>,
    pub scores: ScoreMatrix,
}

#[derive(Debug, Clone)]
pub enum Lookup {
    Live(Arc<SessionRecord>),
    Expired,
    Unknown,
}

enum Slot {
    Live(Arc<SessionRecord>),
    // Kept for one more TTL after expiry so late requests get a distinct answer.
    Tombstone(Instant),
}

/// In-memory sessions with a fixed time to live. Expired records are
/// dropped on the next insert; their ids linger as tombstones for one more
/// TTL and are then forgotten.
pub struct SessionStore {
    ttl: Duration,
    clock: Box<dyn Clock>,
    slots: Mutex<HashMap<String, Slot>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self::with_clock(ttl, SystemClock)
    }

    pub fn with_clock(ttl: Duration, clock: impl Clock) -> Self {
        SessionStore {
            ttl,
            clock: Box::new(clock),
            slots: Mutex::new(HashMap::new()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    fn lock(&self) -> MutexGuard<'_, HashMap<String, Slot>> {
        self.slots.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Stores a new record under a fresh random id and returns it.
    pub fn insert(&self, language: Language, sentences: Vec<Sentence>, scores: ScoreMatrix) -> Arc<SessionRecord> {
        let now = self.clock.now();
        let mut slots = self.lock();
        self.sweep(&mut slots, now);
        let id = loop {
            let id = format!("{:032x}", rand::random::<u128>());
            if !slots.contains_key(&id) {
                break id;
            }
        };
        let record = Arc::new(SessionRecord {
            id: id.clone(),
            created_at: now,
            language,
            sentences,
            scores,
        });
        slots.insert(id, Slot::Live(Arc::clone(&record)));
        record
    }

    pub fn get(&self, id: &str) -> Lookup {
        let now = self.clock.now();
        let mut slots = self.lock();
        match slots.get(id) {
            None => Lookup::Unknown,
            Some(Slot::Tombstone(_)) => Lookup::Expired,
            Some(Slot::Live(r)) if now.duration_since(r.created_at) < self.ttl => Lookup::Live(Arc::clone(r)),
            Some(Slot::Live(r)) => {
                let expired_at = r.created_at + self.ttl;
                slots.insert(id.to_string(), Slot::Tombstone(expired_at));
                Lookup::Expired
            }
        }
    }

    /// Number of live, unexpired sessions.
    pub fn live(&self) -> usize {
        let now = self.clock.now();
        self.lock()
            .values()
            .filter(|s| matches!(s, Slot::Live(r) if now.duration_since(r.created_at) < self.ttl))
            .count()
    }

    fn sweep(&self, slots: &mut HashMap<String, Slot>, now: Instant) {
        let ttl = self.ttl;
        slots.retain(|_, slot| match slot {
            Slot::Live(r) if now.duration_since(r.created_at) >= ttl => {
                *slot = Slot::Tombstone(r.created_at + ttl);
                true
            }
            Slot::Live(_) => true,
            Slot::Tombstone(at) => now.duration_since(*at) < ttl,
        });
    }
}
