use rand::seq::index;
use rand::Rng;

use crate::scalar::Scalar;

/// One environment transition `(s, a, r, s', done)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<T> {
    pub state: Vec<T>,
    pub action: usize,
    pub reward: T,
    pub next_state: Vec<T>,
    pub done: bool,
}

/// Borrowed view of a stored transition.
#[derive(Clone, Copy, Debug)]
pub struct TransitionRef<'a, T> {
    pub state: &'a [T],
    pub action: usize,
    pub reward: T,
    pub next_state: &'a [T],
    pub done: bool,
}

/// Fixed-capacity ring of transitions; the oldest entry is overwritten
/// once full. States are stored in flat arrays.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    dim: usize,
    states: Vec<T>,
    next_states: Vec<T>,
    actions: Vec<usize>,
    rewards: Vec<T>,
    dones: Vec<bool>,
    len: usize,
    head: usize,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize, state_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            dim: state_dim,
            states: Vec::new(),
            next_states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            len: 0,
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, state: &[T], action: usize, reward: T, next_state: &[T], done: bool) {
        assert_eq!(state.len(), self.dim);
        assert_eq!(next_state.len(), self.dim);
        if self.len < self.capacity {
            self.states.extend_from_slice(state);
            self.next_states.extend_from_slice(next_state);
            self.actions.push(action);
            self.rewards.push(reward);
            self.dones.push(done);
            self.len += 1;
        } else {
            let h = self.head;
            self.states[h * self.dim..(h + 1) * self.dim].copy_from_slice(state);
            self.next_states[h * self.dim..(h + 1) * self.dim].copy_from_slice(next_state);
            self.actions[h] = action;
            self.rewards[h] = reward;
            self.dones[h] = done;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    pub fn push_transition(&mut self, t: &Transition<T>) {
        self.push(&t.state, t.action, t.reward, &t.next_state, t.done);
    }

    /// Storage slot `i` (not insertion order once the ring has wrapped).
    pub fn get(&self, i: usize) -> TransitionRef<'_, T> {
        assert!(i < self.len);
        TransitionRef {
            state: &self.states[i * self.dim..(i + 1) * self.dim],
            action: self.actions[i],
            reward: self.rewards[i],
            next_state: &self.next_states[i * self.dim..(i + 1) * self.dim],
            done: self.dones[i],
        }
    }

    /// `batch` distinct slots chosen uniformly; `None` if fewer are stored.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, batch: usize) -> Option<Vec<usize>> {
        (batch <= self.len).then(|| index::sample(rng, self.len, batch).into_vec())
    }
}
