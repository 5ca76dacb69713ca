/// One sampled episode: states, actions and rewards indexed `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S, A> {
    pub states: Vec<S>,
    pub actions: Vec<A>,
    pub rewards: Vec<f64>,
}

impl<S, A> Trajectory<S, A> {
    pub fn with_capacity(steps: usize) -> Self {
        Self {
            states: Vec::with_capacity(steps),
            actions: Vec::with_capacity(steps),
            rewards: Vec::with_capacity(steps),
        }
    }

    pub fn push(&mut self, s: S, a: A, r: f64) {
        self.states.push(s);
        self.actions.push(a);
        self.rewards.push(r);
    }

    pub fn clear(&mut self) {
        self.states.clear();
        self.actions.clear();
        self.rewards.clear();
    }

    /// Number of recorded steps, `N + 1`.
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Final step index `N`.
    ///
    /// Panics on an empty trajectory.
    pub fn horizon(&self) -> usize {
        assert!(!self.is_empty(), "empty trajectory has no horizon");
        self.len() - 1
    }

    pub fn step(&self, t: usize) -> StepSample<'_, S, A> {
        StepSample {
            t,
            s: &self.states[t],
            a: &self.actions[t],
            r: self.rewards[t],
        }
    }
}

/// A borrowed view of a single `(t, s_t, a_t, r_t)` record.
#[derive(Debug, Clone, Copy)]
pub struct StepSample<'a, S, A> {
    pub t: usize,
    pub s: &'a S,
    pub a: &'a A,
    pub r: f64,
}
