"""Per-AN tabular Q-learners for energy-aware downlink decisions.

Each AN learns which (AP rank, power level) to use for its downlinks; the
reward trades delivery against transmit power, which is what makes the
learned policy back off to the cheapest power that still delivers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from vecsim.rng import RngStream

Action = tuple[int, int]   # (ap_rank, power_index)
State = tuple[int, ...]


@dataclass
class QLearner:
    """Tabular Q with epsilon-greedy action selection.

    Q values default to 0 for unseen pairs. eta in (0, 1], gamma in [0, 1).
    """

    owner_an: int
    actions: list[Action]
    eta: float = 0.5
    gamma: float = 0.0
    epsilon: float = 0.1
    q: dict[tuple[State, Action], float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not self.actions:
            raise ValueError("action set must be nonempty")

    def value(self, state: State, action: Action) -> float:
        return self.q.get((state, action), 0.0)

    def best_action(self, state: State) -> Action:
        best = max(self.value(state, a) for a in self.actions)
        # deterministic tiebreak: first action in declaration order
        for a in self.actions:
            if self.value(state, a) == best:
                return a
        raise AssertionError("unreachable")

    def select(self, state: State, rng: RngStream) -> Action:
        if rng.random() < self.epsilon:
            return self.actions[rng.integers(len(self.actions))]
        return self.best_action(state)

    def update(self, state: State, action: Action, reward: float, next_state: State) -> None:
        best_next = max(self.value(next_state, a) for a in self.actions)
        key = (state, action)
        old = self.q.get(key, 0.0)
        self.q[key] = old + self.eta * (reward + self.gamma * best_next - old)


def delivery_reward(delivered: bool, power_w: float, w_delivery: float, w_power: float) -> float:
    return w_delivery * (1.0 if delivered else 0.0) - w_power * power_w


def eco_route_step(
    learner: QLearner,
    state: State,
    rng: RngStream,
) -> Action:
    """Pick the downlink action for the current state (epsilon-greedy).

    The caller executes the action, observes delivery and the next state, and
    feeds both back through `learner.update`.
    """
    return learner.select(state, rng)
