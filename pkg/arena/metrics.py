"""Running intersection metrics."""

from dataclasses import dataclass, field

import numpy as np

from posg.tables import readonly

T_MIN = 3
ACCIDENT_COST = 100.0
DELAY_COST = 1.0


@dataclass(frozen=True, eq=False)
class IntersectionMetrics:
    """
    Series over episodes t = 1..n. ``travel[t-1]`` is T_t, the mean action
    count over the intersections cleared so far (T_MIN before the first one);
    ``accidents[t-1]`` is I_t.
    """

    travel: np.ndarray
    accidents: np.ndarray
    timeouts: int = 0
    accident_cost: float = ACCIDENT_COST
    delay_cost: float = DELAY_COST
    t_min: int = T_MIN
    episode_steps: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "travel", readonly(self.travel))
        object.__setattr__(self, "accidents", readonly(self.accidents, dtype=int))
        object.__setattr__(self, "episode_steps", readonly(self.episode_steps))

    @property
    def n_episodes(self) -> int:
        return len(self.travel)

    @property
    def episodes(self) -> np.ndarray:
        return np.arange(1, self.n_episodes + 1)

    @property
    def delay_ratio(self) -> np.ndarray:
        """R^d_t."""
        return self.travel / self.t_min - 1.0

    @property
    def collision_rate(self) -> np.ndarray:
        """R^c_t."""
        return self.accidents / self.episodes

    @property
    def cost(self) -> np.ndarray:
        """M_t."""
        return self.accident_cost * self.collision_rate + (
            self.delay_cost * self.delay_ratio
        )

    @property
    def final_cost(self) -> float:
        return float(self.cost[-1])

    def rows(self):
        for t, travel, accidents, r_d, r_c, m in zip(
            self.episodes,
            self.travel,
            self.accidents,
            self.delay_ratio,
            self.collision_rate,
            self.cost,
        ):
            yield (
                int(t),
                float(travel),
                int(accidents),
                float(r_d),
                float(r_c),
                float(m),
            )


def running_metrics(
    outcomes,
    accident_cost: float = ACCIDENT_COST,
    delay_cost: float = DELAY_COST,
    t_min: int = T_MIN,
) -> IntersectionMetrics:
    """
    Folds per-episode ``(status, steps)`` outcomes, status one of "cleared",
    "accident" or "timeout", into the running series.
    """
    travel, accidents, steps = [], [], []
    cleared = cleared_steps = crashed = timeouts = 0
    for status, n_steps in outcomes:
        if status == "cleared":
            cleared += 1
            cleared_steps += n_steps
        elif status == "accident":
            crashed += 1
        else:
            timeouts += 1
        travel.append(cleared_steps / cleared if cleared else float(t_min))
        accidents.append(crashed)
        steps.append(n_steps)
    return IntersectionMetrics(
        travel=np.array(travel, dtype=float),
        accidents=np.array(accidents, dtype=int),
        timeouts=timeouts,
        accident_cost=accident_cost,
        delay_cost=delay_cost,
        t_min=t_min,
        episode_steps=np.array(steps, dtype=float),
    )
