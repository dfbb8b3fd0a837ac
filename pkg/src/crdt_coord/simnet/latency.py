"""Link latency as a lognormal fitted to a median and a 95th percentile."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

#: standard normal quantile at 0.95
Z95 = 1.6448536269514722


@dataclass(frozen=True)
class LatencyModel:
    median_us: int = 50_000
    p95_us: int = 200_000

    def __post_init__(self) -> None:
        if self.median_us < 0 or self.p95_us < self.median_us:
            raise ValueError("latency model needs 0 <= median <= p95")
        if self.median_us == 0 and self.p95_us != 0:
            raise ValueError("a zero median requires a zero p95")

    @property
    def constant(self) -> bool:
        return self.median_us == self.p95_us

    @property
    def mu(self) -> float:
        return math.log(self.median_us)

    @property
    def sigma(self) -> float:
        return (math.log(self.p95_us) - math.log(self.median_us)) / Z95

    def sample(self, rng: random.Random) -> int:
        if self.constant:
            return self.median_us
        return max(1, int(round(rng.lognormvariate(self.mu, self.sigma))))

    @classmethod
    def zero(cls) -> "LatencyModel":
        return cls(0, 0)

    @classmethod
    def fixed(cls, us: int) -> "LatencyModel":
        return cls(us, us)


def sample_latency(model: LatencyModel, rng: random.Random) -> int:
    return model.sample(rng)
