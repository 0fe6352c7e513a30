"""Expected number of temporary pairs consumed by a successful pumping chain.

The chain is a list of stages. Stage ``k`` costs ``c_k`` temporary pairs per
attempt and succeeds with probability ``p_k``; any failure discards the
permanent pair and the chain restarts from its first stage. The expected cost
of one complete chain is

    E = sum_k c_k prod_{j<k} p_j / prod_j p_j .

A pumping round of the modified scheme first needs a fused pair. Fusion is
repeated until it succeeds (probability ``q``) and each attempt uses two
pairs, so such a round costs ``2 / q`` pairs on average. A fusion failure does
not touch the permanent pair.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fusion, purify
from .states import fused_state, pair_product, rank_two_state

CHUNK = 10_000
Z95 = 1.959963984540054
POLICIES = ("init", "round1")


@dataclass(frozen=True)
class ChainSpec:
    """Per-stage success probabilities and mean costs."""

    success: tuple
    cost: tuple
    fusion_probability: float = 1.0
    labels: tuple = ()

    @property
    def stages(self) -> int:
        return len(self.success)


@dataclass(frozen=True)
class ResourceEstimate:
    expected_temporary_pairs: float
    expected_rounds_attempted: float
    trials: int
    half_width: float
    analytic_pairs: float
    analytic_rounds: float
    rounds_half_width: float = 0.0
    chain: ChainSpec | None = field(default=None, repr=False)

    @property
    def deviation_in_half_widths(self) -> float:
        if self.half_width == 0:
            return 0.0 if self.expected_temporary_pairs == self.analytic_pairs else np.inf
        return abs(self.expected_temporary_pairs - self.analytic_pairs) / self.half_width


def build_chain(
    f: float,
    rounds: int,
    scheme: str = "modified",
    policy: str = "init",
    fusion_alpha: float | None = None,
    force_p: float | None = None,
    n: int = 0,
) -> ChainSpec:
    """Stage probabilities from simulated rounds.

    With ``policy="init"`` the first of the ``rounds`` stages is the
    initialisation round from |00>, which uses two separate pairs and no
    fusion. With ``policy="round1"`` every stage is a pumping round and the
    permanent pair starts as a fresh pair of fidelity ``f``.

    ``fusion_alpha`` enables fusion failures with the no-photon probability at
    that cavity amplitude. ``force_p`` overrides every probability, fusion
    included (debug aid).
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    q = 1.0
    if scheme == "modified" and fusion_alpha is not None:
        model = fusion.LindbladModel(j2=fusion_alpha / 2.0, kappa=1.0, n_max=1)
        q = fusion.sequential_fusion(f, model, method="closed")[1]
    if force_p is not None:
        if not 0 < force_p <= 1:
            raise ValueError("forced probability must lie in (0, 1]")
        q = force_p if (scheme == "modified" and fusion_alpha is not None) else 1.0

    temp = fused_state(f) if scheme == "modified" else pair_product(f)
    success, cost, labels = [], [], []
    if policy == "init":
        res = purify.init_round(f, scheme, n)
        perm = res.post_state
        success.append(res.success_probability)
        cost.append(2.0)
        labels.append("init")
        pumping = rounds - 1
    else:
        perm = rank_two_state(f)
        pumping = rounds
    for k in range(pumping):
        res = purify.run_round(temp, perm, n)
        perm = res.post_state
        success.append(res.success_probability)
        cost.append(2.0 / q)
        labels.append(f"round{k + 1}")
    if force_p is not None:
        success = [force_p] * len(success)
    return ChainSpec(tuple(success), tuple(cost), q, tuple(labels))


def analytic_expectation(chain: ChainSpec) -> tuple[float, float]:
    """Expected pairs and expected stage attempts for one complete chain."""
    p = np.asarray(chain.success, dtype=float)
    c = np.asarray(chain.cost, dtype=float)
    reach = np.concatenate([[1.0], np.cumprod(p)[:-1]])
    total = np.prod(p)
    return float(np.sum(c * reach) / total), float(np.sum(reach) / total)


def _simulate_chunk(chain: ChainSpec, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(chain.success, dtype=float)
    fusion_stage = np.array([lbl != "init" for lbl in chain.labels]) if chain.labels else np.ones(len(p), bool)
    q = chain.fusion_probability
    pairs = np.zeros(size)
    attempts = np.zeros(size)
    stage = np.zeros(size, dtype=int)
    active = np.arange(size)
    while active.size:
        st = stage[active]
        uses_fusion = fusion_stage[st] & (q < 1.0)
        cost = np.full(active.size, 2.0)
        if uses_fusion.any():
            cost[uses_fusion] = 2.0 * rng.geometric(q, size=int(uses_fusion.sum()))
        pairs[active] += cost
        attempts[active] += 1
        ok = rng.random(active.size) < p[st]
        stage[active] = np.where(ok, st + 1, 0)
        active = active[stage[active] < len(p)]
    return pairs, attempts


def monte_carlo(chain: ChainSpec, trials: int, seed: int) -> ResourceEstimate:
    """Seeded estimate; chunks use independent child streams in a fixed order."""
    if trials < 100:
        raise ValueError("trials must be at least 100")
    sizes = [CHUNK] * (trials // CHUNK) + ([trials % CHUNK] if trials % CHUNK else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    pairs, attempts = [], []
    for size, child in zip(sizes, children):
        a, b = _simulate_chunk(chain, size, np.random.Generator(np.random.PCG64(child)))
        pairs.append(a)
        attempts.append(b)
    pairs = np.concatenate(pairs)
    attempts = np.concatenate(attempts)
    e_pairs, e_rounds = analytic_expectation(chain)
    hw = Z95 * pairs.std(ddof=1) / np.sqrt(trials)
    hw_r = Z95 * attempts.std(ddof=1) / np.sqrt(trials)
    return ResourceEstimate(float(pairs.mean()), float(attempts.mean()), trials, float(hw), e_pairs, e_rounds, float(hw_r), chain)


def render_csv(est: ResourceEstimate, header: dict) -> str:
    fmt = lambda x: format(float(x), ".12g")  # noqa: E731
    buf = io.StringIO()
    buf.write("# purecav resources " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
    buf.write("# assumption: a failed fusion attempt consumes its two temporary pairs\n")
    cols = ["trials", "mc_pairs", "half_width", "analytic_pairs", "mc_rounds", "rounds_half_width", "analytic_rounds", "fusion_probability"]
    buf.write(",".join(cols) + "," + ",".join(f"p_{lbl}" for lbl in est.chain.labels) + "\n")
    vals = [est.trials, est.expected_temporary_pairs, est.half_width, est.analytic_pairs,
            est.expected_rounds_attempted, est.rounds_half_width, est.analytic_rounds, est.chain.fusion_probability]
    buf.write(",".join(fmt(v) for v in vals) + "," + ",".join(fmt(p) for p in est.chain.success) + "\n")
    return buf.getvalue()


def write_csv(text: str, path: str | Path | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
