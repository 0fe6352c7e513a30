"""Fidelity sweeps over the temporary-pair fidelity, written as CSV."""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import purify
from .states import fused_state, pair_product, rank_two_state


@dataclass(frozen=True)
class SweepConfig:
    scheme: str = "modified"
    f_min: float = 0.55
    f_max: float = 1.0
    f_step: float = 0.05
    rounds: int = 3
    n: int = 0
    init: bool = False
    out: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in purify.SCHEMES:
            raise ValueError(f"scheme must be one of {purify.SCHEMES}")
        if not (0.5 < self.f_min <= self.f_max <= 1.0):
            raise ValueError("need 0.5 < f_min <= f_max <= 1")
        if not self.f_step > 0:
            raise ValueError("f_step must be positive")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.n < 0:
            raise ValueError("gate index n must be non-negative")

    def grid(self) -> np.ndarray:
        count = int(np.floor((self.f_max - self.f_min) / self.f_step + 1e-9)) + 1
        return np.round(self.f_min + self.f_step * np.arange(count), 12)


def fmt(x: float) -> str:
    return format(float(x), ".12g")


def sweep_row(cfg: SweepConfig, f: float) -> dict:
    """Simulate one chain of rounds at temporary-pair fidelity ``f``."""
    temp = fused_state(f) if cfg.scheme == "modified" else pair_product(f)
    row = {"f": f}
    if cfg.init:
        first = purify.init_round(f, cfg.scheme, cfg.n)
        perm = first.post_state
        row["F0"] = first.F_out
        row["P_succ_0"] = first.success_probability
    else:
        perm = rank_two_state(f)
    last = None
    for k in range(1, cfg.rounds + 1):
        last = purify.run_round(temp, perm, cfg.n)
        perm = last.post_state
        row[f"F{k}"] = last.F_out
        row[f"P_succ_{k}"] = last.success_probability
    row[f"fhat_{cfg.rounds}"] = last.F_out - f
    if cfg.init:
        row[f"G_{cfg.rounds}"] = last.G_out
    return row


def columns(cfg: SweepConfig) -> list[str]:
    n = cfg.rounds
    cols = ["f"] + (["F0"] if cfg.init else []) + [f"F{k}" for k in range(1, n + 1)] + [f"fhat_{n}"]
    if cfg.init:
        cols.append(f"G_{n}")
    cols += (["P_succ_0"] if cfg.init else []) + [f"P_succ_{k}" for k in range(1, n + 1)]
    return cols


def run_sweep(cfg: SweepConfig) -> list[dict]:
    return [sweep_row(cfg, f) for f in cfg.grid()]


def render_csv(cfg: SweepConfig, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(
        f"# purecav sweep scheme={cfg.scheme} rounds={cfg.rounds} n={cfg.n} "
        f"init={str(cfg.init).lower()} seed={cfg.seed}\n"
    )
    cols = columns(cfg)
    buf.write(",".join(cols) + "\n")
    for r in rows:
        buf.write(",".join(fmt(r[c]) for c in cols) + "\n")
    return buf.getvalue()


def write_sweep(cfg: SweepConfig, path: str | Path | None = None) -> str:
    text = render_csv(cfg, run_sweep(cfg))
    path = path or cfg.out
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    return text
