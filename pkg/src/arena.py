from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

import config as config


class ModelParams(BaseModel):
    """
    Configuration of a single arena simulation.

    alpha: trendiness boost (>= 0)
    n: number of simultaneous attention matters (>= 2)
    c: noise-size parameter, larger c means smaller noise (> 0)
    iterations: total timesteps, the two initialization steps included
    seed: seed of the run's private random stream
    burn_in: iterations discarded before metric computation
    """
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    alpha: float = Field(ge=0)
    n: int = Field(ge=2)
    c: float = Field(gt=0)
    iterations: int = Field(ge=2)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    burn_in: int = Field(default=config.DEFAULT_BURN_IN, ge=0)

    @model_validator(mode="after")
    def _burn_in_below_iterations(self) -> ModelParams:
        if self.burn_in >= self.iterations:
            raise ValueError(
                f"burn_in ({self.burn_in}) must be smaller than iterations ({self.iterations})"
            )
        return self


@dataclass
class ArenaState:
    t: int
    current: np.ndarray
    previous: np.ndarray
    identities: np.ndarray
    next_id: int

    def copy(self) -> ArenaState:
        return ArenaState(
            t=self.t,
            current=self.current.copy(),
            previous=self.previous.copy(),
            identities=self.identities.copy(),
            next_id=self.next_id,
        )


@dataclass(frozen=True)
class ReplacementEvent:
    t: int
    slot: int
    old_id: int
    new_id: int


@dataclass
class RunTrace:
    """
    Full record of one run.

    visibility[k] holds the shares of iteration t = k + 1, identity[k] the item ids
    occupying each slot at that iteration.
    """
    params: ModelParams
    visibility: np.ndarray
    identity: np.ndarray
    events: List[ReplacementEvent] = field(default_factory=list)
    degenerate_resets: List[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return int(self.visibility.shape[0])

    @property
    def n(self) -> int:
        return int(self.visibility.shape[1])

    def to_frame(self) -> pd.DataFrame:
        """Canonical long format: one row per (t, slot), ordered by t then slot."""
        iterations, n = self.visibility.shape
        return pd.DataFrame({
            "t": np.repeat(np.arange(1, iterations + 1), n),
            "slot": np.tile(np.arange(n), iterations),
            "item_id": self.identity.ravel(),
            "visibility": self.visibility.ravel(),
        })

    def events_to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(e.t, e.slot, e.old_id, e.new_id) for e in self.events],
            columns=["t", "slot", "old_id", "new_id"],
        ).astype("int64")


def sigma_for(n: int, c: float) -> float:
    # variance 1 / (c * n^2)
    return 1.0 / (n * math.sqrt(c))


def noise_sigma(params: ModelParams) -> float:
    """Standard deviation of the per-item, per-step noise."""
    return sigma_for(params.n, params.c)


def draw_noise(params: ModelParams, rng: np.random.Generator, size=None) -> np.ndarray:
    if size is None:
        size = params.n
    return rng.normal(0.0, noise_sigma(params), size=size)


def _clamp_and_normalize(potential: np.ndarray) -> Tuple[np.ndarray, bool]:
    clamped = np.where(potential > 0.0, potential, 0.0)
    total = clamped.sum()
    if total <= 0.0:
        return np.full(potential.shape[0], 1.0 / potential.shape[0]), True
    return clamped / total, False


def init_arena(
        params: ModelParams,
        rng: np.random.Generator,
        noise: Optional[np.ndarray] = None,
) -> Tuple[ArenaState, np.ndarray, List[int]]:
    """
    Run the two initialization steps.

    Returns the state at t = 2, the first two trace rows and the iterations at which
    the uniform fallback fired (either empty or [2]).
    """
    draws = rng.random(params.n)
    first = draws / draws.sum()

    if noise is None:
        noise = draw_noise(params, rng)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (params.n,):
        raise ValueError(f"noise must have length {params.n}, got shape {noise.shape}")

    second, degenerate = _clamp_and_normalize(first + noise)
    resets = []
    if degenerate:
        logging.warning("Initialization collapsed to zero visibility; reset to uniform shares at t=2")
        resets.append(2)

    state = ArenaState(
        t=2,
        current=second,
        previous=first,
        identities=np.arange(params.n, dtype=np.int64),
        next_id=params.n,
    )
    return state, np.vstack([first, second]), resets


def _advance(
        state: ArenaState,
        alpha: float,
        noise: np.ndarray,
) -> Tuple[ArenaState, List[ReplacementEvent], bool]:
    current = state.current
    potential = current + alpha * (current - state.previous) + noise
    shares, degenerate = _clamp_and_normalize(potential)

    t_next = state.t + 1
    previous = current.copy()
    identities = state.identities
    next_id = state.next_id
    events: List[ReplacementEvent] = []

    if degenerate:
        logging.warning("All potential visibilities vanished at t=%d; reset to uniform shares", t_next)
    else:
        dying = np.flatnonzero((potential <= 0.0) & (current > 0.0))
        if dying.size:
            identities = identities.copy()
            for slot in dying:
                slot = int(slot)
                events.append(ReplacementEvent(
                    t=t_next, slot=slot, old_id=int(identities[slot]), new_id=next_id
                ))
                identities[slot] = next_id
                next_id += 1
            # newborns enter with no momentum
            previous[dying] = 0.0

    return ArenaState(t_next, shares, previous, identities, next_id), events, degenerate


def step(
        state: ArenaState,
        params: ModelParams,
        noise: np.ndarray,
) -> Tuple[ArenaState, List[ReplacementEvent]]:
    """
    Advance the arena by one iteration with the given noise realization.

    Potential visibility is current + alpha * (current - previous) + noise, clamped at
    zero and renormalized to the simplex. A slot with positive visibility whose
    potential falls to or below zero is handed to a fresh item.
    """
    noise = np.asarray(noise, dtype=float)
    if noise.shape != state.current.shape:
        raise ValueError(f"noise must have length {state.current.shape[0]}, got shape {noise.shape}")
    new_state, events, _ = _advance(state, params.alpha, noise)
    return new_state, events


def run(params: ModelParams) -> RunTrace:
    rng = np.random.default_rng(params.seed)
    logging.debug("Starting run alpha=%s n=%d c=%s iterations=%d seed=%d",
                  params.alpha, params.n, params.c, params.iterations, params.seed)

    state, first_rows, resets = init_arena(params, rng)

    visibility = np.empty((params.iterations, params.n), dtype=float)
    identity = np.empty((params.iterations, params.n), dtype=np.int64)
    visibility[:2] = first_rows
    identity[:2] = state.identities

    # row-major draw: one noise vector per iteration, in slot order
    noises = draw_noise(params, rng, size=(params.iterations - 2, params.n))
    events: List[ReplacementEvent] = []
    for k in range(2, params.iterations):
        state, step_events, degenerate = _advance(state, params.alpha, noises[k - 2])
        visibility[k] = state.current
        identity[k] = state.identities
        if step_events:
            events.extend(step_events)
        if degenerate:
            resets.append(state.t)

    logging.debug("Finished run seed=%d with %d replacements", params.seed, len(events))
    return RunTrace(
        params=params,
        visibility=visibility,
        identity=identity,
        events=events,
        degenerate_resets=resets,
    )
