"""The multi-hop control network: plant, two scheduled relay graphs, slot
duration, and the frame-level state space they induce."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import ModelError
from .flow import gamma_coefficients
from .graph import ScheduledGraph, is_jointly_connected
from .lti import (
    ContinuousLTI,
    DiscreteLTI,
    FIRTransfer,
    assemble_mcn,
    discretize_plant,
    realize_controllability,
    realize_observability,
)

# graph tags used in failure configurations
CTRL = "R"
OBS = "O"


@dataclass(frozen=True, eq=False)
class MCN:
    plant: ContinuousLTI
    g_R: ScheduledGraph
    g_O: ScheduledGraph
    delta: float

    def __post_init__(self):
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ModelError(f"slot duration must be positive, got {self.delta}")
        self.g_R.check()
        self.g_O.check()
        if self.g_R.Pi != self.g_O.Pi:
            raise ModelError(
                f"both graphs must share the frame length (Pi={self.g_R.Pi} vs {self.g_O.Pi})")
        if len(self.g_R.sinks) != 1:
            raise ModelError("controllability graph must have exactly one actuator sink")
        for tag, g in ((CTRL, self.g_R), (OBS, self.g_O)):
            if not is_jointly_connected(g):
                raise ModelError(f"graph {tag} is not jointly connected by its schedule")

    @property
    def Pi(self) -> int:
        return self.g_R.Pi

    @property
    def T(self) -> float:
        return self.Pi * self.delta

    @property
    def n_S(self) -> int:
        return len(self.g_O.sinks)

    @cached_property
    def plant_d(self) -> DiscreteLTI:
        return discretize_plant(self.plant, self.T)

    @cached_property
    def gamma_R(self) -> FIRTransfer:
        return FIRTransfer(tuple(float(v) for v in self._trim(
            gamma_coefficients(self.g_R, self.g_R.sinks[0]))))

    @cached_property
    def gamma_O(self) -> tuple[FIRTransfer, ...]:
        return tuple(FIRTransfer(tuple(float(v) for v in self._trim(
            gamma_coefficients(self.g_O, s)))) for s in self.g_O.sinks)

    @staticmethod
    def _trim(g: list) -> list:
        g = list(g)
        while g and g[-1] == 0:
            g.pop()
        return g

    @property
    def D_R(self) -> int:
        return self.gamma_R.D

    @property
    def D_O(self) -> int:
        return max(g.D for g in self.gamma_O)

    @property
    def dims(self) -> tuple[int, int, int]:
        """``(n_O, n_P, n_R)``."""
        return (self.D_O + self.n_S - 1, self.plant.n, self.D_R)

    @property
    def n(self) -> int:
        return sum(self.dims)

    @property
    def ctrl_row(self) -> int:
        """0-based index of the first controllability-network state."""
        n_O, n_P, _ = self.dims
        return n_O + n_P

    def realize(self, gamma_R=None, gamma_O=None) -> DiscreteLTI:
        """Assemble the interconnection for given (padded) coefficients.

        Defaults to the nominal coefficients; network orders stay at the
        nominal ``D_R`` / ``D_O`` so perturbed models share one state space.
        """
        gR = self.gamma_R.padded(self.D_R) if gamma_R is None else np.asarray(gamma_R, float)
        if gamma_O is None:
            gO = np.vstack([g.padded(self.D_O) for g in self.gamma_O])
        else:
            gO = np.atleast_2d(np.asarray(gamma_O, float))
        obs = realize_observability(list(gO), self.D_O, self.n_S)
        ctrl = realize_controllability(gR, self.D_R)
        return assemble_mcn(obs, self.plant_d, ctrl)

    @cached_property
    def system(self) -> DiscreteLTI:
        return self.realize()

    def graph(self, tag: str) -> ScheduledGraph:
        if tag == CTRL:
            return self.g_R
        if tag == OBS:
            return self.g_O
        raise ModelError(f"unknown graph tag {tag!r} (expected 'R' or 'O')")

    def edge_universe(self, tags: Iterable[str] = (CTRL, OBS)) -> list[tuple[str, str, str]]:
        """Scheduled edges tagged with their graph, in document order."""
        out = []
        for tag in tags:
            out.extend((tag, e.src, e.dst) for e in self.graph(tag).scheduled_edges)
        return out

    def case(self) -> str:
        r = "GRsingle" if self.g_R.is_single_hop() else "GRmulti"
        o = "GOsingle" if self.g_O.is_single_hop() else "GOmulti"
        if r == "GRsingle" and o == "GOsingle":
            return "BothSingle"
        if r == "GRmulti" and o == "GOmulti":
            return "BothMulti"
        return r + o
