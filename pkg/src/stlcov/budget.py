"""Simulation budget shared by every component that runs the system under test."""
from __future__ import annotations

import threading


class SimulationBudget:
    """Counts simulations; ``remaining`` may reach -1 as the terminal state.

    ``SimulationBudget(None)`` never runs out but still counts.
    """

    def __init__(self, limit: int | None = None):
        if limit is not None and limit < 0:
            raise ValueError("budget must be nonnegative")
        self.initial = limit
        self.remaining = limit
        self.used = 0
        self._lock = threading.Lock()

    def charge(self) -> None:
        with self._lock:
            self.used += 1
            if self.remaining is not None:
                self.remaining -= 1

    @property
    def exhausted(self) -> bool:
        return self.remaining is not None and self.remaining < 0

    def __repr__(self):
        return f"SimulationBudget(initial={self.initial}, remaining={self.remaining}, used={self.used})"
