"""Systems under test: built-in difference equations and external processes.

Every simulation replays a whole input prefix from the initial state and is
charged once to the campaign budget, whatever the prefix length.
"""
from __future__ import annotations

import json
import queue
import shlex
import subprocess
import sys
import threading
import time
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable, Mapping, Sequence

from .budget import SimulationBudget
from .signals import (DomainViolation, Kind, LengthMismatch, Signal, SignalError,
                      VariableProfile, check_variable_set)


class UnknownSystem(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown system"


class ProtocolError(SignalError):
    pass


class ShortOutput(ProtocolError, LengthMismatch):
    pass


class SystemModel(ABC):
    """A black-box system; ``run`` maps an input signal to an equally long output signal."""

    def __init__(self, inputs: Iterable[VariableProfile], outputs: Iterable[VariableProfile]):
        self.inputs = check_variable_set(inputs)
        self.outputs = check_variable_set(outputs)
        if any(v.kind is not Kind.INPUT for v in self.inputs) or \
                any(v.kind is not Kind.OUTPUT for v in self.outputs):
            raise SignalError("system profiles carry the wrong kind")

    @property
    def input_names(self) -> list[str]:
        return [v.name for v in self.inputs]

    @property
    def output_names(self) -> list[str]:
        return [v.name for v in self.outputs]

    @abstractmethod
    def run(self, tau: Signal) -> list[dict[str, float]]:
        """Raw output samples for ``tau``; validated by :func:`simulate`."""

    def simulate(self, tau: Sequence[Mapping[str, float]] | Signal) -> Signal:
        if not isinstance(tau, Signal):
            tau = Signal(tau, self.inputs)
        return _checked(self, tau, self.run(tau))

    def close(self) -> None:
        pass


def _checked(model: SystemModel, tau, outputs) -> Signal:
    if len(outputs) != len(tau):
        raise LengthMismatch(f"system returned {len(outputs)} samples for {len(tau)} inputs")
    try:
        return Signal(outputs, model.outputs)
    except DomainViolation as exc:
        raise DomainViolation(f"system output out of domain: {exc}") from None


def simulate(model: SystemModel, tau: Sequence[Mapping[str, float]] | Signal,
             budget: SimulationBudget | None = None) -> Signal:
    """One budgeted simulation of the whole prefix ``tau``."""
    tau = Signal(tau, model.inputs)
    if budget is not None:
        budget.charge()
    return model.simulate(tau)


class Stateless(SystemModel):
    """Memoryless system ``o(t) = f(i(t))``."""

    def __init__(self, inputs, outputs, fn: Callable[[Mapping[str, float]], Mapping[str, float]],
                 name: str = "stateless"):
        super().__init__(inputs, outputs)
        self.fn = fn
        self.name = name

    def run(self, tau: Signal) -> list[dict[str, float]]:
        return [dict(self.fn(v)) for v in tau]

    def __repr__(self):
        return f"<{self.name}>"


class LeakyIntegrator(SystemModel):
    """``y(t) = alpha * y(t-1) + u(t)`` with ``y(-1) = 0``."""

    def __init__(self, alpha: float = 0.5, u_bound: float = 10.0, y_bound: float | None = None):
        alpha = float(alpha)
        if y_bound is None:
            y_bound = u_bound / (1 - abs(alpha)) if abs(alpha) < 1 else 1e6
        super().__init__([VariableProfile("u", Kind.INPUT, -u_bound, u_bound)],
                         [VariableProfile("y", Kind.OUTPUT, -y_bound, y_bound)])
        self.alpha = alpha

    def run(self, tau: Signal) -> list[dict[str, float]]:
        y, out = 0.0, []
        for v in tau:
            y = self.alpha * y + v["u"]
            out.append({"y": y})
        return out

    def __repr__(self):
        return f"<leaky_integrator alpha={self.alpha}>"


def _ab_cd():
    return ([VariableProfile("a", Kind.INPUT, -10, 10), VariableProfile("b", Kind.INPUT, -10, 10)],
            [VariableProfile("c", Kind.OUTPUT, -50, 50), VariableProfile("d", Kind.OUTPUT, -50, 50)])


def _s1() -> SystemModel:
    return Stateless(*_ab_cd(), lambda v: {"c": v["a"], "d": v["a"] + v["b"] + 2}, "s1")


def _s2() -> SystemModel:
    return Stateless(*_ab_cd(), lambda v: {"c": 2 * v["a"] + v["b"], "d": v["a"] + 10 - v["b"]},
                     "s2")


BUILTINS: dict[str, Callable[..., SystemModel]] = {
    "s1": _s1,
    "s2": _s2,
    "leaky_integrator": LeakyIntegrator,
}


def builtin(name: str, **params) -> SystemModel:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise UnknownSystem(f"unknown builtin system {name!r}; known: {sorted(BUILTINS)}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# external processes

class ExternalSystem(SystemModel):
    """A process speaking newline-delimited JSON on stdin/stdout.

    Per simulation the harness sends ``{"cmd": "reset"}``, one
    ``{"cmd": "step", "inputs": {...}}`` per sample (each answered by
    ``{"outputs": {...}}``), then ``{"cmd": "end"}``.  The process is kept
    alive between simulations and respawned after any failure.
    """

    def __init__(self, command: str | Sequence[str], inputs, outputs, timeout: float = 10.0):
        super().__init__(inputs, outputs)
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue | None = None

    def _spawn(self):
        try:
            self._proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                          text=True, bufsize=1)
        except OSError as exc:
            raise ProtocolError(f"cannot start {self.command!r}: {exc}") from None
        self._lines = queue.Queue()
        threading.Thread(target=self._pump, args=(self._proc.stdout, self._lines),
                         daemon=True).start()

    @staticmethod
    def _pump(stream, lines: queue.Queue):
        for line in stream:
            lines.put(line)
        lines.put(None)

    def _send(self, obj):
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"system process closed its input: {exc}") from None

    def _reply(self, deadline: float, step: int, total: int) -> dict[str, float]:
        try:
            line = self._lines.get(timeout=max(deadline - time.monotonic(), 0.0))
        except queue.Empty:
            raise ProtocolError(f"no reply within {self.timeout} s") from None
        if line is None:
            raise ShortOutput(f"system produced {step} of {total} output samples")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolError(f"reply is not JSON: {line.strip()!r}") from None
        if not isinstance(msg, dict) or set(msg) != {"outputs"} or not isinstance(msg["outputs"], dict):
            raise ProtocolError(f"unexpected reply {line.strip()!r}")
        out = msg["outputs"]
        if set(out) != set(self.output_names):
            raise ProtocolError(f"reply binds {sorted(out)}, expected {sorted(self.output_names)}")
        try:
            return {k: float(x) for k, x in out.items()}
        except (TypeError, ValueError):
            raise ProtocolError(f"non-numeric outputs {out!r}") from None

    def run(self, tau: Signal) -> list[dict[str, float]]:
        if self._proc is None or self._proc.poll() is not None:
            self._spawn()
        deadline = time.monotonic() + self.timeout
        try:
            self._send({"cmd": "reset"})
            out = []
            for i, v in enumerate(tau):
                self._send({"cmd": "step", "inputs": dict(v)})
                out.append(self._reply(deadline, i, len(tau)))
            self._send({"cmd": "end"})
            return out
        except ProtocolError:
            self.close()
            raise

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except OSError:
                pass
            # stdout belongs to the reader thread, which stops at EOF
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc = None

    def __del__(self):
        self.close()

    def __repr__(self):
        return f"<external {' '.join(self.command)}>"


def external(command: str | Sequence[str], inputs, outputs, timeout: float = 10.0) -> ExternalSystem:
    return ExternalSystem(command, inputs, outputs, timeout)


def python_script(module: str, *args: str) -> list[str]:
    """Command line running a module with the current interpreter."""
    return [sys.executable, "-m", module, *args]


class CountingSystem(SystemModel):
    """Wraps a model and counts calls to ``simulate``."""

    def __init__(self, inner: SystemModel):
        super().__init__(inner.inputs, inner.outputs)
        self.inner = inner
        self.calls = 0
        self._lock = threading.Lock()

    def run(self, tau):
        return self.inner.run(tau)

    def simulate(self, tau) -> Signal:
        with self._lock:
            self.calls += 1
        return self.inner.simulate(tau)

    def close(self):
        self.inner.close()
