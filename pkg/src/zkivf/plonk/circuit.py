"""Circuit builder for 3-wire PLONK gates.

Every row enforces ``qM*a*b + qL*a + qR*b + qO*c + qC + PI = 0``. Variables
are integer handles; a variable may occupy several cells, and the
permutation argument makes all cells of one variable (or of variables merged
with :meth:`Circuit.assert_equal`) carry the same value.

Witness values come in two phases. Phase-1 variables are fixed before any
gadget challenge exists. Phase-2 variables depend on challenges (created by
:meth:`Circuit.challenge`); their values are recorded as recipes and
computed once the challenges are known. Phase-1 cells are committed first,
so every challenge is sampled after the values it randomizes.
"""

from __future__ import annotations

import hashlib
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import UnsatisfiedConstraint
from ..field import P

NONE = -1
NEG1 = P - 1


@dataclass
class GateMeter:
    """Gate rows attributed to the innermost active gadget scope."""

    gates: dict = field(default_factory=dict)
    instances: dict = field(default_factory=dict)
    steps: dict = field(default_factory=dict)

    def records(self) -> list[tuple[str, int, int]]:
        return [(name, self.instances.get(name, 0), g) for name, g in self.gates.items()]

    def report(self) -> str:
        lines = ["gadget,instances,gates"]
        for name, inst, g in sorted(self.records()):
            lines.append(f"{name},{inst},{g}")
        return "\n".join(lines)

    def total(self) -> int:
        return sum(self.gates.values())


class Circuit:
    def __init__(self):
        self.values: list = []
        self.phase: list[int] = []
        self.wa: list[int] = []
        self.wb: list[int] = []
        self.wc: list[int] = []
        self.qL: list[int] = []
        self.qR: list[int] = []
        self.qO: list[int] = []
        self.qM: list[int] = []
        self.qC: list[int] = []
        self.publics: list[tuple[int, str]] = []
        self.challenges: dict[str, int] = {}
        self.recipes: list[tuple] = []
        self.merges: list[tuple[int, int]] = []
        self.meter = GateMeter()
        self._gadget = "plumbing"
        self._step = "plumbing"
        self._consts: dict[int, int] = {}
        self.challenges_ready = False
        # when False, gadgets keep going on bad witnesses so that check() fails
        self.strict = True

    # -- bookkeeping ---------------------------------------------------------

    @property
    def num_gates(self) -> int:
        return len(self.qL)

    @property
    def num_rows(self) -> int:
        """Gate rows including one row per public input."""
        return len(self.qL) + len(self.publics)

    @contextmanager
    def gadget(self, name: str):
        prev = self._gadget
        self._gadget = name
        self.meter.instances[name] = self.meter.instances.get(name, 0) + 1
        self.meter.gates.setdefault(name, 0)
        try:
            yield
        finally:
            self._gadget = prev

    @contextmanager
    def step(self, name: str):
        prev_step, prev_gadget = self._step, self._gadget
        self._step = name
        self._gadget = name
        self.meter.steps.setdefault(name, 0)
        try:
            yield
        finally:
            self._step, self._gadget = prev_step, prev_gadget

    def _new_var(self, value, phase: int) -> int:
        self.values.append(None if value is None else value % P)
        self.phase.append(phase)
        return len(self.values) - 1

    def _row(self, a, b, c, qL, qR, qO, qM, qC):
        self.wa.append(a)
        self.wb.append(b)
        self.wc.append(c)
        self.qL.append(qL % P)
        self.qR.append(qR % P)
        self.qO.append(qO % P)
        self.qM.append(qM % P)
        self.qC.append(qC % P)
        g = self.meter.gates
        g[self._gadget] = g.get(self._gadget, 0) + 1
        s = self.meter.steps
        s[self._step] = s.get(self._step, 0) + 1

    # -- variables -----------------------------------------------------------

    def witness(self, value: int) -> int:
        """Fresh phase-1 variable, unconstrained until used."""
        return self._new_var(int(value), 1)

    def value(self, v: int) -> int:
        val = self.values[v]
        if val is None:
            raise RuntimeError("phase-2 value requested before challenges are set")
        return val

    def public_input(self, value: int, label: str = "input") -> int:
        v = self._new_var(int(value), 1)
        self.publics.append((v, label))
        return v

    def challenge(self, name: str) -> int:
        if name in self.challenges:
            return self.challenges[name]
        v = self._new_var(None, 2)
        self.publics.append((v, "challenge:" + name))
        self.challenges[name] = v
        return v

    def constant(self, value: int) -> int:
        value %= P
        v = self._consts.get(value)
        if v is None:
            v = self._new_var(value, 1)
            self._row(v, NONE, NONE, 1, 0, 0, 0, -value)
            self._consts[value] = v
        return v

    # -- gates ---------------------------------------------------------------

    def arith(self, a: int, b: int = NONE, qM: int = 0, qL: int = 0, qR: int = 0, qC: int = 0) -> int:
        """New variable ``out = qM*a*b + qL*a + qR*b + qC`` (one gate)."""
        ph = max(self.phase[a] if a >= 0 else 1, self.phase[b] if b >= 0 else 1)
        qM, qL, qR, qC = qM % P, qL % P, qR % P, qC % P
        if ph == 1 or self.challenges_ready:
            va = self.values[a] if a >= 0 else 0
            vb = self.values[b] if b >= 0 else 0
            out = self._new_var((qM * va * vb + qL * va + qR * vb + qC) % P, ph)
        else:
            out = self._new_var(None, ph)
            self.recipes.append((out, a, b, qM, qL, qR, qC))
        self._row(a, b, out, qL, qR, NEG1, qM, qC)
        return out

    def add(self, a: int, b: int) -> int:
        return self.arith(a, b, qL=1, qR=1)

    def sub(self, a: int, b: int) -> int:
        return self.arith(a, b, qL=1, qR=-1)

    def mul(self, a: int, b: int) -> int:
        return self.arith(a, b, qM=1)

    def lin(self, a: int, ca: int, b: int = NONE, cb: int = 0, k: int = 0) -> int:
        return self.arith(a, b, qL=ca, qR=cb, qC=k)

    def gate(self, a=NONE, b=NONE, c=NONE, qL=0, qR=0, qO=0, qM=0, qC=0) -> None:
        """Raw constraint row with no output variable."""
        self._row(a, b, c, qL, qR, qO, qM, qC)

    def assert_bool(self, x: int) -> None:
        self._row(x, x, NONE, NEG1, 0, 0, 1, 0)

    def assert_equal(self, x: int, y: int) -> None:
        """Copy constraint; costs no gate."""
        if x != y:
            self.merges.append((x, y))

    def assert_const(self, x: int, value: int) -> None:
        self._row(x, NONE, NONE, 1, 0, 0, 0, -value)

    # -- witness completion ----------------------------------------------------

    def set_challenges(self, values: dict[str, int]) -> None:
        for name, v in self.challenges.items():
            self.values[v] = values[name] % P
        for out, a, b, qM, qL, qR, qC in self.recipes:
            va = self.values[a] if a >= 0 else 0
            vb = self.values[b] if b >= 0 else 0
            self.values[out] = (qM * va * vb + qL * va + qR * vb + qC) % P
        self.challenges_ready = True

    def public_values(self) -> list[int]:
        return [self.values[v] for v, _ in self.publics]

    def input_values(self) -> list[int]:
        return [self.values[v] for v, label in self.publics if not label.startswith("challenge:")]

    # -- layout ----------------------------------------------------------------

    def layout(self):
        """Row-major arrays with the public rows first.

        Returns (wires (3, rows) int64, selectors (5, rows) uint64) where the
        selector order is qL, qR, qO, qM, qC.
        """
        n_pub = len(self.publics)
        rows = n_pub + len(self.qL)
        wires = np.full((3, rows), NONE, dtype=np.int64)
        sel = np.zeros((5, rows), dtype=np.uint64)
        wires[0, :n_pub] = [v for v, _ in self.publics]
        sel[0, :n_pub] = 1
        wires[0, n_pub:] = self.wa
        wires[1, n_pub:] = self.wb
        wires[2, n_pub:] = self.wc
        for k, col in enumerate((self.qL, self.qR, self.qO, self.qM, self.qC)):
            sel[k, n_pub:] = np.array(col, dtype=np.uint64)
        return wires, sel

    def var_roots(self) -> np.ndarray:
        """Union-find representative of each variable."""
        parent = list(range(len(self.values)))

        def find(x):
            root = x
            while parent[root] != root:
                root = parent[root]
            while parent[x] != root:
                parent[x], x = root, parent[x]
            return root

        for x, y in self.merges:
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)
        return np.array([find(x) for x in range(len(parent))], dtype=np.int64)

    def structure_digest(self) -> bytes:
        wires, sel = self.layout()
        roots = self.var_roots()
        cells = np.where(wires >= 0, roots[np.maximum(wires, 0)], -1)
        phases = np.array(self.phase, dtype=np.int64)
        cell_phase = np.where(wires >= 0, phases[np.maximum(wires, 0)], 0)
        h = hashlib.blake2b(digest_size=32)
        for arr in (sel, _canonical_cells(cells), cell_phase):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(repr([label for _, label in self.publics]).encode())
        return h.digest()

    # -- direct satisfiability check -------------------------------------------

    def check(self) -> None:
        """Raise UnsatisfiedConstraint unless every gate and copy holds."""
        if self.recipes and not self.challenges_ready:
            raise RuntimeError("set challenges before checking")
        vals = self.values
        n_pub = len(self.publics)
        for r in range(len(self.qL)):
            a, b, c = self.wa[r], self.wb[r], self.wc[r]
            va = vals[a] if a >= 0 else 0
            vb = vals[b] if b >= 0 else 0
            vc = vals[c] if c >= 0 else 0
            acc = (self.qM[r] * va * vb + self.qL[r] * va + self.qR[r] * vb
                   + self.qO[r] * vc + self.qC[r]) % P
            if acc:
                raise UnsatisfiedConstraint(f"gate row {r + n_pub} fails")
        for x, y in self.merges:
            if vals[x] != vals[y]:
                raise UnsatisfiedConstraint(f"copy constraint between variables {x} and {y} fails")

    def is_satisfied(self) -> bool:
        try:
            self.check()
        except UnsatisfiedConstraint:
            return False
        return True


def _canonical_cells(cells: np.ndarray) -> np.ndarray:
    """Relabel variable classes by first occurrence so digests ignore
    the numbering of variables."""
    flat = cells.reshape(-1)
    out = np.full_like(flat, -1)
    mask = flat >= 0
    if mask.any():
        uniq, first, inverse = np.unique(flat[mask], return_index=True, return_inverse=True)
        rank = np.empty(len(uniq), dtype=np.int64)
        rank[np.argsort(first)] = np.arange(len(uniq))
        out[mask] = rank[inverse]
    return out.reshape(cells.shape)
