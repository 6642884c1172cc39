"""Clifford groups with minimum-primitive-count decompositions.

The group is generated by closure from ideal primitive unitaries.  A 0-1
breadth-first search assigns each element a shortest primitive word in which
virtual phase gates (``S1``, ``S2``) cost nothing.  The identity element is
realised as one idle primitive and therefore counts as one gate.

Single-qubit generators: ``X, Y, ±X/2, ±Y/2`` (no free phase gate).  Two-qubit
generators: ``Xm/2, ZXm/2, CNOTm, ZCNOTm`` for ``m = 1, 2`` plus free ``S1,
S2``.  Decompositions are stored in time order (first gate applied first).
"""
from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gates import ideal_unitary, is_virtual
from .linalg import canonical_key, dagger, phase_align

__all__ = [
    "CliffordTable", "build_clifford_table", "primitive_set", "recovery_gate",
    "load_table", "save_table", "TABLE_VERSION", "one_qubit_ideal",
]

TABLE_VERSION = 1

_ONE_QUBIT_GENERATORS = ("X1", "Y1", "X1/2", "-X1/2", "Y1/2", "-Y1/2")
_TWO_QUBIT_GENERATORS = ("X1/2", "X2/2", "ZX1/2", "ZX2/2", "CNOT1", "ZCNOT1", "CNOT2", "ZCNOT2")
_TWO_QUBIT_FREE = ("S1", "S2")


def one_qubit_ideal(label: str) -> np.ndarray:
    """2x2 ideal unitary of a qubit-1 label (read off the 4x4 embedding)."""
    return ideal_unitary(label)[::2, ::2]


def primitive_set(num_qubits: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(costed generators, free generators) for the requested group."""
    if num_qubits == 1:
        return _ONE_QUBIT_GENERATORS, ()
    if num_qubits == 2:
        return _TWO_QUBIT_GENERATORS, _TWO_QUBIT_FREE
    raise ValueError("num_qubits must be 1 or 2")


def _set_hash(num_qubits: int) -> str:
    gens, free = primitive_set(num_qubits)
    payload = json.dumps({"v": TABLE_VERSION, "n": num_qubits, "g": gens, "f": free})
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class CliffordTable:
    """Canonical group elements and their primitive decompositions.

    Attributes
    ----------
    num_qubits : int
    group : ndarray, shape (n, d, d)
        Phase-normalised unitaries.
    decomp : list of list of str
        Time-ordered labels (virtual gates included) realising each element.
    counts : ndarray of int
        Number of physical primitives per element (identity counts 1).
    """

    num_qubits: int
    group: np.ndarray
    decomp: list
    counts: np.ndarray
    set_hash: str = ""
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {canonical_key(u): i for i, u in enumerate(self.group)}

    def __len__(self) -> int:
        return len(self.group)

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    @property
    def avg_primitives(self) -> float:
        return float(np.mean(self.counts))

    def index_of(self, u: np.ndarray) -> int:
        """Index of the element equal to ``u`` up to global phase (KeyError if absent)."""
        return self._index[canonical_key(u)]

    def identity_index(self) -> int:
        return self.index_of(np.eye(self.dim))

    def labels_unitary(self, labels) -> np.ndarray:
        """Multiply out a label word with ideal primitives (time order)."""
        u = np.eye(self.dim, dtype=complex)
        for lab in labels:
            g = ideal_unitary(lab)
            u = (g[::2, ::2] if self.num_qubits == 1 else g) @ u
        return u


def build_clifford_table(num_qubits: int, expected: int | None = None) -> CliffordTable:
    """Generate the Clifford group by closure and decompose every element.

    Raises
    ------
    RuntimeError
        If closure terminates at a size other than the expected group order
        (24 or 11520); the message reports the size found.
    """
    gens, free = primitive_set(num_qubits)
    sl = (slice(None, None, 2), slice(None, None, 2)) if num_qubits == 1 else (slice(None),) * 2
    mats = {lab: ideal_unitary(lab)[sl] for lab in gens + free}
    dim = 2 ** num_qubits
    ident = np.eye(dim, dtype=complex)
    start = canonical_key(ident)
    dist = {start: 0}
    parent: dict = {start: None}
    elem = {start: ident}
    dq = deque([start])
    done = set()
    while dq:
        key = dq.popleft()
        if key in done:
            continue
        done.add(key)
        u = elem[key]
        d = dist[key]
        for lab in free + gens:
            cost = 0 if lab in free else 1
            v = phase_align(mats[lab] @ u)
            kk = canonical_key(v)
            if kk not in dist or dist[kk] > d + cost:
                dist[kk] = d + cost
                parent[kk] = (key, lab)
                elem[kk] = v
                if cost == 0:
                    dq.appendleft(kk)
                else:
                    dq.append(kk)
    expected = expected or {1: 24, 2: 11520}[num_qubits]
    if len(dist) != expected:
        raise RuntimeError(f"Clifford closure found {len(dist)} elements, expected {expected}")

    keys = sorted(dist, key=lambda k: (dist[k], k))
    group = np.array([elem[k] for k in keys])
    decomp, counts = [], []
    for k in keys:
        word = []
        node = k
        while parent[node] is not None:
            node, lab = parent[node]
            word.append(lab)
        word = _merge_virtual(word[::-1], free)
        n_phys = sum(1 for w in word if not is_virtual(w))
        if n_phys == 0:
            # Identity or pure phase gates: one idle slot keeps the clock.
            word = word + ["I"]
            n_phys = 1
        decomp.append(word)
        counts.append(n_phys)
    return CliffordTable(num_qubits, group, decomp, np.array(counts), _set_hash(num_qubits))


def _merge_virtual(word: list, free: tuple) -> list:
    """Collapse runs of free phase gates into at most one S/Z/Sdg per qubit."""
    names = {1: "S", 2: "Z", 3: "Sdg"}
    out, acc = [], {1: 0, 2: 0}

    def flush():
        for m in (1, 2):
            q = acc[m] % 4
            if q:
                out.append(f"{names[q]}{m}")
            acc[m] = 0

    for lab in word:
        if lab in free:
            acc[int(lab[-1])] += 1
        else:
            flush()
            out.append(lab)
    flush()
    return out


def save_table(table: CliffordTable, path) -> None:
    """Write a table to ``.npz`` with a version/primitive-set header."""
    np.savez_compressed(
        path, version=TABLE_VERSION, set_hash=table.set_hash, num_qubits=table.num_qubits,
        group=table.group, counts=table.counts,
        decomp=np.array([json.dumps(w) for w in table.decomp]))


def load_table(path, num_qubits: int | None = None) -> CliffordTable | None:
    """Load a cached table; returns None if missing or built for another primitive set."""
    path = Path(path)
    if not path.exists():
        return None
    with np.load(path, allow_pickle=False) as z:
        n = int(z["num_qubits"])
        if int(z["version"]) != TABLE_VERSION or str(z["set_hash"]) != _set_hash(n):
            return None
        if num_qubits is not None and n != num_qubits:
            return None
        return CliffordTable(n, z["group"], [json.loads(s) for s in z["decomp"]],
                             z["counts"], str(z["set_hash"]))


def cached_table(num_qubits: int, cache_dir=None) -> CliffordTable:
    """Build a table once and reuse it from ``cache_dir`` (if given) afterwards."""
    if cache_dir is not None:
        path = Path(cache_dir) / f"clifford{num_qubits}q.npz"
        tab = load_table(path, num_qubits)
        if tab is not None:
            return tab
    tab = _memo.get(num_qubits) or build_clifford_table(num_qubits)
    _memo[num_qubits] = tab
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        save_table(tab, path)
    return tab


_memo: dict = {}


def recovery_gate(table: CliffordTable, sequence, target_state: str = "up",
                  start_state: str = "down") -> int:
    """Index of the Clifford that returns the sequence's output to a target.

    Parameters
    ----------
    sequence : sequence of int
        Element indices in time order.
    target_state, start_state : {"up", "down"}
        All qubits up (``|0...0>``) or all down (``|1...1>``).

    Returns
    -------
    int
        Index of ``T net^dag`` where ``net`` is the sequence product and ``T``
        maps the start state onto the target (identity or a global bit flip).
    """
    for s in (target_state, start_state):
        if s not in ("up", "down"):
            raise ValueError("states must be 'up' or 'down'")
    net = np.eye(table.dim, dtype=complex)
    for idx in sequence:
        net = table.group[idx] @ net
    t = np.eye(table.dim, dtype=complex)
    if target_state != start_state:
        t = np.fliplr(t)            # X on every qubit maps |0..0> <-> |1..1>
    rec = t @ dagger(net)
    idx = table.index_of(rec)
    psi0 = np.zeros(table.dim)
    psi0[0 if start_state == "up" else -1] = 1
    out = table.group[idx] @ net @ psi0
    assert abs(abs(out[0 if target_state == "up" else -1]) - 1) < 1e-9
    return idx
