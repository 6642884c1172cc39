import numpy as np
import pytest

from crotsim.clifford import (build_clifford_table, cached_table, load_table, primitive_set,
                             recovery_gate, save_table)
from crotsim.gates import is_virtual
from crotsim.linalg import canonical_key


@pytest.fixture(scope="module")
def table1():
    return cached_table(1)


@pytest.fixture(scope="module")
def table2():
    return cached_table(2)


def test_one_qubit_group(table1):
    assert len(table1) == 24
    assert table1.avg_primitives == 1.875
    assert sorted(np.unique(table1.counts)) == [1, 2, 3]


def test_two_qubit_group_size_and_average(table2):
    assert len(table2) == 11520
    # frozen: 29616 primitives in total over the group
    assert int(table2.counts.sum()) == 29616
    assert table2.avg_primitives == pytest.approx(2.5708333333, abs=1e-9)


@pytest.mark.parametrize("n", [1, 2])
def test_decompositions_reproduce_elements(n, table1, table2):
    tab = table1 if n == 1 else table2
    for i in range(0, len(tab), 1 if n == 1 else 7):
        u = tab.labels_unitary(tab.decomp[i])
        assert canonical_key(u) == canonical_key(tab.group[i])


def test_identity_counts_one(table2):
    i = table2.identity_index()
    assert table2.counts[i] == 1
    assert table2.decomp[i] == ["I"]


def test_virtual_gates_are_free(table2):
    for w, c in zip(table2.decomp, table2.counts):
        physical = [lab for lab in w if not is_virtual(lab)]
        # pure-phase elements are realised as virtual gates plus one idle primitive
        assert len(physical) == c


def test_recovery_returns_to_target(table2):
    rng = np.random.default_rng(5)
    seq = [int(x) for x in rng.integers(0, len(table2), 20)]
    down = np.zeros(4)
    down[3] = 1
    for target, idx in (("up", 0), ("down", 3)):
        rec = recovery_gate(table2, seq, target)
        u = np.eye(4)
        for k in seq + [rec]:
            u = table2.group[k] @ u
        assert abs((u @ down)[idx]) == pytest.approx(1.0)


def test_recovery_validates_state(table1):
    with pytest.raises(ValueError):
        recovery_gate(table1, [0], "left")


def test_save_load_roundtrip(tmp_path, table1):
    save_table(table1, tmp_path / "t.npz")
    back = load_table(tmp_path / "t.npz", 1)
    assert back.decomp == table1.decomp
    assert load_table(tmp_path / "t.npz", 2) is None
    assert load_table(tmp_path / "missing.npz") is None


def test_primitive_set_rejects():
    with pytest.raises(ValueError):
        primitive_set(3)


def test_build_expected_size_check():
    with pytest.raises(Exception):
        build_clifford_table(1, expected=25)
