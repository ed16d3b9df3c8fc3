"""Jacobian-rank universality testing, exhaustive enumeration of three-qubit
CZ ansatz specifications with the search-space reduction filters, and greedy
parameter pruning of rank-passing candidates."""

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .circuit_ir import CZ, Circuit, Rot, analytic_jacobian, jacobian_real_matrix
from .matrix_core import group_dimension, numerical_rank
from .templates import assemble_su_circuit

DEFAULT_REL_TOL = 1e-8


@dataclass(frozen=True)
class AnsatzSpec:
    """A CZ-placement specification: ordered qubit pairs on ``n`` wires."""

    n: int
    pairs: tuple

    def __post_init__(self):
        pairs = tuple(tuple(sorted(p)) for p in self.pairs)
        if any(a == b or not 0 <= a < b < self.n for a, b in pairs):
            raise ValueError("pairs must contain two distinct wires below n")
        object.__setattr__(self, "pairs", pairs)

    def to_bits(self):
        """Nearest-neighbour encoding: pair (i, i+1) maps to digit i."""
        if any(b - a != 1 for a, b in self.pairs):
            raise ValueError("bit encoding requires nearest-neighbour pairs")
        return "".join(str(a) for a, _ in self.pairs)

    @classmethod
    def from_bits(cls, n, bits):
        return cls(n, tuple((int(c), int(c) + 1) for c in bits))


@dataclass
class RankReport:
    """Outcome of a Jacobian rank test at randomly sampled parameters."""

    rank: int
    full: bool
    group: str
    group_dim: int
    theta: np.ndarray
    rel_tol: float
    attempts: int


def rank_test(circuit, group, seed=0, retries=2, rel_tol=DEFAULT_REL_TOL):
    """Test whether the circuit Jacobian spans the full tangent space.

    Parameters are drawn uniformly from [0, 2pi)^d; on a rank-deficient
    draw the test is repeated with fresh parameters up to ``retries`` times
    and the maximum observed rank is reported.

    Args:
        circuit (Circuit): Circuit to test.
        group (str): Target group label; ``full`` means the rank equals this
            group's dimension.
        seed: Seed or generator for the parameter draws.
        retries (int): Extra draws allowed after a rank-deficient result.
        rel_tol (float): Relative singular-value cutoff.

    Returns:
        RankReport: Maximum rank over the draws and the parameters achieving it.
    """
    rng = np.random.default_rng(seed)
    target = group_dimension(group, circuit.n)
    best_rank, best_theta, attempts = -1, None, 0
    for _ in range(1 + retries):
        theta = rng.uniform(0, 2 * np.pi, circuit.d)
        stack = analytic_jacobian(circuit, theta)
        rank = numerical_rank(jacobian_real_matrix(stack), rel_tol)
        attempts += 1
        if rank > best_rank:
            best_rank, best_theta = rank, theta
        if best_rank == target:
            break
    return RankReport(
        rank=best_rank,
        full=best_rank == target,
        group=group,
        group_dim=target,
        theta=best_theta,
        rel_tol=rel_tol,
        attempts=attempts,
    )


def pair_alphabet(n, nearest_neighbour_only):
    if nearest_neighbour_only:
        return [(i, i + 1) for i in range(n - 1)]
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def enumerate_ansatze(n=3, c=14, nearest_neighbour_only=True, forbid_four_repeats=True):
    """Generate all ansatz specifications with ``c`` entangling gates.

    With ``forbid_four_repeats``, any sequence containing four identical
    consecutive pairs is dropped: such a run merges into a general two-qubit
    block with three CZ gates, taking the total below the lower bound.
    """
    alphabet = pair_alphabet(n, nearest_neighbour_only)
    for combo in product(alphabet, repeat=c):
        if forbid_four_repeats and _has_four_equal_run(combo):
            continue
        yield AnsatzSpec(n, combo)


def _has_four_equal_run(pairs):
    run = 1
    for prev, cur in zip(pairs, pairs[1:]):
        run = run + 1 if cur == prev else 1
        if run == 4:
            return True
    return False


def count_ansatze(n=3, c=14, nearest_neighbour_only=True, forbid_four_repeats=True):
    """Closed-form size of the (filtered) search space.

    Without the repeat filter this is ``a**c`` for alphabet size ``a``; with
    it, a run-length recurrence counts sequences whose runs never reach four.
    """
    a = len(pair_alphabet(n, nearest_neighbour_only))
    if not forbid_four_repeats:
        return a**c
    # strings graded by the length of their final run (at most three)
    runs = np.array([a, 0, 0], dtype=object)
    for _ in range(c - 1):
        extend = runs * (a - 1)
        runs = np.array([extend.sum(), runs[0], runs[1]], dtype=object)
    return int(runs.sum())


def spec_to_circuit(spec):
    """Circuit of an ansatz specification: a ZYZ layer on every wire, then
    one CZ with trailing Y and Z rotations on both wires per pair."""
    return assemble_su_circuit(spec.n, spec.pairs)


def _derived_seed(master_seed, key):
    digest = hashlib.sha256(f"{master_seed}:{key}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _search_task(args):
    n, bits, master_seed, retries, rel_tol = args
    spec = AnsatzSpec.from_bits(n, bits)
    report = rank_test(
        spec_to_circuit(spec),
        "SU",
        seed=_derived_seed(master_seed, bits),
        retries=retries,
        rel_tol=rel_tol,
    )
    return {"pairs": bits, "rank": report.rank, "full": report.full}


@dataclass
class SearchResult:
    records: list
    passing: list
    counts: dict


def run_search(
    n=3,
    c=14,
    nearest_neighbour_only=True,
    forbid_four_repeats=True,
    seed=0,
    retries=2,
    rel_tol=DEFAULT_REL_TOL,
    jobs=1,
):
    """Rank-test every enumerated specification and report the passing ones.

    Per-specification seeds are derived by hashing the master seed with the
    pair string, so results are deterministic and independent of ``jobs``.

    Returns:
        SearchResult: Sorted per-spec records, the passing specs, and counts.
    """
    specs = list(
        enumerate_ansatze(n, c, nearest_neighbour_only, forbid_four_repeats)
    )
    tasks = [(n, s.to_bits(), seed, retries, rel_tol) for s in specs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_search_task, tasks, chunksize=64))
    else:
        records = [_search_task(t) for t in tasks]
    records.sort(key=lambda r: r["pairs"])
    passing = [AnsatzSpec.from_bits(n, r["pairs"]) for r in records if r["full"]]
    counts = {
        "candidates": len(specs),
        "passing": len(passing),
        "group_dim": group_dimension("SU", n),
    }
    return SearchResult(records=records, passing=passing, counts=counts)


def save_results_jsonl(result, path):
    """Persist per-spec records as JSON lines."""
    with open(path, "w") as fh:
        for record in result.records:
            fh.write(json.dumps(record) + "\n")


@dataclass
class PruneResult:
    circuit: Circuit
    reached_target: bool
    removed_params: list


def prune_parameters(circuit, group, seed=0, rel_tol=DEFAULT_REL_TOL):
    """Greedily delete trailing rotations while preserving full rank.

    Starting from the end of the circuit, single-parameter rotations are
    removed one at a time; a removal is kept only if the circuit stays full
    rank and does not trigger a gate merge (which would drop the parameter
    count below the group dimension). Stops once the parameter count equals
    the group dimension; if that is unreachable the input circuit is
    returned unchanged.
    """
    if not all(isinstance(g, (Rot, CZ)) for g in circuit.gates):
        raise ValueError("pruning is defined for CZ/rotation circuits only")
    target = group_dimension(group, circuit.n)
    if circuit.d < target:
        raise ValueError("circuit has fewer parameters than the group dimension")
    if circuit.d == target:
        return PruneResult(circuit, True, [])
    rng = np.random.default_rng(seed)
    gates = list(circuit.gates)
    removed = []
    while True:
        d = sum(1 for g in gates if isinstance(g, Rot))
        if d == target:
            return PruneResult(_reindexed(circuit.n, gates), True, removed)
        for pos in range(len(gates) - 1, -1, -1):
            if not isinstance(gates[pos], Rot):
                continue
            if _removal_merges(gates, pos):
                continue
            candidate = gates[:pos] + gates[pos + 1 :]
            cand_circuit = _reindexed(circuit.n, candidate)
            report = rank_test(
                cand_circuit, group, seed=rng.integers(2**63), retries=1, rel_tol=rel_tol
            )
            if report.rank == target:
                gates = candidate
                removed.append(pos)
                break
        else:
            return PruneResult(circuit, False, removed)


def _reindexed(n, gates):
    """Renumber rotation parameters in gate order after deletions."""
    out = []
    param = 0
    for gate in gates:
        if isinstance(gate, Rot):
            out.append(Rot(gate.axis, gate.wire, param))
            param += 1
        else:
            out.append(gate)
    return Circuit(n, tuple(out))


def _removal_merges(gates, pos):
    """Would deleting the rotation at ``pos`` make two rotations merge?

    Two rotations on the same wire merge if they share the axis and no gate
    between them touches that wire, except that Z rotations commute through
    CZ gates on their wire.
    """
    wire = gates[pos].wire
    left = _neighbour_rotation(gates, pos, wire, range(pos - 1, -1, -1))
    right = _neighbour_rotation(gates, pos, wire, range(pos + 1, len(gates)))
    for a in left:
        for b in right:
            if a.axis == b.axis:
                return True
    return False


def _neighbour_rotation(gates, pos, wire, indices):
    """Rotations on ``wire`` reachable from ``pos`` by commuting through
    transparent gates. Z rotations see through CZ; Y rotations do not."""
    found = []
    blocked_axes = set()
    for i in indices:
        gate = gates[i]
        if isinstance(gate, Rot) and gate.wire == wire:
            remaining = {"x", "y", "z"} - blocked_axes
            if gate.axis in remaining:
                found.append(gate)
            blocked_axes.update(remaining)
        elif isinstance(gate, CZ) and wire in gate.wires:
            blocked_axes.update({"x", "y"})
        elif isinstance(gate, Rot):
            continue
        elif wire in _touched(gate):
            blocked_axes.update({"x", "y", "z"})
        if blocked_axes == {"x", "y", "z"}:
            break
    return found


def _touched(gate):
    if isinstance(gate, CZ):
        return gate.wires
    if isinstance(gate, Rot):
        return (gate.wire,)
    raise TypeError(f"unsupported gate during pruning: {gate!r}")
