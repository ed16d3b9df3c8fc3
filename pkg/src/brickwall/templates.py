"""Constructive brick wall circuit templates for SU(2^n), SO(2^n) and
Sp*(2^n), their gate-count formulas and lower bounds, translation to Pauli
product rotations, and the Lie-algebra product ansatz."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .circuit_ir import CZ, Circuit, CiY, PPR, Rot
from .matrix_core import (
    SO,
    SP,
    SU,
    all_pauli_words,
    group_dimension,
    paulis_commute,
)

BRICK_PARAMS = {SU: 4, SO: 2, SP: 3}

VERIFIED_QUBIT_COUNTS = (3, 4, 5)


def initial_layer_params(group, n):
    """Parameters in the entangler-free initial layer: 3n, n or n + 2."""
    return {SU: 3 * n, SO: n, SP: n + 2}[group]


def n_layers(n):
    """Number of complete green-block repetitions in the SU(2^n) template."""
    if n < 2:
        raise ValueError("brick wall templates need n >= 2")
    return (4**n - 1 - 3 * n) // (4 * (n - 1))


def lower_bound_two_qubit(group, n):
    """Dimension-counting lower bound on the number of two-qubit gates."""
    d = group_dimension(group, n)
    free = d - initial_layer_params(group, n)
    return math.ceil(free / BRICK_PARAMS[group])


def green_block_pairs(group, n):
    """Wire pairs of one green block, in application order.

    SU and SO tile even nearest-neighbour pairs left to right, then odd
    pairs; the symplectic template entangles every other wire with the
    distinguished wire 0 in turn.
    """
    if group == SP:
        return tuple((k, 0) for k in range(1, n))
    evens = [(i, i + 1) for i in range(0, n - 1, 2)]
    odds = [(i, i + 1) for i in range(1, n - 1, 2)]
    return tuple(evens + odds)


@dataclass(frozen=True)
class TemplateSpec:
    """Constructive layout of a template: initial layer, repeated green
    block, and a remainder of (pair, rotation-count) bricks."""

    group: str
    n: int
    initial_layer: tuple
    green_block: tuple
    n_layers: int
    remainder: tuple

    @property
    def params(self):
        per_brick = BRICK_PARAMS[self.group]
        full = sum(len(axes) for axes in self.initial_layer)
        full += self.n_layers * len(self.green_block) * per_brick
        return full + sum(r for _, r in self.remainder)

    @property
    def two_qubit_count(self):
        return self.n_layers * len(self.green_block) + len(self.remainder)


def _initial_axes(group, n):
    if group == SU:
        return ("zyz",) * n
    if group == SO:
        return ("y",) * n
    return ("zyz",) + ("y",) * (n - 1)


def _brick_rotations(group, pair):
    """Rotation (axis, wire) slots of a full brick, in truncation order."""
    if group == SP:
        k, _ = pair
        return (("z", 0), ("y", 0), ("y", k))
    a, b = pair
    if group == SO:
        return (("y", a), ("y", b))
    return (("y", a), ("y", b), ("z", a), ("z", b))


def template_spec(group, n, total_params=None, n_bricks=None):
    """Packing layout for a (possibly truncated) template.

    Bricks from the cyclic green-block pattern are filled with rotation
    parameters until ``total_params`` is reached; the final brick keeps its
    entangler and drops trailing rotations.
    """
    if group not in BRICK_PARAMS:
        raise ValueError(f"unknown group {group!r}")
    if n < 2:
        raise ValueError("brick wall templates need n >= 2")
    dim = group_dimension(group, n)
    per_brick = BRICK_PARAMS[group]
    init = initial_layer_params(group, n)
    green = green_block_pairs(group, n)
    if total_params is None:
        total_params = dim
    if n_bricks is None:
        n_bricks = math.ceil((total_params - init) / per_brick)
    else:
        total_params = min(init + n_bricks * per_brick, total_params)
    full_layers, rest = divmod(n_bricks, len(green))
    remainder_pairs = list(green[:rest])
    # a trailing incomplete brick demotes the last full layer to remainder
    leftover = total_params - init - n_bricks * per_brick
    if leftover < 0 and rest == 0 and full_layers > 0:
        full_layers -= 1
        remainder_pairs = list(green)
    remainder = []
    budget = total_params - init - full_layers * len(green) * per_brick
    for pair in remainder_pairs:
        take = min(per_brick, budget)
        remainder.append((pair, take))
        budget -= take
    assert budget == 0
    return TemplateSpec(
        group=group,
        n=n,
        initial_layer=_initial_axes(group, n),
        green_block=green,
        n_layers=full_layers,
        remainder=tuple(remainder),
    )


def _build_from_spec(spec):
    gates = []
    param = 0
    for wire, axes in enumerate(spec.initial_layer):
        for axis in axes:
            gates.append(Rot(axis, wire, param))
            param += 1
    bricks = [(pair, BRICK_PARAMS[spec.group]) for _ in range(spec.n_layers) for pair in spec.green_block]
    bricks.extend(spec.remainder)
    for pair, n_rot in bricks:
        if spec.group == SP:
            gates.append(CiY(control=pair[0], target=0))
        else:
            gates.append(CZ(pair))
        for axis, wire in _brick_rotations(spec.group, pair)[:n_rot]:
            gates.append(Rot(axis, wire, param))
            param += 1
    return Circuit(spec.n, tuple(gates))


def build_template(group, n):
    """Brick wall template with the optimal parameter and entangler count.

    For qubit counts outside the numerically verified range the constructive
    packing rule is applied and a warning is emitted.
    """
    if n not in VERIFIED_QUBIT_COUNTS:
        warnings.warn(
            f"universality of the {group} template is unverified for n={n}",
            stacklevel=2,
        )
    return _build_from_spec(template_spec(group, n))


def truncated_template(group, n, n_bricks):
    """The first ``n_bricks`` bricks of the template layout.

    The initial layer is always included; the parameter count is capped at
    the group dimension by the same remainder rule as the full template.
    """
    if n_bricks < 0:
        raise ValueError("n_bricks must be nonnegative")
    n_bricks = min(n_bricks, lower_bound_two_qubit(group, n))
    return _build_from_spec(template_spec(group, n, n_bricks=n_bricks))


def two_qubit_count(circuit):
    """Number of entangling gates (CZ or CiY) in a circuit."""
    return sum(isinstance(g, (CZ, CiY)) for g in circuit.gates)


def template_counts(group, n):
    """Counts report for a template, as emitted by the command line tool."""
    circuit = _build_from_spec(template_spec(group, n))
    return {
        "group": group,
        "n": n,
        "params": circuit.d,
        "two_qubit": two_qubit_count(circuit),
        "bound": lower_bound_two_qubit(group, n),
    }


THREE_QUBIT_VARIANTS = ("brick_wall", "block")


def build_three_qubit_variant(variant):
    """One of the two parameter-optimal 63-parameter layouts on three qubits.

    ``"brick_wall"`` alternates the two nearest-neighbour pairs; ``"block"``
    groups bricks into larger two-qubit blocks. Both use 14 CZ gates.
    """
    if variant == "brick_wall":
        pairs = [(0, 1), (1, 2)] * 7
    elif variant == "block":
        pairs = [(0, 1), (0, 1), (1, 2), (1, 2)] * 3 + [(0, 1), (0, 1)]
    else:
        raise ValueError(f"unknown variant {variant!r}; pick from {THREE_QUBIT_VARIANTS}")
    return assemble_su_circuit(3, pairs, total_params=63)


def assemble_su_circuit(n, pairs, total_params=None):
    """SU-style circuit from an explicit CZ pair sequence.

    Starts with a ZYZ layer on every wire and adds one four-parameter brick
    per pair; ``total_params`` truncates trailing rotations of the last
    bricks, as in the parameter-optimal templates.
    """
    init = 3 * n
    if total_params is None:
        total_params = init + 4 * len(pairs)
    if not init <= total_params <= init + 4 * len(pairs):
        raise ValueError("total_params incompatible with the pair sequence")
    gates = []
    param = 0
    for wire in range(n):
        for axis in "zyz":
            gates.append(Rot(axis, wire, param))
            param += 1
    budget = total_params - init
    for pair in pairs:
        gates.append(CZ(tuple(pair)))
        take = min(4, budget)
        for axis, wire in _brick_rotations(SU, tuple(pair))[:take]:
            gates.append(Rot(axis, wire, param))
            param += 1
        budget -= take
    return Circuit(n, tuple(gates))


def to_ppr(circuit):
    """Translate a CZ/rotation circuit into Pauli product rotations.

    Each CZ is commuted rightwards through the remaining rotations, turning
    them into multi-qubit PPRs, until it cancels against a later CZ on the
    same pair. Unpaired CZ gates survive as fixed Clifford PPRs at the end,
    so the result equals the input unitary up to a global phase at the same
    parameter values.
    """
    frame = set()
    gates = []
    for gate in circuit.gates:
        if isinstance(gate, CZ):
            key = frozenset(gate.wires)
            frame.symmetric_difference_update({key})
        elif isinstance(gate, Rot):
            letters = ["I"] * circuit.n
            letters[gate.wire] = gate.axis.upper()
            if gate.axis != "z":
                for pair in frame:
                    if gate.wire in pair:
                        (partner,) = pair - {gate.wire}
                        letters[partner] = "Z"
            gates.append(PPR("".join(letters), param=gate.param, scale=0.5))
        else:
            raise ValueError(f"cannot convert gate {gate!r} to PPR form")
    for pair in sorted(tuple(sorted(p)) for p in frame):
        a, b = pair
        word_a = "".join("Z" if w == a else "I" for w in range(circuit.n))
        word_b = "".join("Z" if w == b else "I" for w in range(circuit.n))
        word_ab = "".join("Z" if w in pair else "I" for w in range(circuit.n))
        gates.append(PPR(word_a, angle=np.pi / 4))
        gates.append(PPR(word_b, angle=np.pi / 4))
        gates.append(PPR(word_ab, angle=-np.pi / 4))
    return Circuit(circuit.n, tuple(gates))


ORDERINGS = ("lexicographic", "shuffled", "greedy")


def lie_algebra_product_ansatz(n, ordering="lexicographic", seed=None, start_index=0):
    """Product of one PPR per non-identity Pauli word (d = 4^n - 1).

    Args:
        n (int): Number of qubits.
        ordering (str): ``"lexicographic"``, ``"shuffled"`` (uses ``seed``)
            or ``"greedy"``, which starts at ``start_index`` and always picks
            the next unused word that anticommutes with the previous one,
            falling back to the first unused word.
        seed: Seed for the shuffled ordering.
        start_index (int): First word for the greedy ordering.

    Returns:
        Circuit: PPR-only circuit covering every word exactly once.
    """
    words = all_pauli_words(n)
    if ordering == "lexicographic":
        ordered = words
    elif ordering == "shuffled":
        rng = np.random.default_rng(seed)
        ordered = [words[i] for i in rng.permutation(len(words))]
    elif ordering == "greedy":
        ordered = _greedy_noncommuting(words, start_index)
    else:
        raise ValueError(f"unknown ordering {ordering!r}; pick from {ORDERINGS}")
    gates = tuple(PPR(word, param=i) for i, word in enumerate(ordered))
    return Circuit(n, gates)


def _greedy_noncommuting(words, start_index):
    remaining = list(words)
    ordered = [remaining.pop(start_index)]
    while remaining:
        for i, word in enumerate(remaining):
            if not paulis_commute(ordered[-1], word):
                ordered.append(remaining.pop(i))
                break
        else:
            ordered.append(remaining.pop(0))
    return ordered
