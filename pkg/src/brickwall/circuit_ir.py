"""Parametrized circuits as immutable gate lists, their unitary evaluation,
analytic Jacobians, effective-generator Gram matrices, and the circuit JSON
format.

Conventions: qubit 0 is the leftmost tensor factor; single-qubit rotations
apply ``exp(-i theta P / 2)``; Pauli product rotations apply
``exp(-i scale * theta * W)`` with ``scale = 1`` by default. Circuit order is
left to right in diagrams, so the evaluated matrix is the product of gate
matrices in reverse gate-list order.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .matrix_core import pauli_row_action, validate_pauli_word

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Rot:
    """Single-qubit rotation exp(-i theta P / 2) around axis x, y or z."""

    axis: str
    wire: int
    param: int

    def __post_init__(self):
        if self.axis not in ("x", "y", "z"):
            raise ValueError(f"invalid rotation axis {self.axis!r}")


@dataclass(frozen=True)
class CZ:
    """Controlled-Z; symmetric in its two wires."""

    wires: tuple

    def __post_init__(self):
        a, b = self.wires
        if a == b:
            raise ValueError("CZ wires must be distinct")
        object.__setattr__(self, "wires", (int(a), int(b)))


@dataclass(frozen=True)
class CiY:
    """Controlled-iY: identity on the control-0 branch, iY on the control-1
    branch. Equals an S gate on the control followed by a controlled-Y."""

    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("CiY wires must be distinct")


@dataclass(frozen=True)
class PPR:
    """Pauli product rotation exp(-i scale * theta * W).

    With ``param`` set, the angle is read from the parameter vector and
    multiplied by ``scale``. With ``param=None`` the gate is a fixed
    (typically Clifford) rotation by ``angle``.
    """

    word: str
    param: int | None = None
    scale: float = 1.0
    angle: float | None = None

    def __post_init__(self):
        validate_pauli_word(self.word)
        if (self.param is None) == (self.angle is None):
            raise ValueError("PPR needs exactly one of param or angle")


@dataclass(frozen=True)
class Clifford:
    """Fixed single-qubit Clifford gate, H or S."""

    name: str
    wire: int

    def __post_init__(self):
        if self.name not in ("h", "s"):
            raise ValueError(f"unsupported Clifford gate {self.name!r}")


def _gate_params(gate):
    if isinstance(gate, Rot):
        return (gate.param,)
    if isinstance(gate, PPR) and gate.param is not None:
        return (gate.param,)
    return ()


def _gate_wires(gate, n):
    if isinstance(gate, Rot):
        return (gate.wire,)
    if isinstance(gate, CZ):
        return gate.wires
    if isinstance(gate, CiY):
        return (gate.control, gate.target)
    if isinstance(gate, PPR):
        if len(gate.word) != n:
            raise ValueError("PPR word length must equal the qubit count")
        return tuple(w for w, c in enumerate(gate.word) if c != "I")
    if isinstance(gate, Clifford):
        return (gate.wire,)
    raise TypeError(f"unknown gate {gate!r}")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list over ``n`` wires with ``d`` rotation parameters.

    Each parameter index in ``[0, d)`` feeds exactly one rotation. Instances
    are immutable and safe to share across threads.
    """

    n: int
    gates: tuple
    d: int = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        params = []
        for gate in self.gates:
            wires = _gate_wires(gate, self.n)
            if any(not 0 <= w < self.n for w in wires):
                raise ValueError(f"gate {gate!r} uses wires outside 0..{self.n - 1}")
            params.extend(_gate_params(gate))
        if sorted(params) != list(range(len(params))):
            raise ValueError("parameter indices must cover 0..d-1 exactly once")
        object.__setattr__(self, "d", len(params))

    @property
    def dim(self):
        return 2**self.n


@lru_cache(maxsize=None)
def _bits(n, wire):
    """Bit value of ``wire`` for every basis index (qubit 0 most significant)."""
    return (np.arange(2**n) >> (n - 1 - wire)) & 1


@lru_cache(maxsize=None)
def _row_action(n, word):
    return pauli_row_action(word)


def _single_qubit_matrix(gate, theta):
    if isinstance(gate, Rot):
        angle = theta[gate.param]
        c, s = np.cos(angle / 2), np.sin(angle / 2)
        if gate.axis == "x":
            return np.array([[c, -1j * s], [-1j * s, c]])
        if gate.axis == "y":
            return np.array([[c, -s], [s, c]], dtype=complex)
    if isinstance(gate, Clifford) and gate.name == "h":
        return np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2
    raise TypeError(f"no dense 2x2 matrix for {gate!r}")


def _apply_gate(gate, theta, mat, n):
    """Left-multiply the gate matrix onto ``mat`` (shape (2^n, cols))."""
    dim = 2**n
    if isinstance(gate, Rot) and gate.axis == "z":
        angle = theta[gate.param]
        diag = np.exp(1j * angle * (_bits(n, gate.wire) - 0.5))
        return diag[:, None] * mat
    if isinstance(gate, Rot):
        u = _single_qubit_matrix(gate, theta)
        return _mix_wire(u, gate.wire, mat, n)
    if isinstance(gate, CZ):
        a, b = gate.wires
        sign = 1 - 2 * (_bits(n, a) & _bits(n, b))
        return sign[:, None] * mat
    if isinstance(gate, CiY):
        cbit = _bits(n, gate.control).astype(bool)
        tbit = _bits(n, gate.target).astype(bool)
        out = mat.copy()
        mask = 1 << (n - 1 - gate.target)
        rows = np.arange(dim)
        lo = cbit & ~tbit  # target 0 rows of the control-1 branch
        hi = cbit & tbit
        out[rows[lo]] = mat[rows[lo] ^ mask]
        out[rows[hi]] = -mat[rows[hi] ^ mask]
        return out
    if isinstance(gate, PPR):
        angle = gate.angle if gate.param is None else gate.scale * theta[gate.param]
        perm, phase = _row_action(n, gate.word)
        wm = np.empty_like(mat)
        wm[perm] = phase[:, None] * mat
        return np.cos(angle) * mat - 1j * np.sin(angle) * wm
    if isinstance(gate, Clifford) and gate.name == "s":
        diag = np.where(_bits(n, gate.wire) == 1, 1j, 1.0)
        return diag[:, None] * mat
    if isinstance(gate, Clifford):
        u = _single_qubit_matrix(gate, theta)
        return _mix_wire(u, gate.wire, mat, n)
    raise TypeError(f"unknown gate {gate!r}")


def _mix_wire(u, wire, mat, n):
    """Apply a 2x2 matrix to one wire of the row index of ``mat``."""
    cols = mat.shape[1]
    pre = 2**wire
    post = 2 ** (n - 1 - wire)
    view = mat.reshape(pre, 2, post, cols)
    return np.einsum("ab,pbqc->paqc", u, view).reshape(2**n, cols)


def evaluate(circuit, theta):
    """Unitary matrix of the circuit at parameter vector ``theta``.

    Args:
        circuit (Circuit): The circuit to evaluate.
        theta (array-like): Vector of length ``circuit.d``.

    Returns:
        np.ndarray: Complex matrix of shape ``(2^n, 2^n)``.
    """
    theta = _check_theta(circuit, theta)
    mat = np.eye(circuit.dim, dtype=complex)
    for gate in circuit.gates:
        mat = _apply_gate(gate, theta, mat, circuit.n)
    return mat


def _check_theta(circuit, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.d,):
        raise ValueError(
            f"expected {circuit.d} parameters, got shape {theta.shape}"
        )
    return theta


def state_evolve(circuit, theta, basis_state=0):
    """Apply the circuit to a computational basis state.

    Returns the state vector ``F(theta) e_k`` of length ``2^n``.
    """
    theta = _check_theta(circuit, theta)
    psi = np.zeros((circuit.dim, 1), dtype=complex)
    psi[basis_state, 0] = 1
    for gate in circuit.gates:
        psi = _apply_gate(gate, theta, psi, circuit.n)
    return psi[:, 0]


def _prefix_sweep(circuit, theta):
    """Forward sweep collecting, per parametric gate, the prefix product
    including that gate together with the generator's word and coefficient."""
    n = circuit.n
    mat = np.eye(circuit.dim, dtype=complex)
    prefixes = np.empty((circuit.d, circuit.dim, circuit.dim), dtype=complex)
    words = [None] * circuit.d
    coeffs = np.empty(circuit.d)
    for gate in circuit.gates:
        mat = _apply_gate(gate, theta, mat, n)
        if isinstance(gate, Rot):
            word = "".join(
                gate.axis.upper() if w == gate.wire else "I" for w in range(n)
            )
            prefixes[gate.param] = mat
            words[gate.param] = word
            coeffs[gate.param] = 0.5
        elif isinstance(gate, PPR) and gate.param is not None:
            prefixes[gate.param] = mat
            words[gate.param] = gate.word
            coeffs[gate.param] = gate.scale
    return mat, prefixes, words, coeffs


def analytic_jacobian(circuit, theta):
    """Stack of partial derivatives of the circuit unitary.

    Slice ``j`` equals ``dF/dtheta_j`` at the given parameters and is computed
    from the left-effective generator: conjugating the gate generator by the
    subcircuit up to that gate and multiplying by the full unitary.

    Returns:
        np.ndarray: Array of shape ``(d, 2^n, 2^n)``.
    """
    theta = _check_theta(circuit, theta)
    full, prefixes, words, coeffs = _prefix_sweep(circuit, theta)
    if circuit.d == 0:
        return np.empty((0, circuit.dim, circuit.dim), dtype=complex)
    # dF/dtheta_j = S_{j+1} G_j P_j with P_j the prefix including gate j,
    # G_j = -i c W its generator, and the suffix recovered as S_{j+1} = F P_j^dag.
    gp = np.empty_like(prefixes)
    for j, (word, c) in enumerate(zip(words, coeffs)):
        perm, phase = _row_action(circuit.n, word)
        gp[j][perm] = (-1j * c * phase)[:, None] * prefixes[j]
    right_gen = np.matmul(prefixes.conj().transpose(0, 2, 1), gp)
    return np.matmul(full[None, :, :], right_gen)


def jacobian_real_matrix(stack):
    """Flatten a Jacobian stack into a real matrix of shape (d, 2*4^n).

    Real and imaginary parts are stacked so that the matrix rank equals the
    rank of the real-linear span of the slices.
    """
    stack = np.asarray(stack)
    d = stack.shape[0]
    flat = stack.reshape(d, -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def gram_matrix(circuit, theta):
    """Gram matrix of the Jacobian slices under the trace inner product.

    Entry (j, k) is ``Re tr((dF/dtheta_j)^dag (dF/dtheta_k)) / 2^n``; the
    result is symmetric positive semidefinite and shares its rank with the
    flattened Jacobian.
    """
    stack = analytic_jacobian(circuit, theta)
    gram = np.einsum("jab,kab->jk", stack.conj(), stack).real / circuit.dim
    return (gram + gram.T) / 2


def batched_states(circuit, thetas, basis_state=0):
    """Evaluate ``F(theta) |k>`` for a batch of parameter vectors.

    Args:
        circuit (Circuit): Circuit to run.
        thetas (np.ndarray): Array of shape ``(batch, d)``.
        basis_state (int): Index of the initial computational basis state.

    Returns:
        np.ndarray: States of shape ``(batch, 2^n)``.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != circuit.d:
        raise ValueError(f"expected {circuit.d} parameters per row")
    batch = thetas.shape[0]
    n, dim = circuit.n, circuit.dim
    psi = np.zeros((batch, dim), dtype=complex)
    psi[:, basis_state] = 1
    for gate in circuit.gates:
        psi = _apply_gate_batch(gate, thetas, psi, n)
    return psi


def _apply_gate_batch(gate, thetas, psi, n):
    dim = 2**n
    if isinstance(gate, Rot) and gate.axis == "z":
        angle = thetas[:, gate.param]
        psi = psi * np.exp(1j * np.outer(angle, _bits(n, gate.wire) - 0.5))
        return psi
    if isinstance(gate, Rot):
        angle = thetas[:, gate.param]
        c, s = np.cos(angle / 2), np.sin(angle / 2)
        if gate.axis == "y":
            u = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
            u = u.astype(complex)
        else:
            u = np.stack(
                [np.stack([c, -1j * s], -1), np.stack([-1j * s, c], -1)], -2
            )
        pre = 2**gate.wire
        post = 2 ** (n - 1 - gate.wire)
        view = psi.reshape(-1, pre, 2, post)
        return np.einsum("sab,spbq->spaq", u, view).reshape(-1, dim)
    if isinstance(gate, CZ):
        a, b = gate.wires
        sign = 1 - 2 * (_bits(n, a) & _bits(n, b))
        return psi * sign[None, :]
    if isinstance(gate, PPR):
        if gate.param is None:
            angle = np.full(psi.shape[0], gate.angle)
        else:
            angle = gate.scale * thetas[:, gate.param]
        perm, phase = _row_action(n, gate.word)
        wpsi = np.empty_like(psi)
        wpsi[:, perm] = psi * phase[None, :]
        return np.cos(angle)[:, None] * psi - 1j * np.sin(angle)[:, None] * wpsi
    # fixed gates share the matrix path via a transposed column trick
    out = _apply_gate(gate, None, psi.T.copy(), n)
    return out.T.copy()


def circuit_to_json(circuit):
    """Serialize a circuit to the JSON gate-list schema."""
    gates = []
    for gate in circuit.gates:
        if isinstance(gate, Rot):
            gates.append(
                {"kind": "rot", "axis": gate.axis, "wires": [gate.wire], "param": gate.param}
            )
        elif isinstance(gate, CZ):
            gates.append({"kind": "cz", "wires": list(gate.wires)})
        elif isinstance(gate, CiY):
            gates.append({"kind": "ciy", "wires": [gate.control, gate.target]})
        elif isinstance(gate, PPR):
            entry = {"kind": "ppr", "word": gate.word}
            if gate.param is not None:
                entry["param"] = gate.param
                if gate.scale != 1.0:
                    entry["scale"] = gate.scale
            else:
                entry["angle"] = gate.angle
            gates.append(entry)
        elif isinstance(gate, Clifford):
            gates.append({"kind": "clifford", "name": gate.name, "wires": [gate.wire]})
        else:
            raise TypeError(f"unknown gate {gate!r}")
    return {"n": circuit.n, "gates": gates, "d": circuit.d}


def circuit_from_json(obj):
    """Inverse of :func:`circuit_to_json`, validating the schema."""
    try:
        n = int(obj["n"])
        raw_gates = obj["gates"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed circuit JSON: {exc}") from exc
    gates = []
    for entry in raw_gates:
        kind = entry.get("kind")
        if kind == "rot":
            gates.append(Rot(entry["axis"], entry["wires"][0], entry["param"]))
        elif kind == "cz":
            gates.append(CZ(tuple(entry["wires"])))
        elif kind == "ciy":
            gates.append(CiY(entry["wires"][0], entry["wires"][1]))
        elif kind == "ppr":
            gates.append(
                PPR(
                    entry["word"],
                    param=entry.get("param"),
                    scale=entry.get("scale", 1.0),
                    angle=entry.get("angle"),
                )
            )
        elif kind == "clifford":
            gates.append(Clifford(entry["name"], entry["wires"][0]))
        else:
            raise ValueError(f"unknown gate kind {kind!r}")
    circuit = Circuit(n, tuple(gates))
    if "d" in obj and obj["d"] != circuit.d:
        raise ValueError("declared parameter count does not match the gates")
    return circuit
