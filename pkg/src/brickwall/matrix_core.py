"""Dense complex linear algebra shared by all other modules: Pauli words and
their matrices, random matrices from the classical groups, membership checks,
numerical rank, and the JSON matrix format."""

import numpy as np

SU = "SU"
SO = "SO"
SP = "SP"
GROUPS = (SU, SO, SP)

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def validate_pauli_word(word):
    """Check that ``word`` is a nonempty string over I, X, Y, Z."""
    if not word or any(c not in "IXYZ" for c in word):
        raise ValueError(f"not a Pauli word: {word!r}")
    return word


def pauli_matrix(word):
    """Kronecker-product matrix of a Pauli word, qubit 0 as the leftmost factor.

    Args:
        word (str): Pauli word over the alphabet I, X, Y, Z.

    Returns:
        np.ndarray: Hermitian unitary matrix of shape ``(2**n, 2**n)``.
    """
    validate_pauli_word(word)
    mat = PAULI_1Q[word[0]]
    for letter in word[1:]:
        mat = np.kron(mat, PAULI_1Q[letter])
    return mat


def pauli_row_action(word):
    """Permutation/phase description of a Pauli word acting on basis states.

    Returns arrays ``(perm, phase)`` such that ``W |i> = phase[i] |perm[i]>``,
    which lets us apply ``W`` to matrices and state batches without building
    the full matrix.
    """
    validate_pauli_word(word)
    n = len(word)
    dim = 2**n
    idx = np.arange(dim)
    perm = idx.copy()
    phase = np.ones(dim, dtype=complex)
    for w, letter in enumerate(word):
        if letter == "I":
            continue
        mask = 1 << (n - 1 - w)
        bit = (idx >> (n - 1 - w)) & 1
        if letter == "X":
            perm ^= mask
        elif letter == "Y":
            perm ^= mask
            phase = phase * (1j * (1 - 2 * bit))
        else:  # Z
            phase = phase * (1 - 2 * bit)
    return perm, phase


def paulis_commute(word_a, word_b):
    """Commutation predicate: two Pauli words either commute or anticommute.

    They anticommute iff the number of positions where both letters differ
    and neither is the identity is odd.
    """
    if len(word_a) != len(word_b):
        raise ValueError("Pauli words must have equal length")
    clashes = sum(
        1 for a, b in zip(word_a, word_b) if a != "I" and b != "I" and a != b
    )
    return clashes % 2 == 0


def all_pauli_words(n, include_identity=False):
    """All length-``n`` Pauli words in lexicographic order (I < X < Y < Z)."""
    from itertools import product

    words = ["".join(p) for p in product("IXYZ", repeat=n)]
    if not include_identity:
        words = [w for w in words if w != "I" * n]
    return words


def trace_inner_product(a, b):
    """Normalized trace inner product ``tr(A^dag B) / dim``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.trace(a.conj().T @ b) / a.shape[0]


def group_dimension(group, n):
    """Dimension of SU(2^n), SO(2^n) or Sp*(2^n) as a real manifold."""
    if group == SU:
        return 4**n - 1
    if group == SO:
        return 2 ** (n - 1) * (2**n - 1)
    if group == SP:
        return 2 ** (n - 1) * (2**n + 1)
    raise ValueError(f"unknown group {group!r}")


def symplectic_form(n):
    """The symplectic form J = i (Y on qubit 0), i.e. ``[[0, I], [-I, 0]]``."""
    iY = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
    return np.kron(iY, np.eye(2 ** (n - 1), dtype=complex))


def haar_unitary(n, seed=None):
    """Haar random special unitary on ``n`` qubits.

    QR decomposition of a complex Ginibre matrix with the R-diagonal phase
    fix gives a Haar sample from U(2^n); the result is then deflated to
    determinant one by the principal ``2^n``-th root of its determinant.

    Args:
        n (int): Number of qubits.
        seed: Seed or ``np.random.Generator``.

    Returns:
        np.ndarray: Matrix ``U`` with ``U^dag U = I`` and ``det U = 1``.
    """
    rng = np.random.default_rng(seed)
    dim = 2**n
    ginibre = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(ginibre)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    det = np.linalg.det(q)
    return q * np.exp(-1j * np.angle(det) / dim)


def haar_orthogonal(n, seed=None):
    """Random special orthogonal matrix on ``n`` qubits.

    QR of a real Ginibre matrix with the R-diagonal sign fix samples O(2^n);
    a determinant of -1 is repaired by flipping the sign of the last column.
    """
    rng = np.random.default_rng(seed)
    dim = 2**n
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    q = q * np.sign(np.diagonal(r))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q.astype(complex)


def symplectic_algebra_words(n):
    """Hermitian Pauli-word basis of the symplectic algebra sp*(2^n).

    Writing each word as P (x) W with P on the distinguished qubit 0, the
    algebra is spanned by I (x) W for W with an odd number of Y letters and
    by {X, Y, Z} (x) W for W with an even number of Y letters.
    """
    words = []
    for rest in all_pauli_words(n - 1, include_identity=True):
        if rest.count("Y") % 2 == 1:
            words.append("I" + rest)
        else:
            words.extend(["X" + rest, "Y" + rest, "Z" + rest])
    return words


def random_symplectic_algebra_element(n, rng, scale=1.0):
    """Random Hermitian element of sp*(2^n) with normal coefficients."""
    words = symplectic_algebra_words(n)
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    coeffs = rng.normal(scale=scale, size=len(words))
    for c, word in zip(coeffs, words):
        perm, phase = pauli_row_action(word)
        h[perm, np.arange(dim)] += c * phase
    return h


def haar_symplectic(n, seed=None, n_factors=10):
    """Random symplectic unitary ``Q`` with ``Q J Q^T = J``.

    Composes ``n_factors`` exponentials of independent random algebra
    elements. This covers the group with full measure but makes no claim
    of exact Haar distribution.
    """
    rng = np.random.default_rng(seed)
    dim = 2**n
    q = np.eye(dim, dtype=complex)
    scale = np.pi / np.sqrt(group_dimension(SP, n))
    for _ in range(n_factors):
        h = random_symplectic_algebra_element(n, rng, scale=scale)
        evals, evecs = np.linalg.eigh(h)
        q = q @ (evecs * np.exp(-1j * evals)) @ evecs.conj().T
    return q


def unitarity_residual(m):
    """Max-norm deviation of ``M^dag M`` from the identity."""
    m = np.asarray(m)
    return np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))


def group_membership(m, group, n, utol=1e-10, gtol=1e-8):
    """Check membership of ``m`` in the given group, raising on failure.

    The unitarity residual is checked against ``utol``; the group-specific
    condition (realness for SO, the symplectic condition for SP, determinant
    one for SU and SO) against ``gtol``.
    """
    m = np.asarray(m, dtype=complex)
    dim = 2**n
    if m.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got {m.shape}")
    if unitarity_residual(m) > utol:
        raise ValueError(f"matrix is not unitary to {utol}")
    if group == SU:
        if abs(np.linalg.det(m) - 1) > gtol:
            raise ValueError("determinant is not one; not in SU")
    elif group == SO:
        if np.max(np.abs(m.imag)) > gtol:
            raise ValueError("matrix is not real; not in SO")
        if abs(np.linalg.det(m) - 1) > gtol:
            raise ValueError("determinant is not one; not in SO")
    elif group == SP:
        j = symplectic_form(n)
        if np.max(np.abs(m @ j @ m.T - j)) > gtol:
            raise ValueError("symplectic condition violated; not in Sp*")
    else:
        raise ValueError(f"unknown group {group!r}")
    return True


def random_group_element(group, n, seed=None):
    """Haar-style random element of the given group."""
    if group == SU:
        return haar_unitary(n, seed)
    if group == SO:
        return haar_orthogonal(n, seed)
    if group == SP:
        return haar_symplectic(n, seed)
    raise ValueError(f"unknown group {group!r}")


def numerical_rank(m, rel_tol=1e-8):
    """Number of singular values above ``rel_tol`` times the largest one.

    Args:
        m (np.ndarray): Nonempty real or complex matrix.
        rel_tol (float): Relative singular-value cutoff in (0, 1).

    Returns:
        int: The numerical rank; zero for an all-zero matrix.
    """
    m = np.asarray(m)
    if m.size == 0:
        raise ValueError("empty matrix has no rank")
    if not 0 < rel_tol < 1:
        raise ValueError("rel_tol must lie in (0, 1)")
    sigma = np.linalg.svd(m, compute_uv=False)
    if sigma[0] == 0:
        return 0
    return int(np.sum(sigma > rel_tol * sigma[0]))


def matrix_to_json(m):
    """Serialize a matrix to the ``{"dim", "re", "im"}`` JSON object."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("only square matrices are serialized")
    return {
        "dim": m.shape[0],
        "re": m.real.tolist(),
        "im": m.imag.tolist(),
    }


def matrix_from_json(obj):
    """Inverse of :func:`matrix_to_json`, with shape validation."""
    dim = obj["dim"]
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ValueError("matrix JSON has inconsistent shapes")
    return re + 1j * im
