"""Quaternion and octonion multiplication used by the Hopf foliation models.

Octonions are built from quaternions by the Cayley-Dickson doubling
(a, b) * (c, d) = (a c - conj(d) b,  d a + b conj(c)); the resulting index
table is written out in the README.  Both products are exposed as structure
tensors so they broadcast over numpy arrays.
"""

from __future__ import annotations

import numpy as np

# quaternion basis 1, i, j, k: table[i, j] = index/sign of e_i * e_j
_QUAT_MUL = {
    (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
    (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
    (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
    (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
}


def _structure_tensor(mul: dict, dim: int) -> np.ndarray:
    t = np.zeros((dim, dim, dim))
    for (i, j), (sign, k) in mul.items():
        t[i, j, k] = sign
    return t


QUATERNION_TENSOR = _structure_tensor(_QUAT_MUL, 4)


def _conj_signs(dim: int) -> np.ndarray:
    s = -np.ones(dim)
    s[0] = 1.0
    return s


def _cayley_dickson(tensor: np.ndarray) -> np.ndarray:
    """Structure tensor of the doubled algebra."""
    d = tensor.shape[0]
    out = np.zeros((2 * d, 2 * d, 2 * d))
    conj = _conj_signs(d)
    for i in range(d):
        for j in range(d):
            row = tensor[i, j]
            # (a,0)(c,0) = (ac, 0)
            out[i, j, :d] += row
            # (a,0)(0,d) = (0, d a)
            out[i, d + j, d:] += tensor[j, i]
            # (0,b)(c,0) = (0, b conj(c))
            out[d + i, j, d:] += tensor[i, j] * conj[j]
            # (0,b)(0,d) = (-conj(d) b, 0)
            out[d + i, d + j, :d] += -tensor[j, i] * conj[j]
    return out


OCTONION_TENSOR = _cayley_dickson(QUATERNION_TENSOR)


def multiply(tensor: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Algebra product, broadcasting over leading axes of x and y."""
    return np.einsum("...i,...j,ijk->...k", x, y, tensor)


def quaternion_mult(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return multiply(QUATERNION_TENSOR, x, y)


def octonion_mult(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return multiply(OCTONION_TENSOR, x, y)


def octonion_conj(x: np.ndarray) -> np.ndarray:
    return x * _conj_signs(8)


def octonion_inverse(x: np.ndarray) -> np.ndarray:
    n2 = np.sum(x * x, axis=-1, keepdims=True)
    return octonion_conj(x) / n2


def right_mult_matrix(tensor: np.ndarray, unit_index: int) -> np.ndarray:
    """Matrix of x -> x * e_l in the basis e_0..e_{d-1} (columns are images)."""
    d = tensor.shape[0]
    m = np.zeros((d, d))
    for a in range(d):
        m[:, a] = tensor[a, unit_index]
    return m


def octonion_index_table() -> str:
    """Human-readable e_i * e_j table (used verbatim in the README)."""
    lines = ["      " + "  ".join(f"e{j}" for j in range(8))]
    for i in range(8):
        row = []
        for j in range(8):
            col = OCTONION_TENSOR[i, j]
            k = int(np.flatnonzero(col)[0])
            sgn = "-" if col[k] < 0 else "+"
            row.append(f"{sgn}e{k}")
        lines.append(f"e{i} | " + " ".join(f"{c:>3}" for c in row))
    return "\n".join(lines)
