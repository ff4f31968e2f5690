"""Permutation-group machinery and the brute-force symmetrization oracle.

Conventions.  A permutation stores its image tuple: sigma(j) = image[j].
Composition is function composition, (sigma * tau)(j) = sigma(tau(j)).
Acting on digit tuples: a^sigma is the tuple with (a^sigma)_j = a_{sigma(j)}.
Acting on states over n same-dimension wires, sigma maps wire content so that
the output amplitude at tuple a equals the input amplitude at a^{tau} with
tau = sigma^{-1}.

The symmetrized amplitude of a table A at a tuple a is the uniform average
(1/n!) * sum_sigma A(a^{n sigma}); :func:`oracle_symmetrized_amplitude`
computes it by direct enumeration and is the artifact's ground truth.
"""

from __future__ import annotations

import itertools
import math
import os
from collections.abc import Sequence

import numpy as np

from .labellers import build_swap_stage
from .sim import GateOp, RegisterLayout, StateVector

MAX_ORACLE_N = 8  # n! * d^n stays desk-sized below this


class Permutation:
    """A bijection on {0..n-1} stored as its image tuple."""

    __slots__ = ("image",)

    def __init__(self, image: Sequence[int]):
        img = tuple(int(j) for j in image)
        if sorted(img) != list(range(len(img))):
            raise ValueError(f"not a permutation of 0..{len(img) - 1}: {img}")
        self.image = img

    @property
    def n(self) -> int:
        return len(self.image)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "Permutation":
        img = list(range(n))
        img[i], img[j] = img[j], img[i]
        return cls(img)

    def __call__(self, j: int) -> int:
        return self.image[j]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if self.n != other.n:
            raise ValueError("size mismatch")
        return Permutation(tuple(self.image[other.image[j]] for j in range(self.n)))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for j, img in enumerate(self.image):
            inv[img] = j
        return Permutation(inv)

    def apply_to_tuple(self, a: Sequence) -> tuple:
        """a^sigma: component j of the result is a[sigma(j)]."""
        if len(a) != self.n:
            raise ValueError("tuple length mismatch")
        return tuple(a[self.image[j]] for j in range(self.n))

    def matrix(self) -> np.ndarray:
        """n x n matrix M with M @ e_j = e_{sigma(j)}."""
        mat = np.zeros((self.n, self.n))
        for j in range(self.n):
            mat[self.image[j], j] = 1.0
        return mat

    def one_line(self) -> tuple[int, ...]:
        """1-based one-line notation (for logs; internals stay 0-based)."""
        return tuple(j + 1 for j in self.image)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Permutation) and self.image == other.image

    def __hash__(self) -> int:
        return hash(self.image)

    def __repr__(self) -> str:
        return f"Permutation{self.image}"


def enumerate_sym(n: int) -> list[Permutation]:
    """All of Sym_n in dictionary order of the image tuples."""
    if not 1 <= n <= MAX_ORACLE_N:
        raise ValueError(f"n must be in 1..{MAX_ORACLE_N}, got {n}")
    return [Permutation(img) for img in itertools.permutations(range(n))]


def permute_state(state: StateVector, sigma: Permutation,
                  wires: Sequence[str]) -> StateVector:
    """Permute wire contents: output amplitude at a = input at a^{sigma^-1}."""
    layout = state.layout
    if len(wires) != sigma.n:
        raise ValueError("wires/permutation size mismatch")
    dims = {layout.dim(w) for w in wires}
    if len(dims) != 1:
        raise ValueError("permuted wires must share one dimension")
    axes = [layout.tensor_axis(w) for w in wires]
    # out[a] = in[a^{sigma^-1}], i.e. basis |t> lands on |t^sigma>; in axis
    # terms the transpose must read wire j's slot from wire sigma(j)'s slot.
    perm = list(range(layout.num_wires))
    for j in range(sigma.n):
        perm[axes[j]] = axes[sigma(j)]
    out = np.transpose(state.tensor, perm)
    return StateVector.raw(layout, np.ascontiguousarray(out).reshape(-1))


def dense_permutation_matrix(sigma: Permutation, d: int) -> np.ndarray:
    """Dense d^n x d^n matrix of the wire permutation (for small-case tests)."""
    n = sigma.n
    size = d ** n
    tau = sigma.inverse()
    mat = np.zeros((size, size))
    for idx in range(size):
        digits = []
        rem = idx
        for _ in range(n):
            digits.append(rem % d)
            rem //= d
        src = tuple(digits[tau(j)] for j in range(n))
        src_idx = sum(x * d ** j for j, x in enumerate(src))
        mat[idx, src_idx] = 1.0
    return mat


class Symmetrizer:
    """The uniform average over Sym_n wire permutations, pi = (1/n!) sum sigma.

    mode 'dense' materializes the d^n-dimensional matrix; mode 'cascade'
    exposes the labelled-swap stages of :func:`build_symmetrizer_cascade`.
    """

    def __init__(self, n: int, mode: str = "dense"):
        if mode not in ("dense", "cascade"):
            raise ValueError(f"unknown mode {mode!r}")
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.mode = mode

    def dense(self, d: int) -> np.ndarray:
        acc = None
        for sigma in enumerate_sym(self.n):
            mat = dense_permutation_matrix(sigma, d)
            acc = mat if acc is None else acc + mat
        return acc / math.factorial(self.n)

    def stages(self, alpha_wires, label_groups) -> list[list[GateOp]]:
        return build_symmetrizer_cascade(self.n, alpha_wires, label_groups)


def build_symmetrizer_cascade(n: int, alpha_wires: Sequence[str],
                              label_groups: Sequence[Sequence[str]]) -> list[list[GateOp]]:
    """Labelled-swap stages whose product symmetrizes the alpha register.

    Stage k-2 (k = 2..n) realizes, on its label-zero component, the uniform
    sum (1/k)(1 + sum_{j<k-1} swap(alpha_j, alpha_{k-1})); the ordered product
    of the stage sums equals pi_Sym_n, i.e. n! * pi when each stage sum is
    left unnormalized.  label_groups[l] supplies the l+1 label wires of stage
    l, all distinct from the alpha wires.
    """
    if n < 2:
        raise ValueError("cascade needs n >= 2")
    if len(alpha_wires) < n:
        raise ValueError(f"need {n} alpha wires")
    if len(label_groups) < n - 1:
        raise ValueError(f"need {n - 1} label groups")
    return [build_swap_stage(level, list(alpha_wires), list(label_groups[level]))
            for level in range(n - 1)]


def oracle_symmetrized_amplitude(psi_amps: np.ndarray | Sequence[complex],
                                 a: Sequence[int], d: int | None = None) -> complex:
    """Brute-force (1/n!) sum_sigma A(a^sigma) over all of Sym_n.

    psi_amps is the amplitude table over n wires of dimension d in
    least-significant-wire-first mixed-radix order; a is the digit tuple.
    Summation runs in enumeration order with compensated addition so the
    result is bit-stable.
    """
    amps = np.asarray(psi_amps, dtype=np.complex128).reshape(-1)
    n = len(a)
    if d is None:
        d = round(amps.size ** (1.0 / n))
    if d ** n != amps.size:
        raise ValueError(f"table of size {amps.size} is not d^{n} for any integer d")
    if any(not 0 <= x < d for x in a):
        raise ValueError(f"tuple {a} out of digit range for d={d}")
    res, ims = [], []
    for sigma in enumerate_sym(n):
        perm = sigma.apply_to_tuple(a)
        idx = sum(x * d ** j for j, x in enumerate(perm))
        res.append(amps[idx].real)
        ims.append(amps[idx].imag)
    return complex(math.fsum(res) / math.factorial(n),
                   math.fsum(ims) / math.factorial(n))


# ---------------------------------------------------------------------------
# Amplitude-table files
# ---------------------------------------------------------------------------
#
# One line per basis tuple: `a_{n-1} ... a_0 re im`, whitespace-separated,
# digits printed most-significant wire first (ket reading order).  Order of
# lines is free; missing tuples mean amplitude 0.


def read_amplitude_table(lines, n: int, d: int) -> np.ndarray:
    """Parse a table (iterable of lines, or a path) into d^n amplitudes."""
    if isinstance(lines, (str, os.PathLike)):
        with open(lines, encoding="utf-8") as fh:
            lines = fh.readlines()
    amps = np.zeros(d ** n, dtype=np.complex128)
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != n + 2:
            raise ValueError(f"line {lineno}: expected {n} digits + re + im, got {len(parts)} fields")
        try:
            digits = [int(p) for p in parts[:n]]
            re, im = float(parts[n]), float(parts[n + 1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if any(not 0 <= x < d for x in digits):
            raise ValueError(f"line {lineno}: digit out of range for d={d}")
        digits.reverse()  # file order is a_{n-1} first; index math wants a_0 first
        idx = sum(x * d ** j for j, x in enumerate(digits))
        amps[idx] = complex(re, im)
    return amps


def write_amplitude_table(amps: np.ndarray, n: int, d: int) -> str:
    """Serialize nonzero amplitudes in the table format (17 significant digits)."""
    out = []
    for idx in range(d ** n):
        val = amps[idx]
        if val == 0:
            continue
        digits = []
        rem = idx
        for _ in range(n):
            digits.append(rem % d)
            rem //= d
        front = " ".join(str(x) for x in reversed(digits))
        out.append(f"{front} {val.real:.17g} {val.imag:.17g}")
    return "\n".join(out) + "\n"
