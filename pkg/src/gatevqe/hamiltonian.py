"""Diagonal Ising Hamiltonians for graph coloring.

A Hamiltonian is a constant plus real-weighted products of Pauli Z operators.
Each product is stored as a bitmask of the qubits it touches, and since
``Z_q^2 = 1`` multiplying two monomials is an XOR of their masks. Nothing is
ever materialized as a matrix.

Bit/spin convention, used everywhere in the package: a measured bit ``b``
carries spin ``z = 2b - 1`` and the QUBO variable is ``x = b``. So ``Z_q`` is
``-1`` on bit 0 and ``+1`` on bit 1, and ``x = (z + 1) / 2``.

Bitstrings come in three forms:

* ``int``: the basis index, bit ``q`` of the integer is qubit ``q``;
* ``str``: text such as ``"0110"`` with qubit 0 as the RIGHTMOST character
  (the histogram format);
* a sequence of 0/1 values indexed by qubit, ``bits[q]``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError
from .qap import QuboProblem, _QuboBuilder
from .schedule import ConflictGraph

INVALID = -1

Poly = dict  # mask -> coeff


def _mono(q: int, sign: float = 1.0) -> Poly:
    """``1 + sign * Z_q``."""
    return {0: 1.0, 1 << q: float(sign)}


def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = ma ^ mb
            out[m] = out.get(m, 0.0) + ca * cb
    return out


def poly_add(a: Poly, b: Poly, scale: float = 1.0) -> Poly:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, 0.0) + scale * c
    return out


def bits_to_index(bits, n_qubits: int) -> int:
    """Normalize any accepted bitstring form to a basis index."""
    if isinstance(bits, (int, np.integer)):
        idx = int(bits)
        if not (0 <= idx < (1 << n_qubits)):
            raise InputError(f"basis index {idx} out of range for {n_qubits} qubits")
        return idx
    if isinstance(bits, str):
        if len(bits) != n_qubits or set(bits) - {"0", "1"}:
            raise InputError(f"bitstring {bits!r} does not have {n_qubits} binary digits")
        return int(bits, 2) if bits else 0
    seq = list(bits)
    if len(seq) != n_qubits:
        raise InputError(f"got {len(seq)} bits for {n_qubits} qubits")
    idx = 0
    for q, b in enumerate(seq):
        if b not in (0, 1, True, False):
            raise InputError(f"bit {q} is {b!r}, not 0/1")
        idx |= int(b) << q
    return idx


def index_to_bitstring(idx: int, n_qubits: int) -> str:
    """Qubit 0 is the rightmost character."""
    return format(idx, f"0{n_qubits}b") if n_qubits else ""


def _parity(x: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(x) & 1).astype(np.int8)


@dataclass(frozen=True, eq=True)
class IsingHamiltonian:
    """``constant + sum(coeff * prod_{q in support} Z_q)``.

    Terms are canonical: unique supports sorted by mask, no zero coefficients,
    the empty support folded into ``constant``.
    """

    n_qubits: int
    terms: tuple[tuple[int, float], ...]
    constant: float = 0.0

    @classmethod
    def from_poly(cls, n_qubits: int, poly: Mapping[int, float], constant: float = 0.0, tol: float = 0.0):
        merged: Poly = {}
        for m, c in poly.items():
            merged[int(m)] = merged.get(int(m), 0.0) + float(c)
        constant = float(constant) + merged.pop(0, 0.0)
        limit = 1 << n_qubits
        terms = []
        for m in sorted(merged):
            if m >= limit:
                raise InputError(f"term support {m:#x} exceeds {n_qubits} qubits")
            if abs(merged[m]) > tol:
                terms.append((m, merged[m]))
        return cls(n_qubits, tuple(terms), constant)

    def __add__(self, other: "IsingHamiltonian") -> "IsingHamiltonian":
        n = max(self.n_qubits, other.n_qubits)
        return IsingHamiltonian.from_poly(n, poly_add(dict(self.terms), dict(other.terms)), self.constant + other.constant)

    def scaled(self, s: float) -> "IsingHamiltonian":
        return IsingHamiltonian.from_poly(self.n_qubits, {m: s * c for m, c in self.terms}, s * self.constant)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def max_locality(self) -> int:
        return max((m.bit_count() for m, _ in self.terms), default=0)

    def energy(self, bits) -> float:
        return eval_energy(self, bits)

    def energies(self, indices: np.ndarray) -> np.ndarray:
        """Energies of a batch of basis indices (same arithmetic order as ``eval_energy``)."""
        idx = np.asarray(indices, dtype=np.int64)
        out = np.full(idx.shape, self.constant, dtype=float)
        inv = ~idx
        for m, c in self.terms:
            sign = 1.0 - 2.0 * _parity(inv & m)
            out += c * sign
        return out

    @cached_property
    def diagonal(self) -> np.ndarray:
        """All ``2**n_qubits`` energies; index bit q is qubit q."""
        return self.energies(np.arange(1 << self.n_qubits, dtype=np.int64))

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "constant": self.constant,
            "terms": [
                {"support": [q for q in range(self.n_qubits) if m >> q & 1], "coeff": c}
                for m, c in self.terms
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "IsingHamiltonian":
        try:
            n = int(data["n_qubits"])
            poly: Poly = {}
            for t in data.get("terms", []):
                m = 0
                for q in t["support"]:
                    q = int(q)
                    if not 0 <= q < n:
                        raise InputError(f"qubit {q} out of range for {n} qubits")
                    m ^= 1 << q
                poly[m] = poly.get(m, 0.0) + float(t["coeff"])
            return cls.from_poly(n, poly, float(data.get("constant", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed Hamiltonian JSON: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def eval_energy(h: IsingHamiltonian, bits) -> float:
    """Energy of one basis state under the ``z = 2b - 1`` convention."""
    x = bits_to_index(bits, h.n_qubits)
    e = h.constant
    for m, c in h.terms:
        sign = -1.0 if (m & ~x).bit_count() & 1 else 1.0
        e += c * sign
    return float(e)


def qubo_to_ising(q: QuboProblem) -> IsingHamiltonian:
    """Substitute ``x_i = (z_i + 1) / 2`` into the QUBO."""
    poly: Poly = {}

    def acc(m, c):
        poly[m] = poly.get(m, 0.0) + c

    n = q.n_vars
    for i in range(n):
        w = q.Q[i, i] + q.g[i]
        if w:
            acc(0, w / 2)
            acc(1 << i, w / 2)
    for i in range(n):
        for j in range(i + 1, n):
            w = q.Q[i, j]
            if w:
                acc(0, w / 4)
                acc(1 << i, w / 4)
                acc(1 << j, w / 4)
                acc((1 << i) | (1 << j), w / 4)
    return IsingHamiltonian.from_poly(n, poly, q.c)


class EncodingKind(str, enum.Enum):
    ONE_HOT = "onehot"
    BINARY = "binary"


@dataclass(frozen=True)
class Encoding:
    """Qubit layout: node ``i``, slot ``l`` lives on qubit ``i * bits_per_node + l``.

    For BINARY the slot ``l = 0`` is the most significant bit of the node's code.
    """

    kind: EncodingKind
    n_nodes: int
    n_colors: int

    def __post_init__(self):
        object.__setattr__(self, "kind", EncodingKind(self.kind))
        if self.n_nodes < 0:
            raise InputError("n_nodes must be >= 0")
        if self.kind is EncodingKind.ONE_HOT and self.n_colors < 1:
            raise InputError("one-hot encoding needs at least 1 color")
        if self.kind is EncodingKind.BINARY and self.n_colors < 2:
            raise InputError("binary encoding needs at least 2 colors")

    @property
    def bits_per_node(self) -> int:
        if self.kind is EncodingKind.ONE_HOT:
            return self.n_colors
        return code_width(self.n_colors)

    @property
    def n_qubits(self) -> int:
        return self.n_nodes * self.bits_per_node

    def qubit(self, node: int, slot: int) -> int:
        return node * self.bits_per_node + slot


def code_width(k: int) -> int:
    """``ceil(log2 k)`` for k >= 2."""
    return max(1, math.ceil(math.log2(k))) if k >= 2 else 1


@dataclass(frozen=True)
class DecodedColoring:
    color_of: tuple[int, ...]
    valid: bool

    def as_dict(self) -> dict:
        return {"colors": list(self.color_of), "valid": self.valid}


def default_onehot_penalty(graph: ConflictGraph, weights: Mapping | None = None) -> float:
    """``1 + total edge weight``: dropping or doubling a color never pays off."""
    if weights is None:
        return 1.0 + len(graph.edges)
    return 1.0 + sum(abs(_edge_weight(weights, e)) for e in graph.edges)


def _edge_weight(weights: Mapping | None, e: tuple[int, int]) -> float:
    if weights is None:
        return 1.0
    i, j = e
    if (i, j) in weights:
        return float(weights[(i, j)])
    if (j, i) in weights:
        return float(weights[(j, i)])
    return 1.0


def onehot_coloring_qubo(graph: ConflictGraph, k: int, penalty: float, weights: Mapping | None = None) -> QuboProblem:
    if k < 1:
        raise InputError(f"need at least one color, got k={k}")
    if not penalty > 0:
        raise InputError(f"penalty must be positive, got {penalty}")
    b = _QuboBuilder(graph.n * k)
    for e in graph.sorted_edges():
        w = _edge_weight(weights, e)
        i, j = e
        for c in range(k):
            b.add(i * k + c, j * k + c, w)
    for i in range(graph.n):
        b.one_hot_penalty([i * k + c for c in range(k)], penalty)
    return b.build(penalty)


def onehot_coloring_hamiltonian(
    graph: ConflictGraph, k: int, penalty: float | None = None, weights: Mapping | None = None
) -> IsingHamiltonian:
    """Standard n*k-qubit coloring Hamiltonian.

    QUBO ``sum_edges w_e sum_c x_ic x_jc + penalty * sum_i (1 - sum_c x_ic)^2``
    mapped through :func:`qubo_to_ising`.
    """
    if penalty is None:
        penalty = default_onehot_penalty(graph, weights)
    return qubo_to_ising(onehot_coloring_qubo(graph, k, penalty, weights))


def default_binary_penalty(k: int) -> float:
    return float(4 ** code_width(k))


def binary_edge_poly(enc: Encoding, i: int, j: int) -> Poly:
    """``sum_a prod_l (1 + (-1)^a_l Z_il)(1 + (-1)^a_l Z_jl)``.

    Evaluates to ``4**m`` when both nodes carry the same code, else 0.
    """
    m = enc.bits_per_node
    total: Poly = {}
    for a in range(1 << m):
        term: Poly = {0: 1.0}
        for l in range(m):
            s = -1.0 if (a >> (m - 1 - l)) & 1 else 1.0
            term = poly_mul(term, _mono(enc.qubit(i, l), s))
            term = poly_mul(term, _mono(enc.qubit(j, l), s))
        total = poly_add(total, term)
    return total


def code_indicator_poly(enc: Encoding, node: int, code: int) -> Poly:
    """``prod_l (1 + s_l Z_{node,l})``: equals ``2**m`` iff the node's code is ``code``.

    ``s_l = +1`` where the code bit is 1 (spin +1) and ``-1`` where it is 0.
    """
    m = enc.bits_per_node
    term: Poly = {0: 1.0}
    for l in range(m):
        bit = (code >> (m - 1 - l)) & 1
        term = poly_mul(term, _mono(enc.qubit(node, l), 1.0 if bit else -1.0))
    return term


def binary_coloring_hamiltonian(graph: ConflictGraph, k: int, penalty: float | None = None) -> IsingHamiltonian:
    """Space-efficient n*ceil(log2 k)-qubit coloring Hamiltonian.

    Each edge contributes ``4**m`` when its endpoints share a code. When k is
    not a power of two, every unused code ``v`` in ``[k, 2**m)`` is penalized
    per node with ``penalty * prod_l (1 + s_l Z_l)``, costing
    ``penalty * 2**m`` on a node that carries it.
    """
    if k < 2:
        raise InputError(f"binary encoding needs k >= 2, got k={k}")
    enc = Encoding(EncodingKind.BINARY, graph.n, k)
    m = enc.bits_per_node
    if penalty is None:
        penalty = default_binary_penalty(k)
    poly: Poly = {}
    for i, j in graph.sorted_edges():
        poly = poly_add(poly, binary_edge_poly(enc, i, j))
    for v in range(k, 1 << m):
        for i in range(graph.n):
            poly = poly_add(poly, code_indicator_poly(enc, i, v), penalty)
    return IsingHamiltonian.from_poly(enc.n_qubits, poly)


def build_hamiltonian(graph: ConflictGraph, enc: Encoding, penalty: float | None = None) -> IsingHamiltonian:
    if enc.n_nodes != graph.n:
        raise InputError(f"encoding is for {enc.n_nodes} nodes, graph has {graph.n}")
    if enc.kind is EncodingKind.ONE_HOT:
        return onehot_coloring_hamiltonian(graph, enc.n_colors, penalty)
    return binary_coloring_hamiltonian(graph, enc.n_colors, penalty)


def _bit_list(bits, n_qubits: int) -> list[int]:
    idx = bits_to_index(bits, n_qubits)
    return [(idx >> q) & 1 for q in range(n_qubits)]


def decode(bits, enc: Encoding) -> DecodedColoring:
    """Read a gate (color) per node from a measured bitstring."""
    b = _bit_list(bits, enc.n_qubits)
    w = enc.bits_per_node
    colors = []
    for i in range(enc.n_nodes):
        block = b[i * w:(i + 1) * w]
        if enc.kind is EncodingKind.ONE_HOT:
            colors.append(block.index(1) if sum(block) == 1 else INVALID)
        else:
            code = 0
            for bit in block:
                code = (code << 1) | bit
            colors.append(code if code < enc.n_colors else INVALID)
    return DecodedColoring(tuple(colors), all(c != INVALID for c in colors))


def encode(colors: Sequence[int], enc: Encoding) -> int:
    """Basis index whose decoding is ``colors``."""
    if len(colors) != enc.n_nodes:
        raise InputError(f"need {enc.n_nodes} colors, got {len(colors)}")
    w = enc.bits_per_node
    idx = 0
    for i, c in enumerate(colors):
        if not 0 <= c < enc.n_colors:
            raise InputError(f"color {c} out of range [0, {enc.n_colors})")
        if enc.kind is EncodingKind.ONE_HOT:
            idx |= 1 << enc.qubit(i, c)
        else:
            for l in range(w):
                if (c >> (w - 1 - l)) & 1:
                    idx |= 1 << enc.qubit(i, l)
    return idx


def resource_report(enc: Encoding, h: IsingHamiltonian | None = None) -> dict:
    """Qubit count from the encoding; term count and locality from ``h`` if given."""
    out = {"encoding": enc.kind.value, "n": enc.n_nodes, "k": enc.n_colors, "qubits": enc.n_qubits}
    if h is not None:
        if h.n_qubits != enc.n_qubits:
            raise InputError("Hamiltonian does not match the encoding's qubit count")
        out["terms"] = h.n_terms
        out["max_locality"] = h.max_locality
    else:
        out["terms"] = None
        out["max_locality"] = None
    return out
