import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from conftest import all_graphs, proper_colorings
from gatevqe.errors import InputError
from gatevqe.hamiltonian import (
    INVALID,
    Encoding,
    EncodingKind,
    IsingHamiltonian,
    binary_coloring_hamiltonian,
    bits_to_index,
    build_hamiltonian,
    decode,
    default_binary_penalty,
    encode,
    eval_energy,
    index_to_bitstring,
    onehot_coloring_hamiltonian,
    onehot_coloring_qubo,
    qubo_to_ising,
    resource_report,
)
from gatevqe.qap import QuboProblem
from gatevqe.schedule import ConflictGraph

BIN, ONE = EncodingKind.BINARY, EncodingKind.ONE_HOT


def spin_energy(h, idx):
    """Energy from explicit spins z_q = 2 b_q - 1, independent of the mask trick."""
    z = [2 * ((idx >> q) & 1) - 1 for q in range(h.n_qubits)]
    e = h.constant
    for mask, c in h.terms:
        e += c * np.prod([z[q] for q in range(h.n_qubits) if mask >> q & 1])
    return e


def binary_reference(graph, k, colors_or_codes, penalty):
    """Closed form: 4**m per clashing code pair plus penalty * 2**m per disallowed code."""
    m = Encoding(BIN, graph.n, k).bits_per_node
    codes = colors_or_codes
    clashes = sum(codes[i] == codes[j] for i, j in graph.edges)
    bad = sum(c >= k for c in codes)
    return 4**m * clashes + penalty * 2**m * bad


def codes_of(idx, enc):
    m = enc.bits_per_node
    out = []
    for i in range(enc.n_nodes):
        code = 0
        for l in range(m):
            code = (code << 1) | ((idx >> enc.qubit(i, l)) & 1)
        out.append(code)
    return out


def test_constant_only():
    h = qubo_to_ising(QuboProblem(np.zeros((3, 3)), np.zeros(3), 5.0))
    assert h.terms == () and h.constant == 5.0
    assert np.all(h.diagonal == 5.0)


def test_single_z_sign_convention():
    h = IsingHamiltonian(1, ((1, 1.0),))
    assert eval_energy(h, [1]) == 1.0
    assert eval_energy(h, [0]) == -1.0
    assert eval_energy(h, "0") == -1.0


def test_bitstring_forms_agree():
    # qubit 0 is the rightmost character
    assert bits_to_index("001", 3) == 1
    assert bits_to_index([1, 0, 0], 3) == 1
    assert bits_to_index(1, 3) == 1
    assert index_to_bitstring(1, 3) == "001"


@pytest.mark.parametrize("bad", ["012", "01", [0, 2, 1], 8])
def test_bad_bitstrings(bad):
    with pytest.raises(InputError):
        bits_to_index(bad, 3)


def test_single_edge_k2_hand_expansion():
    h = binary_coloring_hamiltonian(ConflictGraph(2, frozenset({(0, 1)})), 2)
    assert h.terms == ((3, 2.0),) and h.constant == 2.0


def test_path3_k2_golden():
    h = binary_coloring_hamiltonian(ConflictGraph(3, frozenset({(0, 1), (1, 2)})), 2)
    assert h.terms == ((3, 2.0), (6, 2.0)) and h.constant == 4.0


def test_triangle_k3_energies(triangle):
    enc = Encoding(BIN, 3, 3)
    h = build_hamiltonian(triangle, enc)
    assert eval_energy(h, encode([0, 1, 2], enc)) == 0
    assert eval_energy(h, encode([0, 0, 1], enc)) == 16


def test_k3_code_three_penalized():
    g = ConflictGraph(1)
    h = binary_coloring_hamiltonian(g, 3)
    # code 3 = bits (1, 1) on qubits 0 and 1
    assert eval_energy(h, 0b11) == default_binary_penalty(3) * 4
    for code in range(3):
        assert eval_energy(h, encode([code], Encoding(BIN, 1, 3))) == 0


def test_penalty_parameter_scales_disallowed_code():
    h = binary_coloring_hamiltonian(ConflictGraph(1), 3, penalty=1.0)
    assert eval_energy(h, 0b11) == 4.0


def test_power_of_two_has_no_code_penalty():
    h = binary_coloring_hamiltonian(ConflictGraph(3), 4)
    assert h.terms == () and h.constant == 0


def test_decode_onehot():
    enc = Encoding(ONE, 1, 3)
    assert decode("010", enc).color_of == (1,) and decode("010", enc).valid
    dec = decode("011", enc)
    assert dec.color_of == (INVALID,) and not dec.valid
    assert not decode("000", enc).valid


def test_decode_binary_k3_code_three_invalid():
    dec = decode("11", Encoding(BIN, 1, 3))
    assert dec.color_of == (INVALID,) and not dec.valid


def test_decode_binary_msb_first():
    enc = Encoding(BIN, 1, 4)
    # slot 0 (qubit 0) is the most significant code bit
    assert decode([1, 0], enc).color_of == (2,)


@pytest.mark.parametrize(
    "kind, n, k, qubits",
    [(ONE, 5, 5, 25), (BIN, 5, 5, 15), (BIN, 24, 8, 72), (ONE, 24, 8, 192), (BIN, 3, 2, 3), (BIN, 4, 3, 8)],
)
def test_qubit_counts(kind, n, k, qubits):
    assert Encoding(kind, n, k).n_qubits == qubits
    assert resource_report(Encoding(kind, n, k))["qubits"] == qubits


def test_binary_needs_two_colors():
    with pytest.raises(InputError):
        Encoding(BIN, 3, 1)


def test_json_round_trip(triangle):
    h = build_hamiltonian(triangle, Encoding(BIN, 3, 3))
    assert IsingHamiltonian.from_json(json.loads(h.dumps())) == h


def test_build_is_canonical(triangle):
    for kind in EncodingKind:
        enc = Encoding(kind, 3, 3)
        a, b = build_hamiltonian(triangle, enc), build_hamiltonian(triangle, enc)
        assert a.terms == b.terms
        masks = [m for m, _ in a.terms]
        assert masks == sorted(set(masks)) and 0 not in masks


@pytest.mark.parametrize("k", [2, 3, 4])
def test_binary_matches_closed_form(k):
    for g in all_graphs(3):
        enc = Encoding(BIN, g.n, k)
        h = build_hamiltonian(g, enc)
        pen = default_binary_penalty(k)
        for idx in range(1 << enc.n_qubits):
            assert h.diagonal[idx] == binary_reference(g, k, codes_of(idx, enc), pen)


def test_onehot_energy_is_qubo_value(triangle):
    q = onehot_coloring_qubo(triangle, 3, 4.0)
    h = onehot_coloring_hamiltonian(triangle, 3, 4.0)
    assert np.allclose(h.diagonal, q.evaluate_all(), atol=1e-12)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_encoding_equivalence_exhaustive(k):
    for g in all_graphs(4):
        enc = Encoding(BIN, g.n, k)
        h = build_hamiltonian(g, enc)
        proper = proper_colorings(g, k)
        zero = np.flatnonzero(h.diagonal == 0)
        assert (len(zero) > 0) == bool(proper)
        assert {decode(int(i), enc).color_of for i in zero} == proper


@pytest.mark.parametrize("k", [2, 3])
def test_onehot_ground_decodings_match_binary(k):
    for g in all_graphs(3):
        ones = Encoding(ONE, g.n, k)
        bins = Encoding(BIN, g.n, k)
        ho, hb = build_hamiltonian(g, ones), build_hamiltonian(g, bins)
        go = np.flatnonzero(ho.diagonal == ho.diagonal.min())
        gb = np.flatnonzero(hb.diagonal == hb.diagonal.min())
        assert {decode(int(i), ones).color_of for i in go} == {decode(int(i), bins).color_of for i in gb}


def test_adding_an_edge_never_lowers_ground_energy():
    for g in all_graphs(4):
        pairs = set(itertools.combinations(range(g.n), 2)) - g.edges
        base = build_hamiltonian(g, Encoding(BIN, g.n, 3)).diagonal.min()
        for e in pairs:
            g2 = ConflictGraph(g.n, g.edges | {e})
            assert build_hamiltonian(g2, Encoding(BIN, g.n, 3)).diagonal.min() >= base


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        hnp.arrays(float, (n, n), elements=st.floats(-10, 10)),
        hnp.arrays(float, (n,), elements=st.floats(-10, 10)),
        st.floats(-10, 10),
    )
))
def test_qubo_ising_spectrum(data):
    M, g, c = data
    q = QuboProblem.from_dense(M, g, c)
    h = qubo_to_ising(q)
    assert np.allclose(h.diagonal, q.evaluate_all(), rtol=0, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.dictionaries(st.integers(1, (1 << n) - 1), st.floats(-5, 5), max_size=8),
        st.floats(-5, 5),
    )
))
def test_vectorized_energy_matches_spins(data):
    n, poly, const = data
    h = IsingHamiltonian.from_poly(n, poly, const)
    for idx in range(1 << n):
        ref = spin_energy(h, idx)
        assert h.diagonal[idx] == pytest.approx(ref, abs=1e-9)
        assert eval_energy(h, idx) == h.diagonal[idx]


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(list(EncodingKind)), st.integers(1, 4), st.integers(2, 6), st.data())
def test_encode_decode_round_trip(kind, n, k, data):
    enc = Encoding(kind, n, k)
    colors = tuple(data.draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n)))
    dec = decode(encode(colors, enc), enc)
    assert dec.valid and dec.color_of == colors
