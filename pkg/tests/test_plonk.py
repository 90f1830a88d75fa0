import numpy as np
import pytest

from zkivf import gadgets as G
from zkivf.exceptions import MalformedProof, UnsatisfiedConstraint
from zkivf.plonk import system
from zkivf.plonk.circuit import Circuit


def _circuit(x=3, y=5, with_challenge=False):
    """Public out = x * y + x, with a private witness chain."""
    cs = Circuit()
    pub = cs.public_input(x * y + x, "out")
    a, b = cs.witness(x), cs.witness(y)
    out = cs.add(cs.mul(a, b), a)
    cs.assert_equal(out, pub)
    G.range_check(cs, a, 8)
    if with_challenge:
        alpha = cs.challenge("alpha")
        G.set_eq(cs, [a, b], [b, a], alpha)
    return cs


@pytest.fixture(scope="module")
def keys():
    return system.setup(_circuit(with_challenge=True))


def test_domain_size_is_power_of_two_with_blinding_room():
    for rows in (1, 5, 100, 3000):
        n = system.domain_size(rows)
        assert n & (n - 1) == 0 and n >= rows + system.BLIND_ROWS


def test_completeness_and_serialization(keys):
    cs = _circuit(with_challenge=True)
    proof = system.prove(keys, cs, seed=1)
    raw = proof.to_bytes()
    assert system.verify(keys.vk, [18], system.Proof.from_bytes(raw))


def test_wrong_public_input_rejected(keys):
    proof = system.prove(keys, _circuit(with_challenge=True), seed=2)
    assert not system.verify(keys.vk, [19], proof)
    assert not system.verify(keys.vk, [18, 1], proof)


def test_proofs_are_randomized(keys):
    a = system.prove(keys, _circuit(with_challenge=True), seed=3).to_bytes()
    b = system.prove(keys, _circuit(with_challenge=True), seed=4).to_bytes()
    assert a != b


def test_other_statement_same_shape(keys):
    cs = _circuit(x=7, y=2, with_challenge=True)
    proof = system.prove(keys, cs, seed=5)
    assert system.verify(keys.vk, [21], proof)


def test_unsatisfied_witness_refused(keys):
    cs = _circuit(with_challenge=True)
    cs.values[cs.publics[0][0]] = 17  # claim a wrong output
    with pytest.raises(UnsatisfiedConstraint):
        system.prove(keys, cs, seed=6)


def test_unchecked_bad_witness_still_cannot_be_proved(keys):
    cs = _circuit(with_challenge=True)
    cs.values[cs.publics[0][0]] = 17
    # the quotient stops being a polynomial, so the prover cannot finish
    with pytest.raises(UnsatisfiedConstraint):
        system.prove(keys, cs, seed=7, check=False)


def test_byte_flips_rejected(keys):
    raw = bytearray(system.prove(keys, _circuit(with_challenge=True), seed=8).to_bytes())
    rng = np.random.default_rng(0)
    for pos in rng.choice(len(raw), size=25, replace=False):
        bad = bytearray(raw)
        bad[pos] ^= 1 << int(rng.integers(8))
        try:
            ok = system.verify(keys.vk, [18], system.Proof.from_bytes(bytes(bad)))
        except MalformedProof:
            ok = False
        assert not ok


def test_truncated_proof_malformed(keys):
    raw = system.prove(keys, _circuit(with_challenge=True), seed=9).to_bytes()
    with pytest.raises(MalformedProof):
        system.Proof.from_bytes(raw[:-5])


def test_structure_digest_tracks_shape():
    a, b = _circuit(), _circuit(x=9, y=1)
    assert a.structure_digest() == b.structure_digest()
    c = _circuit()
    c.assert_bool(c.witness(1))
    assert c.structure_digest() != a.structure_digest()


def test_keys_for_other_circuit_do_not_verify(keys):
    other = system.setup(_circuit())
    proof = system.prove(other, _circuit(), seed=10)
    assert system.verify(other.vk, [18], proof)
    assert not system.verify(keys.vk, [18], proof)
