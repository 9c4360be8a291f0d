from hypothesis import given
from hypothesis import strategies as st

from verinfer.algebra import get_profile
from verinfer.rand import Csprng
from verinfer.transcript import Transcript

F = get_profile("main").scalar_field


@given(st.binary(max_size=64), st.binary(max_size=64))
def test_fiat_shamir_is_deterministic(label, msg):
    a, b = Transcript(F, b"d"), Transcript(F, b"d")
    a.absorb(label, msg)
    b.absorb(label, msg)
    assert a.challenge(b"c") == b.challenge(b"c")
    assert 0 <= a.challenge(b"c") < F.modulus


def test_challenges_depend_on_domain_and_history():
    a, b, c = Transcript(F, b"d"), Transcript(F, b"e"), Transcript(F, b"d")
    c.absorb(b"m", b"x")
    assert len({a.challenge(b"c"), b.challenge(b"c"), c.challenge(b"c")}) == 3


def test_successive_challenges_differ():
    t = Transcript(F, b"d")
    xs = t.challenges(b"c", 10)
    assert len(set(xs)) == 10


def test_label_message_boundaries_are_unambiguous():
    a, b = Transcript(F, b"d"), Transcript(F, b"d")
    a.absorb(b"ab", b"c")
    b.absorb(b"a", b"bc")
    assert a.challenge(b"x") != b.challenge(b"x")


def test_interactive_mode_ignores_messages_and_is_seeded():
    a = Transcript.interactive(F, b"d", 5)
    b = Transcript.interactive(F, b"d", 5)
    b.absorb(b"m", b"anything")
    assert a.challenge(b"c") == b.challenge(b"c")
    assert Transcript.interactive(F, b"d", 6).challenge(b"c") != Transcript.interactive(F, b"d", 5).challenge(b"c")


def test_interactive_stream_is_independent_of_prover_coins():
    t = Transcript.interactive(F, b"d", 3)
    assert t.challenge(b"c") != Csprng(3).randbelow(F.modulus)
