"""Attestation signatures, Diffie-Hellman session keys and AEAD channels."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ..algebra import CurveProfile, GroupPoint
from ..encoding import Reader, Writer
from ..errors import AttestationMissing, AuthFailure, DecodingError, PoisonedRead, ReplayDetected
from ..rand import Csprng

RUNTIME_VERSION = b"verinfer-tee-sim/1"

# 2048-bit MODP group (RFC 3526 group 14); g = 2 generates the subgroup of prime order (p-1)/2
MODP_2048 = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
    "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
    "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9"
    "DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)


@dataclass(frozen=True)
class DhGroup:
    p: int
    g: int
    q: int

    @property
    def width(self) -> int:
        return (self.p.bit_length() + 7) // 8

    def keypair(self, rng: Csprng) -> tuple[int, int]:
        a = rng.randrange(1, self.q)
        return a, pow(self.g, a, self.p)

    def shared(self, secret: int, peer_public: int) -> int:
        if not 1 < peer_public < self.p - 1 or pow(peer_public, self.q, self.p) != 1:
            raise ValueError("peer public value is outside the prime-order subgroup")
        return pow(peer_public, secret, self.p)


MODP_GROUP = DhGroup(MODP_2048, 2, (MODP_2048 - 1) // 2)


def dh_shared_secret(p: int, g: int, a: int, b: int) -> int:
    """g^(ab) mod p computed the way each side does: (g^b)^a."""
    return pow(pow(g, b, p), a, p)


def derive_session_key(shared: int, group: DhGroup, context: bytes) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=32, salt=None, info=b"verinfer/session/" + context).derive(
        shared.to_bytes(group.width, "big")
    )


# ---------------------------------------------------------------------------
# Schnorr signatures over the curve
# ---------------------------------------------------------------------------

SCHNORR_TAG = b"verinfer/schnorr/v1"


def _generator(curve: CurveProfile) -> GroupPoint:
    G = curve.hash_to_point(SCHNORR_TAG, 0)
    curve.precompute([G])
    return G


@dataclass(frozen=True)
class SigningKey:
    curve: CurveProfile
    secret: int = field(repr=False)
    public: GroupPoint

    @classmethod
    def generate(cls, curve: CurveProfile, rng: Csprng) -> SigningKey:
        sk = rng.randrange(1, curve.order)
        return cls(curve, sk, curve.scalar_mul(_generator(curve), sk))


def _challenge(curve: CurveProfile, R: GroupPoint, pk: GroupPoint, msg: bytes) -> int:
    h = hashlib.sha512(SCHNORR_TAG + R.to_bytes() + pk.to_bytes() + msg).digest()
    return int.from_bytes(h, "big") % curve.order


def sign(key: SigningKey, msg: bytes) -> bytes:
    curve = key.curve
    n = curve.order
    # deterministic nonce from the secret and the message
    k = int.from_bytes(hashlib.sha512(b"nonce" + key.secret.to_bytes(64, "big") + msg).digest(), "big") % n or 1
    R = curve.scalar_mul(_generator(curve), k)
    s = (k + _challenge(curve, R, key.public, msg) * key.secret) % n
    return Writer().point(R).scalar(curve.scalar_field, s).getvalue()


def verify_signature(curve: CurveProfile, public: GroupPoint, msg: bytes, signature: bytes) -> bool:
    try:
        r = Reader(signature)
        R = r.point(curve)
        s = r.scalar(curve.scalar_field)
        r.done()
    except DecodingError:
        return False
    G = _generator(curve)
    e = _challenge(curve, R, public, msg)
    return curve.scalar_mul(G, s) == R + curve.scalar_mul(public, e)


# ---------------------------------------------------------------------------
# attestation
# ---------------------------------------------------------------------------


def measure(shard_bytes: bytes, runtime: bytes = RUNTIME_VERSION) -> bytes:
    return hashlib.sha256(shard_bytes + b"\x00" + runtime).digest()


@dataclass(frozen=True)
class AttestationEvidence:
    measurement: bytes
    claims: bytes
    signature: bytes


def attest(node_id: str, key: SigningKey, shard_bytes: bytes, dh_public: int | None = None) -> AttestationEvidence:
    """Sign claims binding the node, the measurement and (optionally) its DH share."""
    m = measure(shard_bytes)
    claims = json.dumps(
        {"node": node_id, "measurement": m.hex(), "runtime": RUNTIME_VERSION.decode(), "dh": None if dh_public is None else f"{dh_public:x}"},
        sort_keys=True,
        separators=(",", ":"),
    ).encode()
    return AttestationEvidence(m, claims, sign(key, claims))


def verify_attestation(
    curve: CurveProfile, public: GroupPoint, evidence: AttestationEvidence, expected_measurement: bytes | None = None
) -> bool:
    try:
        claims = json.loads(evidence.claims)
    except ValueError:
        return False
    if claims.get("measurement") != evidence.measurement.hex():
        return False
    if expected_measurement is not None and evidence.measurement != expected_measurement:
        return False
    return verify_signature(curve, public, evidence.claims, evidence.signature)


# ---------------------------------------------------------------------------
# buffers that can be destroyed
# ---------------------------------------------------------------------------


class SecureBuffer:
    """Plaintext held inside a simulated enclave; ``zeroize`` makes later reads fail."""

    def __init__(self, data: bytes, tag: str = "plaintext"):
        self._data = bytearray(data)
        self.tag = tag
        self.poisoned = False

    def read(self) -> bytes:
        if self.poisoned:
            raise PoisonedRead(f"read of destroyed {self.tag} buffer")
        return bytes(self._data)

    def zeroize(self) -> None:
        for i in range(len(self._data)):
            self._data[i] = 0
        self.poisoned = True

    def raw(self) -> bytes:
        """Memory contents regardless of state (what a forensic read would see)."""
        return bytes(self._data)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------


class ChannelEnd:
    """One endpoint of an AES-GCM channel with counter nonces.

    Nonce = 4-byte direction tag || 8-byte counter; frames carry the counter in
    clear.  A frame whose counter is below the next expected one is a replay.
    """

    def __init__(self, local: str, peer: str, key: bytes):
        self.local = local
        self.peer = peer
        self._key = SecureBuffer(key, "session-key")
        self.send_counter = 0
        self.recv_counter = 0

    @staticmethod
    def _direction(src: str, dst: str) -> bytes:
        return hashlib.sha256(f"{src}->{dst}".encode()).digest()[:4]

    def _aad(self, src: str, dst: str) -> bytes:
        return f"verinfer/channel/{src}/{dst}".encode()

    def send(self, payload: bytes) -> bytes:
        ctr = self.send_counter
        self.send_counter += 1
        nonce = self._direction(self.local, self.peer) + ctr.to_bytes(8, "big")
        ct = AESGCM(self._key.read()).encrypt(nonce, payload, self._aad(self.local, self.peer))
        return ctr.to_bytes(8, "big") + ct

    def recv(self, frame: bytes) -> bytes:
        if len(frame) < 8 + 16:
            raise AuthFailure("frame too short")
        ctr = int.from_bytes(frame[:8], "big")
        if ctr < self.recv_counter:
            raise ReplayDetected(f"counter {ctr} already used on {self.peer}->{self.local}")
        nonce = self._direction(self.peer, self.local) + frame[:8]
        try:
            pt = AESGCM(self._key.read()).decrypt(nonce, frame[8:], self._aad(self.peer, self.local))
        except InvalidTag:
            raise AuthFailure(f"authentication failed on {self.peer}->{self.local}") from None
        self.recv_counter = ctr + 1
        return pt

    def key_fingerprint(self) -> str:
        return hashlib.sha256(self._key.read()).hexdigest()[:16]

    def destroy(self) -> None:
        self._key.zeroize()

    @property
    def key_buffer(self) -> SecureBuffer:
        return self._key


@dataclass
class DhParty:
    node_id: str
    secret: int = field(repr=False)
    public: int
    attested: bool = False


def establish_channel(a: DhParty, b: DhParty, group: DhGroup = MODP_GROUP) -> tuple[ChannelEnd, ChannelEnd]:
    """Both sides compute g^(ab) and derive the same session key."""
    if not (a.attested and b.attested):
        missing = a.node_id if not a.attested else b.node_id
        raise AttestationMissing(f"{missing} has not been attested")
    context = "|".join(sorted((a.node_id, b.node_id))).encode()
    k_a = derive_session_key(group.shared(a.secret, b.public), group, context)
    k_b = derive_session_key(group.shared(b.secret, a.public), group, context)
    return ChannelEnd(a.node_id, b.node_id, k_a), ChannelEnd(b.node_id, a.node_id, k_b)
