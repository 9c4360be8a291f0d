"""In-process simulation of the decentralized network layer."""

from .crypto import (
    MODP_GROUP,
    AttestationEvidence,
    ChannelEnd,
    DhGroup,
    DhParty,
    SecureBuffer,
    SigningKey,
    attest,
    derive_session_key,
    dh_shared_secret,
    establish_channel,
    measure,
    sign,
    verify_attestation,
    verify_signature,
)
from .schedule import CPU, GPU, EventQueue, NodeSlot, schedule_shards, shard_cost, ticks
from .session import (
    ORCHESTRATOR,
    NodeDescriptor,
    Scenario,
    SessionAborted,
    SessionConfig,
    SessionResult,
    dependent_pairs,
    routing_violations,
    run_scenario,
    run_session,
)
