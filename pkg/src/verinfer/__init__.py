"""Verifiable decentralized inference: zero-knowledge layer proofs, consensus checks
and a simulated TEE network for small quantized neural networks."""

__version__ = "0.1.0"
