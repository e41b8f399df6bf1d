"""Decentralized t-of-n voting over a simulated UTXO ledger.

Dealerless threshold keys, a decryption-mixnet shuffle of encrypted votes and
a commitment / claim / win / refund transaction choreography, run end to end
by a deterministic simulator.
"""

from .group import CRYPTO, TEST, TINY, GroupParams, KeyPair, get_group, keygen
from .sim import ScenarioConfig, Simulation, run_scenario

__all__ = [
    "CRYPTO",
    "TEST",
    "TINY",
    "GroupParams",
    "KeyPair",
    "ScenarioConfig",
    "Simulation",
    "get_group",
    "keygen",
    "run_scenario",
]
__version__ = "0.1.0"
