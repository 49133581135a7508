"""HTTP service exposing top-k next-token candidates of a causal LM.

The wire surface is three endpoints: POST /v1/topk returns the k most
likely next tokens with full-vocabulary softmax probabilities, GET
/v1/vocab lists every token the tokenizer knows, and GET /healthz
answers liveness probes.  Decoding strategy is the client's business;
the server only reports honest probabilities.
"""

from .app import build_app
from .config import ServerConfig
from .engine import Candidate, InvalidRequest, LogitEngine, rank_topk

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "InvalidRequest",
    "LogitEngine",
    "ServerConfig",
    "build_app",
    "rank_topk",
    "__version__",
]
