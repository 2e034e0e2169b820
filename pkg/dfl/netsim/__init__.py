"""In-process network: pub/sub topics, request/reply, latency, loss and byte accounting."""

from dfl.netsim.blobstore import BlobStore
from dfl.netsim.ledger import LedgerEntry, LedgerError, TrafficLedger
from dfl.netsim.simulator import Envelope, Simulator, TraceRecord, ms_to_us

__all__ = [
    "BlobStore",
    "Envelope",
    "LedgerEntry",
    "LedgerError",
    "Simulator",
    "TraceRecord",
    "TrafficLedger",
    "ms_to_us",
]
