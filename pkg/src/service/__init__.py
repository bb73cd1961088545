from .client import RemoteProver, VerifierClient, audit_session, check_no_feedback, run_audit
from .pairstore import PairStore, load_pair_store, precompute_pairs, save_pair_store
from .server import ProverServer, ServerState, ServerThread, parse_fault, serve
from .storage import BlocksFile, encode_file, load_blocks_file, save_blocks_file
