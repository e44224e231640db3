import os
import sys
import tempfile

import pyrecall

TRACE = os.path.join(os.path.dirname(__file__), "..", "tests", "pyrecall", "data", "a2_workday.jsonl")

if __name__ == "__main__":
    provider = pyrecall.HashingEmbeddingProvider(64)
    with tempfile.TemporaryDirectory() as tmp:
        bank_path = os.path.join(tmp, "bank")
        pyrecall.cmd_replay(TRACE, bank_path, pyrecall.RecallConfig(), provider)
        bank = pyrecall.load_bank(bank_path, provider)
        bank.check_consistency()
        reloaded = pyrecall.load_bank(bank_path, provider)
        memories_differ = bank.memories() != reloaded.memories()
        snapshot_differs = bank.hnsw.snapshot() != reloaded.hnsw.snapshot()
    sys.exit(int(memories_differ or snapshot_differs))
