import os
from pathlib import Path

from dotenv import find_dotenv, load_dotenv

env_path = find_dotenv(usecwd=True)
if env_path:
    load_dotenv(env_path)

DEFAULT_OUTPUT_DIR = "./data/output"
OUTPUT_DIR = Path(os.getenv("LZS_OUTPUT_DIR", DEFAULT_OUTPUT_DIR))
LOG_LEVEL = os.getenv("LZS_LOG_LEVEL", "INFO").upper()


def default_workers() -> int:
    raw = os.getenv("LZS_WORKERS")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value > 0:
            return value
    return os.cpu_count() or 1
