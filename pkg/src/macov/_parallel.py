"""Worker-count policy shared by the numerical modules."""
import os


def max_workers() -> int:
    """Worker cap from ``MACOV_THREADS`` (default 1: fully sequential)."""
    try:
        n = int(os.environ.get("MACOV_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)
