"""Worker-count policy shared by the parallel engines."""
import os


def worker_count(requested: int | None = None) -> int:
    """Number of worker threads, capped by ``FSOIRS_THREADS`` when set."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("FSOIRS_THREADS")
    if cap:
        try:
            cap_n = int(cap)
        except ValueError as exc:
            raise ValueError(f"FSOIRS_THREADS must be a positive integer, got {cap!r}") from exc
        if cap_n < 1:
            raise ValueError(f"FSOIRS_THREADS must be a positive integer, got {cap!r}")
        n = min(n, cap_n)
    return max(1, n)
