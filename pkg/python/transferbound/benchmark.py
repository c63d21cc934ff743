import contextlib
import time
from typing import Callable


@contextlib.contextmanager
def timeit(message: str, stream: Callable[[str], None], decimals: int = 2):
    """
    Measure the wall-clock duration of a block in seconds and report it.

    The duration is reported even if the block raises.

    Example::

        with timeit("estimation took ", LOGGER.info):
            harness.cmd_estimate(...)

    Args:
        message: prefix of the reported message, the duration is appended to it
        stream: callable receiving the final message
        decimals: number of decimals of the reported duration
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        duration = time.perf_counter() - start
        stream(f"{message}{duration:.{decimals}f}s")
