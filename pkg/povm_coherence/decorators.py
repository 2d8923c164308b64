import functools
import logging
import time


logger = logging.getLogger(__name__)


def measure_time(func):
    """
    A decorator to measure the execution time of a function.

    The elapsed wall time is logged at DEBUG level under the name of the
    decorated function.

    Args:
        func (callable): The function whose execution time will be measured.

    Returns:
        callable: A wrapper function that measures the execution time.
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        result = func(*args, **kwargs)
        execution_time = time.perf_counter() - start_time
        logger.debug(
            "Execution time of %s: %.4f seconds", func.__name__, execution_time
        )
        return result

    return wrapper
