from concurrent.futures import ProcessPoolExecutor
import logging
from typing import Callable
from typing import Sequence
from typing import TypeVar

import epcritical.utilities.config as cfg

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


# ============================================
#                map_ordered
# ============================================
def map_ordered(
    fn: Callable[[T], R], items: Sequence[T], workers: int | None = None
) -> list[R]:
    """
    Applies `fn` to every item, in worker processes when more than one
    worker is allowed. Results keep the order of `items`.

    Parameters
    ----------
    fn : Callable
        Must be picklable (a module-level function or a `partial` of
        one) when running in parallel.

    items : Sequence
        Inputs.

    workers : int, optional
        Worker cap. Defaults to the `EP_CRITICAL_THREADS` environment
        variable, or serial execution when unset.
    """
    nWorkers = workers if workers is not None else cfg.max_workers()
    nWorkers = min(max(1, nWorkers), max(1, len(items)))

    if nWorkers == 1:
        return [fn(item) for item in items]

    logger.info("fanning %d items out to %d workers", len(items), nWorkers)
    with ProcessPoolExecutor(max_workers=nWorkers) as pool:
        return list(pool.map(fn, items))
