import logging
import multiprocessing

import psutil

logger = logging.getLogger(__name__)


def default_workers():
    """Available parallelism: logical CPUs usable by this process."""
    try:
        return max(1, len(psutil.Process().cpu_affinity()))
    except (AttributeError, psutil.Error):
        return psutil.cpu_count(logical=True) or 1


def run_tasks(fn, tasks, workers=None):
    """
    Map a picklable top-level function over independent tasks, keeping task order.

    Args:
        fn (callable): Task function.
        tasks (list): Task arguments, one per call.
        workers (int, optional): Process count; None uses default_workers(), 1 runs inline.

    Returns:
        list: Results in task order.
    """
    tasks = list(tasks)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if workers == 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    workers = min(workers, len(tasks))
    logger.info(f"running {len(tasks)} tasks on {workers} processes")
    with multiprocessing.Pool(workers) as pool:
        return pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
