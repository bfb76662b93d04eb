"""Order-preserving map used by the scans."""
from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, jobs=1):
    """``[fn(x) for x in items]``, optionally on a thread pool; result order is input order."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
        return list(ex.map(fn, items))
