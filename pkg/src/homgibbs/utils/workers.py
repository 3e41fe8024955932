import threading

from tqdm import tqdm


def run_indexed(func, n_tasks, threads=1, progress=False, desc=None):
    """
    用 threads 个工作线程执行 func(0..n_tasks-1)，结果按任务编号排列。
    结果与线程数无关；任一任务抛出的异常会在全部线程结束后重新抛出。
    """
    results = [None] * n_tasks
    errors = []
    lock = threading.Lock()
    next_task = [0]
    bar = tqdm(total=n_tasks, desc=desc, disable=not progress, leave=False)

    def worker():
        while True:
            with lock:
                if next_task[0] >= n_tasks or errors:
                    return
                k = next_task[0]
                next_task[0] += 1
            try:
                value = func(k)
            except Exception as e:
                with lock:
                    errors.append(e)
                return
            with lock:
                results[k] = value
                bar.update(1)

    threads = max(1, min(int(threads), n_tasks)) if n_tasks else 1
    if threads == 1:
        worker()
    else:
        pool = [threading.Thread(target=worker, daemon=True) for _ in range(threads)]
        for t in pool:
            t.start()
        for t in pool:
            t.join()
    bar.close()
    if errors:
        raise errors[0]
    return results
