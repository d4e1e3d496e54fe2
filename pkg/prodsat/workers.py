"""共享工作线程池。
进程内只保留一个按线程上限缓存的 ThreadPoolExecutor；
线程上限来自环境变量 PRODSAT_THREADS，可由 set_thread_limit 覆盖。
"""
from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "PRODSAT_THREADS"

# 线程安全锁
_lock = threading.Lock()

# 线程数 -> 线程池
EXECUTORS: Dict[int, ThreadPoolExecutor] = {}

# 显式设置的线程上限；None 表示读取环境变量
_THREAD_LIMIT: Optional[int] = None


def get_thread_limit() -> int:
    """当前线程上限；未设置且环境变量缺失或非法时为 1（顺序执行）。"""
    if _THREAD_LIMIT is not None:
        return _THREAD_LIMIT
    raw = os.environ.get(ENV_THREADS, "")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def set_thread_limit(limit: Optional[int]) -> None:
    """显式设置线程上限；传入 None 恢复为读取环境变量。"""
    global _THREAD_LIMIT
    with _lock:
        _THREAD_LIMIT = None if limit is None else max(1, int(limit))


def get_executor() -> Optional[ThreadPoolExecutor]:
    """返回当前上限对应的线程池；上限为 1 时返回 None。"""
    limit = get_thread_limit()
    if limit <= 1:
        return None
    with _lock:
        if limit not in EXECUTORS:
            EXECUTORS[limit] = ThreadPoolExecutor(max_workers=limit, thread_name_prefix="prodsat")
        return EXECUTORS[limit]


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
    """保持输入顺序的 map；线程上限为 1 或只有一个元素时顺序执行。"""
    items = list(items)
    executor = get_executor() if len(items) > 1 else None
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


def shutdown() -> None:
    """关闭所有缓存的线程池。"""
    with _lock:
        for executor in EXECUTORS.values():
            executor.shutdown(wait=True)
        EXECUTORS.clear()
