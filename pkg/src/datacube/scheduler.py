"""In-process task scheduler: one bounded worker pool per resource tag
(cpu, gpu), each consuming a priority queue (lower value first, FIFO on
ties). Provider failures retry a configured number of times; drain()
settles everything and closes the intake.
"""

from __future__ import annotations

import itertools
import queue
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .config import SchedulerConfig
from .errors import ConflictError, ProviderError


class TaskKind(str, Enum):
    SEGMENT = "SEGMENT"
    ANALYZE = "ANALYZE"
    PROFILE = "PROFILE"
    EMBED = "EMBED"
    INDEX = "INDEX"
    DEEP_MATCH = "DEEP_MATCH"
    EXPORT = "EXPORT"


GPU_KINDS = frozenset({TaskKind.PROFILE, TaskKind.DEEP_MATCH})


def tag_for(kind: TaskKind) -> str:
    return "gpu" if kind in GPU_KINDS else "cpu"


@dataclass
class Task:
    kind: TaskKind
    fn: Callable[[], Any]
    priority: int = 0
    resource_tag: str | None = None
    id: str = field(default_factory=lambda: f"tk_{next(_task_counter):08d}")

    def __post_init__(self):
        if self.resource_tag is None:
            self.resource_tag = tag_for(self.kind)


_task_counter = itertools.count(1)


class Ticket:
    """Await/poll handle for a submitted task."""

    def __init__(self, task: Task):
        self.task = task
        self._done = threading.Event()
        self._result: Any = None
        self._error: BaseException | None = None

    def _resolve(self, result: Any = None, error: BaseException | None = None) -> None:
        self._result = result
        self._error = error
        self._done.set()

    @property
    def done(self) -> bool:
        return self._done.is_set()

    @property
    def failed(self) -> bool:
        return self._done.is_set() and self._error is not None

    def wait(self, timeout: float | None = None) -> bool:
        return self._done.wait(timeout)

    def result(self, timeout: float | None = None) -> Any:
        if not self._done.wait(timeout):
            raise TimeoutError(f"task {self.task.id} still pending")
        if self._error is not None:
            raise self._error
        return self._result


@dataclass
class PoolStats:
    capacity: int
    in_flight: int
    queued: int
    completed: int
    failed: int


class _Pool:
    def __init__(self, tag: str, capacity: int, retries: int):
        self.tag = tag
        self.capacity = max(1, capacity)
        self.retries = retries
        self.queue: queue.PriorityQueue = queue.PriorityQueue()
        self.lock = threading.Lock()
        self.in_flight = 0
        self.queued = 0
        self.completed = 0
        self.failed = 0
        self.threads: list[threading.Thread] = []

    def snapshot(self) -> PoolStats:
        with self.lock:
            return PoolStats(
                capacity=self.capacity,
                in_flight=self.in_flight,
                queued=self.queued,
                completed=self.completed,
                failed=self.failed,
            )


_SENTINEL_PRIORITY = (1 << 62, 0)


class Scheduler:
    def __init__(self, config: SchedulerConfig | None = None, autostart: bool = True):
        config = config or SchedulerConfig()
        self.config = config
        self._pools = {
            "cpu": _Pool("cpu", config.cpu_capacity, config.provider_retries),
            "gpu": _Pool("gpu", config.gpu_capacity, config.provider_retries),
        }
        self._seq = itertools.count()
        self._outstanding = 0
        self._settle = threading.Condition()
        self._draining = False
        self._started = False
        if autostart:
            self.start()

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for pool in self._pools.values():
            for i in range(pool.capacity):
                thread = threading.Thread(
                    target=self._worker, args=(pool,), name=f"{pool.tag}-worker-{i}", daemon=True
                )
                thread.start()
                pool.threads.append(thread)

    def submit(
        self,
        task: Task,
        on_done: Callable[[Ticket], None] | None = None,
    ) -> Ticket:
        with self._settle:
            if self._draining:
                raise ConflictError("scheduler is draining; submissions rejected")
            self._outstanding += 1
        pool = self._pools[task.resource_tag]
        ticket = Ticket(task)
        with pool.lock:
            pool.queued += 1
        pool.queue.put(((task.priority, next(self._seq)), task, ticket, 0, on_done))
        return ticket

    def _worker(self, pool: _Pool) -> None:
        while True:
            item = pool.queue.get()
            if item[0] == _SENTINEL_PRIORITY:
                return
            _, task, ticket, attempt, on_done = item
            with pool.lock:
                pool.queued -= 1
                pool.in_flight += 1
            try:
                result = task.fn()
            except ProviderError as exc:
                with pool.lock:
                    pool.in_flight -= 1
                if attempt < pool.retries:
                    with pool.lock:
                        pool.queued += 1
                    pool.queue.put(
                        ((task.priority, next(self._seq)), task, ticket, attempt + 1, on_done)
                    )
                    continue
                self._finish(pool, ticket, error=exc, on_done=on_done)
            except BaseException as exc:  # noqa: BLE001 - worker must survive task bugs
                with pool.lock:
                    pool.in_flight -= 1
                self._finish(pool, ticket, error=exc, on_done=on_done)
            else:
                with pool.lock:
                    pool.in_flight -= 1
                self._finish(pool, ticket, result=result, on_done=on_done)

    def _finish(self, pool, ticket, result=None, error=None, on_done=None):
        with pool.lock:
            if error is None:
                pool.completed += 1
            else:
                pool.failed += 1
        ticket._resolve(result=result, error=error)
        if on_done is not None:
            try:
                on_done(ticket)
            except Exception:  # noqa: BLE001 - callbacks must not kill workers
                pass
        with self._settle:
            self._outstanding -= 1
            self._settle.notify_all()

    def drain(self, timeout: float | None = None) -> bool:
        """Settle all queued and running tasks, then stop accepting work."""
        if not self._started:
            self.start()
        with self._settle:
            self._draining = True
            settled = self._settle.wait_for(lambda: self._outstanding == 0, timeout)
        if not settled:
            return False
        for pool in self._pools.values():
            for _ in pool.threads:
                pool.queue.put((_SENTINEL_PRIORITY, None, None, 0, None))
        for pool in self._pools.values():
            for thread in pool.threads:
                thread.join(timeout=5.0)
        return True

    def wait_idle(self, timeout: float | None = None) -> bool:
        """Block until nothing is queued or running (intake stays open)."""
        with self._settle:
            return self._settle.wait_for(lambda: self._outstanding == 0, timeout)

    def stats(self) -> dict[str, PoolStats]:
        return {tag: pool.snapshot() for tag, pool in self._pools.items()}
