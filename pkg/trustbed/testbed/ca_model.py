"""Trustee-side trust: each provider keeps weighted connections to the consumers that
asked it for work and decides on its own whether it is fit to take a task.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from statistics import fmean
from typing import AbstractSet, Dict, Iterator, List, NamedTuple, Optional

from .population import PerformanceLevel

logger = logging.getLogger(__name__)

SERVICE_CATEGORY = 'service'
INITIAL_WEIGHT = 0.5


@dataclass(frozen=True)
class CAParams:
    threshold: float = 0.5
    alpha: float = 0.1
    beta: float = 0.1
    # Tasks a provider may attempt per request wave; 0 lets it work through its whole list.
    wave_capacity: int = 0


@dataclass(frozen=True, order=True)
class Task:
    requirement: PerformanceLevel
    category: str = SERVICE_CATEGORY


@dataclass(frozen=True)
class RequestMessage:
    trustor: int
    task: Task
    round: int


class Connection(NamedTuple):
    trustee: int
    trustor: int
    weight: float
    task: Task


def min_successful_performance(task: Task) -> float:
    return task.requirement.utility


def is_success(task: Task, performance: float) -> bool:
    return performance >= min_successful_performance(task)


def update_weight(weight: float, success: bool, params: CAParams) -> float:
    if success:
        return min(1.0, weight + params.alpha * (1.0 - weight))
    return max(0.0, weight - params.beta * (1.0 - weight))


class Trustee:
    """Connection store and pending request list of a single provider."""

    def __init__(self, provider_id: int, params: CAParams = CAParams()) -> None:
        self.provider_id = provider_id
        self.params = params
        self.pending: List[RequestMessage] = []
        self._weights: Dict[int, Dict[Task, float]] = {}

    def weight(self, trustor: int, task: Task) -> Optional[float]:
        return self._weights.get(trustor, {}).get(task)

    def set_weight(self, trustor: int, task: Task, weight: float) -> None:
        self._weights.setdefault(trustor, {})[task] = min(max(weight, 0.0), 1.0)

    def connections(self) -> Iterator[Connection]:
        for trustor, tasks in self._weights.items():
            for task, weight in tasks.items():
                yield Connection(self.provider_id, trustor, weight, task)

    def trustors(self) -> List[int]:
        return list(self._weights)

    def init_weight(self, trustor: int, task: Task) -> float:
        """Average weight of the same task held with other trustors, or 0.5 without any."""
        others = [
            tasks[task]
            for other, tasks in self._weights.items()
            if other != trustor and task in tasks
        ]
        return fmean(others) if others else INITIAL_WEIGHT

    def handle_request(self, message: RequestMessage) -> None:
        self.pending.append(message)
        if self.weight(message.trustor, message.task) is None:
            self.set_weight(message.trustor, message.task, self.init_weight(message.trustor, message.task))

    def select_best_request(self) -> Optional[RequestMessage]:
        if not self.pending:
            return None
        # Highest weight wins; ties go to the earliest round, then the lowest trustor id.
        return max(
            self.pending,
            key=lambda m: (self.weight(m.trustor, m.task), -m.round, -m.trustor),
        )

    def attempt_task(self, message: RequestMessage, done: bool = False) -> bool:
        """Decide whether to perform ``message``'s task; the message leaves the list either way."""
        self.pending.remove(message)
        if done:
            return False
        weight = self.weight(message.trustor, message.task)
        return weight is not None and weight >= self.params.threshold

    def next_task(self, done: AbstractSet[int] = frozenset()) -> Optional[RequestMessage]:
        """Work through the pending list until a task is attempted or nothing is left.

        Requests from trustors in ``done`` were served elsewhere and are dropped first.
        """
        if done:
            self.pending = [m for m in self.pending if m.trustor not in done]
        while self.pending:
            message = self.select_best_request()
            if self.attempt_task(message):
                return message
            # The declined request had the highest weight, so nothing left can pass.
            self.pending.clear()
        return None

    def complete_task(self, message: RequestMessage, performance: float) -> bool:
        """Apply the outcome of an executed task and return whether it succeeded."""
        success = is_success(message.task, performance)
        current = self.weight(message.trustor, message.task)
        if current is None:
            current = self.init_weight(message.trustor, message.task)
        self.set_weight(message.trustor, message.task, update_weight(current, success, self.params))
        self.promote_harder_tasks(message.trustor, message.task, performance)
        return success

    def promote_harder_tasks(self, trustor: int, executed: Task, performance: float) -> None:
        tasks = self._weights.get(trustor)
        if not tasks:
            return
        threshold = self.params.threshold
        for task, weight in tasks.items():
            if (
                weight < threshold
                and task.category == executed.category
                and task.requirement > executed.requirement
                and performance >= min_successful_performance(task)
            ):
                tasks[task] = threshold
                logger.debug(
                    'provider %s promoted %s for consumer %s', self.provider_id, task.requirement.name, trustor
                )

    def forget_trustor(self, trustor: int) -> None:
        self._weights.pop(trustor, None)
        self.pending = [m for m in self.pending if m.trustor != trustor]

    def expire_pending(self) -> None:
        self.pending.clear()
