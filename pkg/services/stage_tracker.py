"""
Stage timing and size accounting for equivalence checks
"""
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from datetime import datetime
from typing import Any, Dict, Iterator, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class StageRecord:
    timestamp: str
    stage: str
    duration: float
    size: Optional[int] = None
    function: Optional[str] = None


class StageTracker:
    def __init__(self, function: Optional[str] = None, log_file: Optional[str] = None):
        self.function = function
        self.log_file = log_file
        self.records: List[StageRecord] = []
        self.sizes: Dict[str, int] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Time the enclosed block under `name`. Repeated stages accumulate."""
        started = time.perf_counter()
        try:
            yield
        finally:
            duration = time.perf_counter() - started
            record = StageRecord(
                timestamp=datetime.now().isoformat(),
                stage=name,
                duration=duration,
                size=self.sizes.get(name),
                function=self.function,
            )
            self.records.append(record)
            logger.debug("stage %s took %.6fs", name, duration)
            if self.log_file:
                self._append_to_log(record)

    def record_size(self, name: str, size: int) -> None:
        self.sizes[name] = size
        logger.debug("size %s = %d", name, size)

    def _append_to_log(self, record: StageRecord) -> None:
        """Append the record as one JSON line"""
        line = json.dumps(asdict(record), ensure_ascii=False)
        try:
            with open(self.log_file, 'a', encoding='utf-8') as f:
                f.write(line + '\n')
        except OSError as e:
            logger.warning("could not write stage log %s: %s", self.log_file, e)

    def timings(self) -> Dict[str, float]:
        totals: Dict[str, float] = {}
        for record in self.records:
            totals[record.stage] = totals.get(record.stage, 0.0) + record.duration
        return totals

    def summary(self) -> Dict[str, Any]:
        """Totals per stage, the recorded sizes and the overall wall time"""
        timings = self.timings()
        return {
            'function': self.function,
            'stages': len(self.records),
            'total_time': round(sum(timings.values()), 6),
            'timings': {k: round(v, 6) for k, v in timings.items()},
            'state_counts': dict(self.sizes),
        }
