"""Search statistics for oracle runs.

Timings only ever reach the log; reports stay free of wall-clock values so
identical runs produce identical output.
"""

import threading
import time
from typing import Dict, List


class SearchMetrics:
    """Collect per-restart statistics of one oracle run."""

    def __init__(self):
        self.restarts: List[Dict] = []
        self._lock = threading.Lock()

    def record_restart(self, index: int, accepted: int, evaluations: int,
                       best_value: float, duration: float):
        """Record the outcome of one restart.

        Args:
            index: Restart index
            accepted: Number of accepted proposals
            evaluations: Number of objective evaluations
            best_value: Best objective value reached by the restart
            duration: Seconds spent
        """
        with self._lock:
            self.restarts.append({
                "index": index,
                "accepted": accepted,
                "evaluations": evaluations,
                "best_value": best_value,
                "duration": duration,
            })

    def total_evaluations(self) -> int:
        return sum(entry["evaluations"] for entry in self.restarts)

    def get_acceptance_rate(self) -> float:
        """Accepted proposals as a percentage of evaluations."""
        evaluations = self.total_evaluations()
        if evaluations == 0:
            return 0.0
        return 100.0 * sum(entry["accepted"] for entry in self.restarts) / evaluations

    def get_summary(self) -> Dict:
        """Get search summary.

        Returns:
            Dictionary with restart count, evaluations, acceptance rate and time
        """
        return {
            "restarts": len(self.restarts),
            "evaluations": self.total_evaluations(),
            "acceptance_rate": round(self.get_acceptance_rate(), 2),
            "seconds": round(sum(entry["duration"] for entry in self.restarts), 3),
        }


class SearchTimer:
    """Context manager timing one restart."""

    def __init__(self):
        self.start_time = None
        self.duration = 0.0

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration = time.perf_counter() - self.start_time
        return False
