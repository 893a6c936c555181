import os
import platform
import time
from typing import Dict, Optional

import psutil

JOBS_ENV = 'SWAPBIN_JOBS'


class SystemMonitor:
    def __init__(self):
        self.process = psutil.Process()

    def default_jobs(self, requested: Optional[int] = None) -> int:
        """--jobs, then SWAPBIN_JOBS, then physical cores, then 1."""
        if requested:
            return max(1, int(requested))
        env = os.environ.get(JOBS_ENV)
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                pass
        return psutil.cpu_count(logical=False) or 1

    def rss_mb(self) -> float:
        return self.process.memory_info().rss / (1024 ** 2)

    def start_cell(self) -> Dict:
        return {'started': time.perf_counter(), 'rss_mb': self.rss_mb()}

    def finish_cell(self, start: Dict) -> Dict:
        rss = self.rss_mb()
        return {
            'wall_time': time.perf_counter() - start['started'],
            'rss_mb': rss,
            'rss_growth_mb': rss - start['rss_mb'],
        }

    def get_comprehensive_info(self) -> Dict:
        try:
            memory = psutil.virtual_memory()
            return {
                'system': platform.system(),
                'python_version': platform.python_version(),
                'cpu_physical': psutil.cpu_count(logical=False),
                'cpu_logical': psutil.cpu_count(logical=True),
                'memory_total_gb': memory.total / (1024 ** 3),
                'memory_available_gb': memory.available / (1024 ** 3),
            }
        except Exception as e:
            return {'error': str(e)}
