import json
import logging
import math
from typing import Dict, List

import psutil

from core.adversaries import AdversarySpec
from core.errors import ConfigError, SwapBinError
from core.experts import EXPERTS
from core.feasibility import BACKENDS
from core.losses import MEDIAN, ScoringRule
from core.sweep_engine import ExperimentConfig

ALGORITHMS = ('efficient', 'truthful', 'fixed_grid')
BYTES_PER_ROUND_PER_PAIR = 16

logger = logging.getLogger(__name__)


class ConfigValidator:
    def __init__(self):
        self.validation_results = {}
        self.errors: List[str] = []

    def validate(self, raw: Dict) -> Dict:
        self.validation_results = {}
        self.errors = []
        if not isinstance(raw, dict):
            self.errors.append('config must be a JSON object')
            return {'valid': False, 'errors': list(self.errors)}
        checks = [
            self._check_algorithm(raw.get('algorithm')),
            self._check_adversary(raw.get('adversary')),
            self._check_horizons(raw.get('horizons')),
            self._check_seeds(raw.get('seeds')),
            self._check_rule(raw.get('cal_rule')),
        ]
        if checks[2]:
            checks.append(self._check_delta(raw.get('delta'), raw['horizons']))
            checks.append(self._check_memory_requirements(raw['horizons']))
        return {'valid': all(checks), 'errors': list(self.errors)}

    def _fail(self, key: str, message: str) -> bool:
        self.validation_results[key] = {'supported': False, 'error': message}
        self.errors.append(f"{key}: {message}")
        return False

    def _check_algorithm(self, algorithm) -> bool:
        if not isinstance(algorithm, dict):
            return self._fail('algorithm', 'expected an object with a "name"')
        name = algorithm.get('name')
        if name not in ALGORITHMS:
            return self._fail('algorithm', f"unknown algorithm {name!r}")
        if name == 'fixed_grid':
            m = algorithm.get('m', 11)
            if not isinstance(m, int) or m < 2:
                return self._fail('algorithm', f"fixed_grid needs integer m >= 2, got {m!r}")
        if algorithm.get('expert', 'msmwc') not in EXPERTS:
            return self._fail('algorithm', f"unknown expert {algorithm.get('expert')!r}")
        if algorithm.get('lp_backend', 'simplex') not in BACKENDS:
            return self._fail('algorithm', f"unknown LP backend {algorithm.get('lp_backend')!r}")
        self.validation_results['algorithm'] = {'supported': True, 'name': name}
        return True

    def _check_adversary(self, adversary) -> bool:
        if not isinstance(adversary, dict):
            return self._fail('adversary', 'expected an object with a "kind"')
        try:
            AdversarySpec.from_dict(adversary)
        except (SwapBinError, TypeError) as e:
            return self._fail('adversary', str(e))
        self.validation_results['adversary'] = {'supported': True, 'kind': adversary['kind']}
        return True

    def _check_horizons(self, horizons) -> bool:
        if not isinstance(horizons, list) or not horizons:
            return self._fail('horizons', 'expected a non-empty list of integers')
        if any(not isinstance(T, int) or isinstance(T, bool) or T < 2 for T in horizons):
            return self._fail('horizons', 'every horizon must be an integer >= 2')
        self.validation_results['horizons'] = {'supported': True, 'count': len(horizons)}
        return True

    def _check_delta(self, delta, horizons) -> bool:
        if delta is None:
            self.validation_results['delta'] = {'supported': True, 'delta': '1/T'}
            return True
        if not isinstance(delta, (int, float)) or not 0.0 < delta <= 1.0 / min(horizons):
            return self._fail('delta', f"delta must lie in (0, 1/min(T)], got {delta!r}")
        self.validation_results['delta'] = {'supported': True, 'delta': delta}
        return True

    def _check_seeds(self, seeds) -> bool:
        if isinstance(seeds, dict):
            count, base = seeds.get('count'), seeds.get('base', 0)
            if not isinstance(count, int) or count < 1 or not isinstance(base, int):
                return self._fail('seeds', 'expected {"count": n >= 1, "base": int}')
        elif not isinstance(seeds, list) or not seeds or \
                any(not isinstance(s, int) or s < 0 for s in seeds):
            return self._fail('seeds', 'expected a non-empty list of nonnegative integers')
        self.validation_results['seeds'] = {'supported': True}
        return True

    def _check_rule(self, rule) -> bool:
        if rule is None:
            return True
        try:
            ScoringRule.from_dict(rule)
        except (SwapBinError, AttributeError) as e:
            return self._fail('cal_rule', str(e))
        return True

    def _check_memory_requirements(self, horizons) -> bool:
        """Rough in-memory transcript size for the largest cell."""
        T = max(horizons)
        gamma = min(1.0, math.sqrt(math.log(T) ** 2 / T))
        pairs = 4.0 / gamma + math.log2(1.0 / gamma) + 2
        required_gb = T * pairs * 5 * BYTES_PER_ROUND_PER_PAIR / (1024 ** 3)
        available_gb = psutil.virtual_memory().available / (1024 ** 3)
        self.validation_results['memory'] = {
            'required_gb': required_gb,
            'available_gb': available_gb,
            'supported': required_gb <= available_gb,
        }
        if required_gb > available_gb:
            return self._fail('memory', f"largest cell needs ~{required_gb:.1f} GB, "
                                        f"{available_gb:.1f} GB available")
        return True

    def get_validation_report(self) -> Dict:
        return self.validation_results.copy()


def expand_seeds(seeds) -> List[int]:
    if isinstance(seeds, dict):
        base = seeds.get('base', 0)
        return list(range(base, base + seeds['count']))
    return list(seeds)


def build_config(raw: Dict, output_dir: str = None) -> ExperimentConfig:
    validator = ConfigValidator()
    result = validator.validate(raw)
    if not result['valid']:
        raise ConfigError('invalid config: ' + '; '.join(result['errors']))
    logger.debug("config checks: %s", validator.get_validation_report())
    rule = raw.get('cal_rule')
    return ExperimentConfig(
        algorithm=dict(raw['algorithm']),
        adversary=AdversarySpec.from_dict(raw['adversary']),
        horizons=list(raw['horizons']),
        seeds=expand_seeds(raw['seeds']),
        delta=raw.get('delta'),
        cal_rule=MEDIAN if rule is None else ScoringRule.from_dict(rule),
        heavy_constant=float(raw.get('heavy_constant', 1.0)),
        output_dir=output_dir or raw.get('output', {}).get('dir', 'results'),
    )


def load_config(path: str, output_dir: str = None) -> ExperimentConfig:
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return build_config(raw, output_dir)
