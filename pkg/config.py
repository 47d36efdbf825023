import os
from dotenv import load_dotenv

from services.frontend import DEFAULT_INTEGER_TYPES, IndicatorRules

load_dotenv()


def _flag(name: str, default: str) -> bool:
    return (os.environ.get(name) or default).lower() in ('1', 'true', 'yes', 'on')


class Config:
    SECRET_KEY = os.environ.get('FLASK_SECRET_KEY') or 'dev-secret-key'
    RESULTS_FOLDER = os.environ.get('RESULTS_FOLDER') or 'results'
    CHECKS_FILE = os.environ.get('CHECKS_FILE') or 'checks.json'
    MAX_CONTENT_LENGTH = 2 * 1024 * 1024  # 2MB of C source per request


class CheckerConfig:
    """Defaults for the equivalence checker, overridable from the environment"""

    # Atoms are 2^|T|; beyond this many primitive tests a run is refused unless overridden
    MAX_TESTS = int(os.environ.get('CFGKAT_MAX_TESTS', '16'))

    # Action bound for the denotational cross-check
    TRACE_BOUND = int(os.environ.get('CFGKAT_TRACE_BOUND', '6'))

    # Indicator detection: "auto" picks the first qualifying variable, "off" never picks one
    INDICATOR_DETECTION = os.environ.get('CFGKAT_INDICATOR_DETECTION') or 'auto'
    INDICATOR_INTEGER_TYPES = os.environ.get('CFGKAT_INDICATOR_INTEGER_TYPES') or ','.join(DEFAULT_INTEGER_TYPES)
    ALLOW_UNINITIALIZED_INDICATOR = _flag('CFGKAT_ALLOW_UNINITIALIZED_INDICATOR', 'true')

    # Also compare semantics started from each label (stricter than trace equivalence)
    COMPARE_LABELS = _flag('CFGKAT_COMPARE_LABELS', 'false')
    PRUNE_UNREACHABLE = _flag('CFGKAT_PRUNE_UNREACHABLE', 'true')
    WORKERS = int(os.environ.get('CFGKAT_WORKERS', '1'))

    # Largest max_tests an HTTP request may ask for
    MAX_TESTS_CEILING = int(os.environ.get('CFGKAT_MAX_TESTS_CEILING', '20'))

    # JSON-lines file receiving one record per pipeline stage; unset disables it
    STAGE_LOG = os.environ.get('CFGKAT_STAGE_LOG') or None

    LOG_LEVEL = os.environ.get('CFGKAT_LOG_LEVEL') or 'WARNING'

    @classmethod
    def indicator_rules(cls) -> IndicatorRules:
        types = tuple(t.strip() for t in cls.INDICATOR_INTEGER_TYPES.split(',') if t.strip())
        return IndicatorRules(
            enabled=cls.INDICATOR_DETECTION.lower() != 'off',
            integer_types=types,
            allow_uninitialized=cls.ALLOW_UNINITIALIZED_INDICATOR,
        )

    @classmethod
    def get_run_config(cls, command: str) -> dict:
        """Default options for one CLI or HTTP command"""
        equiv_options = {
            'max_tests': cls.MAX_TESTS,
            'compare_labels': cls.COMPARE_LABELS,
            'prune': cls.PRUNE_UNREACHABLE,
            'workers': cls.WORKERS,
            'stage_log': cls.STAGE_LOG,
        }
        configs = {
            'equiv': equiv_options,
            'check': {'max_tests': cls.MAX_TESTS},
            'dot': {'max_tests': cls.MAX_TESTS, 'prune': cls.PRUNE_UNREACHABLE},
            'crosscheck': {'max_tests': cls.MAX_TESTS, 'bound': cls.TRACE_BOUND},
        }
        return dict(configs.get(command, {'max_tests': cls.MAX_TESTS}))
