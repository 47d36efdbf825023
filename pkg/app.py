from flask import Flask, jsonify, request
from werkzeug.exceptions import HTTPException
from werkzeug.utils import secure_filename
import logging
import os

from config import CheckerConfig, Config
from storage import CheckRecord, FileStorage, save_report_file
from services.driver import equiv_sources, lift_pair, select_functions
from services.errors import CfgkatError
from services.frontend import analyze_indicator_candidates, detect_indicator, lift_to_exp
from services.syntax import collect_alphabets, validate

logging.basicConfig(level=getattr(logging, CheckerConfig.LOG_LEVEL.upper(), logging.WARNING))
logger = logging.getLogger(__name__)


def create_app(config_object=Config) -> Flask:
    app = Flask(__name__)
    app.config.from_object(config_object)
    app.extensions['checks'] = FileStorage(app.config['CHECKS_FILE'])
    _register_routes(app)
    return app


def _source(payload: dict, key: str) -> str:
    value = payload.get(key)
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"'{key}' must be a non-empty string of C source")
    return value


def _max_tests(value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ValueError("'max_tests' must be an integer")
    try:
        cap = int(value)
    except ValueError:
        raise ValueError("'max_tests' must be an integer") from None
    if not 0 <= cap <= CheckerConfig.MAX_TESTS_CEILING:
        raise ValueError(f"'max_tests' must be between 0 and {CheckerConfig.MAX_TESTS_CEILING}")
    return cap


def _register_routes(app: Flask) -> None:
    storage: FileStorage = app.extensions['checks']

    @app.route('/')
    def index():
        """Service summary and recent checks"""
        recent = storage.get_recent_records(limit=10)
        return jsonify({
            'service': 'cfgkat',
            'endpoints': ['/api/equiv', '/api/check', '/api/checks', '/api/checks/<id>', 'DELETE /api/checks/<id>'],
            'defaults': CheckerConfig.get_run_config('equiv'),
            'recent_checks': [r.summary() for r in recent],
        })

    @app.route('/api/equiv', methods=['POST'])
    def api_equiv():
        """Compare two C sources function by function and store the report"""
        payload = request.get_json(silent=True) or {}
        try:
            source_a, source_b = _source(payload, 'source_a'), _source(payload, 'source_b')
        except ValueError as e:
            return jsonify({'success': False, 'error': str(e)}), 400

        function = payload.get('function') or None
        names = {
            'a': secure_filename(payload.get('name_a') or 'a.c'),
            'b': secure_filename(payload.get('name_b') or 'b.c'),
        }
        record = CheckRecord(function=function, sources={names['a']: source_a, names['b']: source_b})

        options = CheckerConfig.get_run_config('equiv')
        if 'max_tests' in payload:
            try:
                options['max_tests'] = _max_tests(payload['max_tests'])
            except ValueError as e:
                return jsonify({'success': False, 'error': str(e)}), 400
        try:
            comparison = equiv_sources(
                source_a, source_b, function,
                blind=bool(payload.get('auto_blind')),
                rules=CheckerConfig.indicator_rules(),
                **options,
            )
        except CfgkatError as e:
            logger.info("check %s failed: %s", record.id, e)
            record.set_error(e.to_dict())
            storage.add_record(record)
            return jsonify({'success': False, 'id': record.id, 'error': e.to_dict()}), 400

        report = comparison.to_dict()
        record.set_report(report)
        storage.add_record(record)
        path = save_report_file(report, app.config['RESULTS_FOLDER'], record.id)
        logger.debug("stored report %s at %s", record.id, path)
        return jsonify({'success': True, 'id': record.id, 'report': report})

    @app.route('/api/check', methods=['POST'])
    def api_check():
        """Validate one source; report indicator candidates and alphabets per function"""
        payload = request.get_json(silent=True) or {}
        try:
            source = _source(payload, 'source')
        except ValueError as e:
            return jsonify({'success': False, 'error': str(e)}), 400

        rules = CheckerConfig.indicator_rules()
        try:
            functions = {}
            for name, fn in select_functions(source, payload.get('function') or None).items():
                if payload.get('auto_blind'):
                    e, _, _ = lift_pair(fn, fn, True, rules)
                else:
                    e = lift_to_exp(fn, detect_indicator(fn, rules))
                functions[name] = {
                    'validation': validate(e).to_dict(),
                    'indicator': detect_indicator(fn, rules),
                    'candidates': [c.to_dict() for c in analyze_indicator_candidates(fn, rules)],
                    'alphabets': collect_alphabets(e, e).to_dict(),
                }
        except CfgkatError as e:
            return jsonify({'success': False, 'error': e.to_dict()}), 400
        return jsonify({'success': True, 'functions': functions})

    @app.route('/api/checks/<record_id>', methods=['GET'])
    def api_get_check(record_id):
        record = storage.get_record(record_id)
        if not record:
            return jsonify({'success': False, 'error': 'Check not found'}), 404
        return jsonify({'success': True, 'check': record.to_dict()})

    @app.route('/api/checks/<record_id>', methods=['DELETE'])
    def api_delete_check(record_id):
        if not storage.delete_record(record_id):
            return jsonify({'success': False, 'error': 'Check not found'}), 404
        logger.info("deleted check %s", record_id)
        return jsonify({'success': True})

    @app.route('/api/checks', methods=['GET'])
    def api_recent_checks():
        limit = request.args.get('limit', default=10, type=int)
        return jsonify({'success': True, 'checks': [r.summary() for r in storage.get_recent_records(limit)]})

    @app.errorhandler(HTTPException)
    def http_error(error):
        return jsonify({'success': False, 'error': error.description}), error.code


app = create_app()

if __name__ == '__main__':
    os.makedirs(app.config['RESULTS_FOLDER'], exist_ok=True)
    logger.warning("Starting cfgkat service on http://localhost:5000")
    app.run(debug=False)
