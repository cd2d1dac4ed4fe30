import json
import logging

from flask import jsonify, request

from api.services.config_service import DEFAULTS, build_config
from api.services.errors import DomainError
from api.services.experiment_service import run_experiment

logger = logging.getLogger(__name__)

# Options naming server-side files are not accepted over HTTP
SERVER_ONLY_OPTIONS = ('measure_path', 'output_path', 'output_format')


class RequestError(DomainError):
    """The request envelope is malformed"""

    def __init__(self, error, message):
        super().__init__(message)
        self.error = error
        self.message = message


def read_input_body():
    """
    Accept the envelope as a JSON body or as an ``input_body`` form field:

    {
        "tasks": {
            "norm": {
                "operation": "norm",
                "options": {"p": 2, "N": 200, "method": "both"}
            }
        }
    }
    """
    if request.is_json:
        input_body = request.get_json(silent=True)
        if input_body is None:
            raise RequestError('Invalid JSON', 'Failed to parse the request body')
        return input_body
    input_body_raw = request.form.get('input_body')
    if not input_body_raw:
        raise RequestError('Missing input data', 'No input_body provided')
    try:
        return json.loads(input_body_raw)
    except json.JSONDecodeError as e:
        raise RequestError('Invalid JSON', f'Failed to parse input_body: {str(e)}')


def task_options(input_body, command):
    if not isinstance(input_body, dict):
        raise RequestError('Invalid input format', 'input_body must be a valid JSON object')
    if 'tasks' not in input_body or not isinstance(input_body['tasks'], dict):
        raise RequestError('Missing tasks', 'input_body must contain a "tasks" object')
    task = input_body['tasks'].get(command)
    if not isinstance(task, dict):
        raise RequestError(f'Missing {command} task', f'tasks must contain a "{command}" object')
    operation = task.get('operation', command)
    if operation != command:
        raise RequestError('Invalid operation', f'operation must be "{command}", got {operation!r}')
    options = task.get('options', {})
    if not isinstance(options, dict):
        raise RequestError('Invalid options', 'options must be a JSON object')
    rejected = sorted(key for key in options if key in SERVER_ONLY_OPTIONS)
    if rejected:
        raise RequestError('Invalid options', f'options not accepted over HTTP: {", ".join(rejected)}')
    return options


def run_task(command):
    """Run one experiment from the request envelope and build the JSON response."""
    try:
        options = task_options(read_input_body(), command)
        config = build_config(command, overrides=options)
        result = run_experiment(config)
        return jsonify({'success': True, 'exit_code': 1 if result.violated else 0, **result.report})
    except RequestError as e:
        return jsonify({'success': False, 'error': e.error, 'message': e.message}), 400
    except DomainError as e:
        return jsonify({'success': False, 'error': 'Invalid options', 'message': str(e)}), 400
    except Exception as e:
        logger.exception("%s failed", command)
        return jsonify({'success': False, 'error': f'{command} failed', 'message': str(e)}), 500


def defaults_response():
    return jsonify({'success': True, 'defaults': DEFAULTS})
