from flask import Blueprint

from api.controller.task_request import defaults_response, run_task

carleson_bp = Blueprint('carleson', __name__)


@carleson_bp.route('/check', methods=['POST'])
def check_endpoint():
    """
    Moment table, Carleson constant and sufficiency check for an inline measure.

    Example input_body:
    {
        "tasks": {
            "carleson": {
                "operation": "carleson",
                "options": {
                    "p": 2, "gamma": 1, "mu": 0, "nu": 0,
                    "measure": {"atoms": [], "pieces": [[0.0, 1.0, 1.0]]},
                    "measure_schedule": [100, 200, 400]
                }
            }
        }
    }
    """
    return run_task('carleson')


@carleson_bp.route('/defaults', methods=['GET'])
def defaults_endpoint():
    return defaults_response()
