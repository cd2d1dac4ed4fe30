from flask import Blueprint

from api.controller.task_request import defaults_response, run_task

norm_bp = Blueprint('norm', __name__)


@norm_bp.route('/estimate', methods=['POST'])
def estimate_endpoint():
    """
    l^p norm of the N x N section by power iteration, the p = 2 oracle, or both.

    Example input_body:
    {
        "tasks": {
            "norm": {
                "operation": "norm",
                "options": {"p": 2, "N": 500, "method": "both", "sweep": false}
            }
        }
    }
    """
    return run_task('norm')


@norm_bp.route('/extremal', methods=['POST'])
def extremal_endpoint():
    """Rayleigh quotients of the extremal family next to the upper bound."""
    return run_task('extremal')


@norm_bp.route('/defaults', methods=['GET'])
def defaults_endpoint():
    return defaults_response()
