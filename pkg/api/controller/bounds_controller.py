from flask import Blueprint

from api.controller.task_request import defaults_response, run_task

bounds_bp = Blueprint('bounds', __name__)


@bounds_bp.route('/predict', methods=['POST'])
def predict_endpoint():
    """
    Boundedness verdict, closed-form norm on the critical line and the Schur bound.

    Example input_body:
    {
        "tasks": {
            "predict": {
                "operation": "predict",
                "options": {"p": 2, "alpha": 1, "beta": 1, "gamma": 1, "mu": 0, "nu": 0}
            }
        }
    }
    """
    return run_task('predict')


@bounds_bp.route('/schur', methods=['POST'])
def schur_endpoint():
    """
    Schur sums E(m), F(n) for every index in options.indices; exit_code 1 when one is violated.

    Example options: {"p": 2, "indices": [2, 10, 100], "tail_tol": 1e-8}
    """
    return run_task('schur')


@bounds_bp.route('/scan', methods=['POST'])
def scan_endpoint():
    """Truncation sweeps across options.gamma_values over options.schedule."""
    return run_task('scan')


@bounds_bp.route('/defaults', methods=['GET'])
def defaults_endpoint():
    return defaults_response()
