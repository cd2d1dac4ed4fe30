from flask import Flask, request, make_response, jsonify
from flask_cors import CORS
from api.controller.bounds_controller import bounds_bp
from api.controller.norm_controller import norm_bp
from api.controller.carleson_controller import carleson_bp
import logging

import numpy
import scipy

logging.basicConfig(level=logging.INFO, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
logger = logging.getLogger(__name__)

app = Flask(__name__, static_folder=None, static_url_path=None)

# Measure documents are small; keep request bodies bounded
app.config['MAX_CONTENT_LENGTH'] = 1 * 1024 * 1024  # 1MB

# Initialize CORS with explicit configuration
CORS(app,
     origins=["*"],
     methods=["GET", "POST", "OPTIONS", "HEAD"],
     allow_headers=["*"],
     supports_credentials=False)


@app.errorhandler(413)
def request_entity_too_large(error):
    """Handle request body too large"""
    return jsonify({
        'success': False,
        'error': 'Request too large',
        'message': f'Request body exceeds maximum allowed size of {app.config["MAX_CONTENT_LENGTH"] // 1024}KB'
    }), 413


@app.errorhandler(404)
def not_found(error):
    return jsonify({'success': False, 'error': 'Not Found', 'message': request.path}), 404


@app.errorhandler(405)
def method_not_allowed(error):
    return jsonify({'success': False, 'error': 'Method not allowed',
                    'message': f'{request.method} is not supported on {request.path}'}), 405


@app.before_request
def handle_preflight():
    # Handle OPTIONS requests for CORS preflight
    if request.method == 'OPTIONS':
        response = make_response()
        response.headers['Access-Control-Allow-Origin'] = '*'
        response.headers['Access-Control-Allow-Methods'] = 'GET, POST, OPTIONS, HEAD'
        response.headers['Access-Control-Allow-Headers'] = '*'
        return response


@app.after_request
def after_request(response):
    """Add headers to all responses"""
    response.headers['Access-Control-Allow-Origin'] = '*'
    response.headers['Access-Control-Allow-Methods'] = 'GET, POST, OPTIONS, HEAD'
    response.headers['Access-Control-Allow-Headers'] = '*'

    # Reports depend on the request body only; never cache them
    response.headers['Cache-Control'] = 'no-cache, no-store, must-revalidate'
    response.headers['Pragma'] = 'no-cache'
    response.headers['Expires'] = '0'
    return response


@app.route('/health', methods=['GET'])
def health():
    """Report the numerical stack the experiments run on"""
    return {
        'status': 'success',
        'message': 'mhilb API is running',
        'numpy': numpy.__version__,
        'scipy': scipy.__version__,
    }


app.register_blueprint(bounds_bp, url_prefix='/api/bounds')
app.register_blueprint(norm_bp, url_prefix='/api/norm')
app.register_blueprint(carleson_bp, url_prefix='/api/carleson')

if __name__ == '__main__':
    app.run(debug=True, host='0.0.0.0', port=5000, use_reloader=False)
