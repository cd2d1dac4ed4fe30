import json
import math

import pytest

from app import app


@pytest.fixture
def client():
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


def envelope(command, options=None):
    return {'tasks': {command: {'operation': command, 'options': options or {}}}}


def test_health(client):
    response = client.get('/health')
    assert response.status_code == 200
    body = response.get_json()
    assert body['status'] == 'success'
    assert 'numpy' in body and 'scipy' in body


def test_predict_endpoint(client):
    response = client.post('/api/bounds/predict', json=envelope('predict', {'p': 2, 'gamma': 1}))
    assert response.status_code == 200
    body = response.get_json()
    assert body['success'] is True
    assert body['exit_code'] == 0
    assert body['result']['verdict']['tag'] == 'bounded_critical'
    assert body['result']['closed_form_norm'] == pytest.approx(math.pi, rel=1e-12)
    assert response.headers['Cache-Control'] == 'no-cache, no-store, must-revalidate'


def test_predict_accepts_form_input_body(client):
    data = {'input_body': json.dumps(envelope('predict', {'p': 3}))}
    response = client.post('/api/bounds/predict', data=data)
    assert response.status_code == 200
    assert response.get_json()['config']['p'] == 3.0


def test_schur_endpoint(client):
    response = client.post('/api/bounds/schur', json=envelope('schur', {'indices': [2, 10]}))
    body = response.get_json()
    assert response.status_code == 200
    assert body['exit_code'] == 0
    assert body['result']['all_satisfied'] is True
    assert len(body['result']['reports']) == 4


def test_norm_endpoint(client):
    response = client.post('/api/norm/estimate', json=envelope('norm', {'N': 60, 'method': 'both', 'tol': 1e-13}))
    body = response.get_json()
    assert response.status_code == 200
    estimates = body['result']['estimates']
    assert estimates['power']['value'] == pytest.approx(estimates['oracle']['value'], rel=1e-8)


def test_extremal_and_scan_endpoints(client):
    response = client.post('/api/norm/extremal', json=envelope('extremal', {'N': 300, 'eps_values': [0.1]}))
    assert response.status_code == 200
    assert response.get_json()['result']['ordered'] is True
    response = client.post('/api/bounds/scan', json=envelope('scan', {'schedule': [50, 100],
                                                                      'gamma_values': [1.0, 1.25]}))
    assert response.status_code == 200
    assert [scan['verdict']['tag'] for scan in response.get_json()['result']['scans']] == [
        'bounded_critical', 'bounded_strict']


def test_carleson_endpoint_with_inline_measure(client):
    options = {'measure': {'atoms': [], 'pieces': [[0.0, 1.0, 1.0]]}, 'measure_schedule': [50, 100]}
    response = client.post('/api/carleson/check', json=envelope('carleson', options))
    body = response.get_json()
    assert response.status_code == 200
    assert body['result']['proposition']['verdict'] == 'consistent'


@pytest.mark.parametrize('payload, error', [
    ({'jobs': {}}, 'Missing tasks'),
    ({'tasks': {}}, 'Missing predict task'),
    ({'tasks': {'predict': {'operation': 'norm'}}}, 'Invalid operation'),
    (envelope('predict', {'p': 0.5}), 'Invalid options'),
    (envelope('predict', {'colour': 'red'}), 'Invalid options'),
    (envelope('predict', {'output_path': '/tmp/x.json'}), 'Invalid options'),
])
def test_bad_requests(client, payload, error):
    response = client.post('/api/bounds/predict', json=payload)
    assert response.status_code == 400
    body = response.get_json()
    assert body['success'] is False
    assert body['error'] == error


def test_missing_input_body(client):
    response = client.post('/api/bounds/predict', data={})
    assert response.status_code == 400
    assert response.get_json()['error'] == 'Missing input data'


def test_carleson_with_non_numeric_measure_is_rejected(client):
    options = {'measure': {'atoms': [['half', 1]]}, 'measure_schedule': [50, 100]}
    response = client.post('/api/carleson/check', json=envelope('carleson', options))
    assert response.status_code == 400
    body = response.get_json()
    assert body['success'] is False
    assert body['error'] == 'Invalid options'


def test_carleson_without_measure_is_rejected(client):
    response = client.post('/api/carleson/check', json=envelope('carleson'))
    assert response.status_code == 400


@pytest.mark.parametrize('family', ['bounds', 'norm', 'carleson'])
def test_defaults(client, family):
    response = client.get(f'/api/{family}/defaults')
    assert response.status_code == 200
    defaults = response.get_json()['defaults']
    assert defaults['tol'] == 1e-10
    assert defaults['schedule'] == [100, 500, 2000, 10000, 30000]


def test_unknown_route(client):
    assert client.get('/api/nothing').status_code == 404
