import io
import json
import math

import pytest

import cli
from api.services.errors import CertificationError, ConfigError
from api.services.experiment_service import ExperimentResult


def run_args(argv):
    stream = io.StringIO()
    code = cli.run(cli.parse_config(argv), stream=stream)
    return code, stream.getvalue()


def test_parse_config_maps_flags():
    config = cli.parse_config(['predict', '--p', '2', '--gamma', '1', '--mu', '0', '--nu', '0',
                               '--alpha', '1', '--beta', '1'])
    assert config.command == 'predict'
    assert config.params.p == 2.0
    assert config.tol == 1e-10
    assert config.schedule == [100, 500, 2000, 10_000, 30_000]


def test_flags_override_the_config_file(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'p': 3, 'gamma': 1.0, 'schedule': [10, 20, 40]}))
    config = cli.parse_config(['norm', '--config', str(path), '--gamma', '0.8'])
    assert config.gamma == 0.8
    assert config.p == 3.0
    assert config.schedule == [10, 20, 40]


def test_list_flags_accept_commas():
    config = cli.parse_config(['schur', '--indices', '2,10,100', '--eps', '0.3, 0.1'])
    assert config.indices == [2, 10, 100]
    assert config.eps_values == [0.3, 0.1]


@pytest.mark.parametrize('argv', [
    [],
    ['predict', '--p', '0.5'],
    ['predict', '--bogus', '1'],
    ['frobnicate'],
    ['norm', '--N', '1.5'],
    ['norm', '--method', 'oracle', '--p', '3'],
    ['scan', '--schedule', '100,50'],
    ['carleson'],
])
def test_usage_errors_exit_two(argv, capsys):
    assert cli.main(argv) == cli.EXIT_USAGE
    err = capsys.readouterr().err.strip().splitlines()
    assert any(line.startswith('mhilb: error:') for line in err)


def test_parse_config_raises_config_error():
    with pytest.raises(ConfigError):
        cli.parse_config(['predict', '--alpha', '2'])


def test_unreadable_files_exit_three(tmp_path):
    assert cli.main(['predict', '--config', str(tmp_path / 'missing.json')]) == cli.EXIT_IO
    assert cli.main(['carleson', '--measure', str(tmp_path / 'missing.json')]) == cli.EXIT_IO


@pytest.mark.parametrize('doc', [
    {'atoms': [['half', 1]]},
    {'pieces': [[0.0, 1.0, 'dense']]},
])
def test_non_numeric_measure_exits_two(tmp_path, capsys, doc):
    path = tmp_path / 'measure.json'
    path.write_text(json.dumps(doc))
    assert cli.main(['carleson', '--measure', str(path), '--measure-schedule', '50,100']) == cli.EXIT_USAGE
    err = capsys.readouterr().err
    assert 'mhilb: error: atom and piece entries must be real numbers' in err
    assert 'Traceback' not in err


def test_predict_report():
    code, text = run_args(['predict', '--p', '2', '--gamma', '1', '--mu', '0', '--nu', '0',
                           '--alpha', '1', '--beta', '1'])
    assert code == cli.EXIT_OK
    report = json.loads(text)
    assert report['command'] == 'predict'
    assert report['config']['p'] == 2.0
    assert report['result']['verdict']['tag'] == 'bounded_critical'
    assert report['result']['closed_form_norm'] == pytest.approx(math.pi, rel=1e-12)
    assert report['violated'] is False


def test_predict_csv_report():
    code, text = run_args(['predict', '--gamma', '0.5', '--format', 'csv'])
    lines = text.splitlines()
    assert code == cli.EXIT_OK
    assert lines[0].startswith('# config: ')
    assert json.loads(lines[0][len('# config: '):])['gamma'] == 0.5
    assert lines[1] == 'tag,critical_gamma,margin,closed_form_norm,schur_bound'
    assert lines[2].startswith('unbounded,')


def test_schur_reports_are_satisfied():
    code, text = run_args(['schur', '--indices', '2,10,100', '--format', 'csv'])
    lines = text.splitlines()
    assert code == cli.EXIT_OK
    assert lines[1] == 'kind,index,sum,tail,rhs,satisfied'
    assert len(lines) == 2 + 6
    assert all(line.endswith(',true') for line in lines[2:])


def test_norm_methods_agree():
    code, text = run_args(['norm', '--p', '2', '--N', '200', '--method', 'both', '--tol', '1e-13',
                           '--max-iter', '100000'])
    assert code == cli.EXIT_OK
    report = json.loads(text)
    assert report['result']['relative_difference'] <= 1e-8
    assert report['result']['upper_bound'] == pytest.approx(math.pi, rel=1e-13)


def test_norm_sweep_with_extrapolation():
    code, text = run_args(['norm', '--N', '50', '--sweep', '--schedule', '50,100,200,400', '--format', 'json'])
    assert code == cli.EXIT_OK
    report = json.loads(text)
    assert len(report['result']['sweep']) == 4
    assert 'limit' in report['result']['extrapolation']


def test_reports_are_byte_identical_across_runs():
    for argv in (['predict'], ['schur', '--indices', '2,10,100'], ['norm', '--N', '150', '--method', 'both']):
        assert run_args(argv) == run_args(argv)


def test_extremal_and_scan_commands():
    code, text = run_args(['extremal', '--N', '500', '--format', 'csv'])
    assert code == cli.EXIT_OK
    assert text.splitlines()[1] == 'eps,N,rayleigh,closed_form,upper'
    code, text = run_args(['scan', '--schedule', '100,300', '--gamma-values', '0.5,1.0', '--format', 'csv'])
    assert code == cli.EXIT_OK
    lines = text.splitlines()
    assert lines[1] == 'gamma,N,estimate,theta_fit,verdict'
    assert len(lines) == 2 + 4


def test_carleson_command(tmp_path):
    path = tmp_path / 'lebesgue.json'
    path.write_text(json.dumps({'atoms': [], 'pieces': [[0.0, 1.0, 1.0]]}))
    code, text = run_args(['carleson', '--measure', str(path), '--measure-schedule', '50,100,200',
                           '--n-values', '3,100,1000000'])
    assert code == cli.EXIT_OK
    report = json.loads(text)
    assert report['result']['proposition']['verdict'] == 'consistent'
    assert report['result']['carleson']['constant'] == pytest.approx(1.0, rel=1e-9)
    for row in report['result']['moments']['rows']:
        assert row['scaled'] == pytest.approx(1.0, abs=1e-12)


def test_report_written_to_file(tmp_path):
    target = tmp_path / 'reports' / 'predict.json'
    assert cli.main(['predict', '--output', str(target)]) == cli.EXIT_OK
    assert json.loads(target.read_text())['result']['verdict']['tag'] == 'bounded_critical'


def test_violations_exit_one(monkeypatch):
    config = cli.parse_config(['predict'])
    monkeypatch.setattr(cli, 'run_experiment',
                        lambda cfg: ExperimentResult(command='predict', report={'command': 'predict'}, violated=True))
    assert cli.run(config, stream=io.StringIO()) == cli.EXIT_VIOLATION

    def uncertified(cfg):
        raise CertificationError('tail not certified')

    monkeypatch.setattr(cli, 'run_experiment', uncertified)
    assert cli.run(config, stream=io.StringIO()) == cli.EXIT_VIOLATION
