import csv
import io
import json
import logging
import os

logger = logging.getLogger(__name__)

# Column sets per command; JSON reports carry the same fields under "rows"
CSV_COLUMNS = {
    'predict': ['tag', 'critical_gamma', 'margin', 'closed_form_norm', 'schur_bound'],
    'norm': ['N', 'estimate', 'residual', 'iterations', 'method'],
    'schur': ['kind', 'index', 'sum', 'tail', 'rhs', 'satisfied'],
    'extremal': ['eps', 'N', 'rayleigh', 'closed_form', 'upper'],
    'scan': ['gamma', 'N', 'estimate', 'theta_fit', 'verdict'],
    'carleson': ['n', 'moment', 'scaled'],
}


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(command, rows, config_dict):
    """CSV with a leading '# config:' line so every report is self-describing."""
    buffer = io.StringIO()
    buffer.write('# config: ' + json.dumps(config_dict, sort_keys=True) + '\n')
    writer = csv.writer(buffer, lineterminator='\n')
    columns = CSV_COLUMNS[command]
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(column)) for column in columns])
    return buffer.getvalue()


def render_json(report):
    return json.dumps(report, indent=2, allow_nan=False) + '\n'


def render(result, config):
    if config.output_format == 'csv':
        return render_csv(config.command, result.rows, config.as_dict())
    return render_json(result.report)


def write_report(text, output_path=None, stream=None):
    """Write to output_path when given, otherwise to the stream."""
    if output_path:
        directory = os.path.dirname(os.path.abspath(output_path))
        os.makedirs(directory, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        logger.info("report written to %s", output_path)
    elif stream is not None:
        stream.write(text)
