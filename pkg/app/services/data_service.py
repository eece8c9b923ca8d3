"""
Data services for persisting solver results as CSV or JSON
"""
import json
import math
import os

import pandas as pd

from app.config.settings import logger

FORMATS = ('csv', 'json')


def _round17(value):
    return float(format(value, '.17g'))


def _columns(rows):
    """Keys in first-seen order; complex-valued keys are split into re_/im_ pairs."""
    names, complex_keys = [], set()
    for row in rows:
        for key, value in row.items():
            if key not in names:
                names.append(key)
            if isinstance(value, complex):
                complex_keys.add(key)
    columns = []
    for key in names:
        columns.extend([f're_{key}', f'im_{key}'] if key in complex_keys else [key])
    return columns, complex_keys


def rows_to_frame(rows):
    """
    Flatten result rows into a DataFrame.

    Args:
        rows (list): Dictionaries of scalars; complex values become re_/im_ columns

    Returns:
        pandas.DataFrame: one row per input dictionary
    """
    columns, complex_keys = _columns(rows)
    flat = []
    for row in rows:
        entry = {}
        for key, value in row.items():
            if key in complex_keys:
                value = complex(value) if value is not None else complex('nan')
                entry[f're_{key}'], entry[f'im_{key}'] = value.real, value.imag
            else:
                entry[key] = value
        flat.append(entry)
    return pd.DataFrame(flat, columns=columns)


def _json_value(value):
    if isinstance(value, complex):
        return {'re': _json_value(value.real), 'im': _json_value(value.imag)}
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return None if math.isnan(value) else _round17(value)
    if hasattr(value, 'item'):
        return _json_value(value.item())
    return str(value)


class ResultWriter:
    """Writes result rows to a CSV or JSON file carrying the same numbers."""

    def __init__(self, path, fmt=None):
        self.path = path
        self.fmt = (fmt or os.path.splitext(path)[1].lstrip('.') or 'csv').lower()
        if self.fmt not in FORMATS:
            raise ValueError(f"output format must be one of {FORMATS}, got {self.fmt!r}")

    def _ensure_parent(self):
        parent = os.path.dirname(os.path.abspath(self.path))
        if not os.path.exists(parent):
            os.makedirs(parent)

    def write(self, rows):
        """
        Write rows to self.path.

        Args:
            rows (list): Result rows

        Returns:
            bool: True if the file was written, False otherwise
        """
        try:
            self._ensure_parent()
            if self.fmt == 'csv':
                rows_to_frame(rows).to_csv(self.path, index=False, float_format='%.17g',
                                           lineterminator='\n', encoding='utf-8')
            else:
                payload = [{key: _json_value(value) for key, value in row.items()} for row in rows]
                with open(self.path, 'w', encoding='utf-8', newline='\n') as f:
                    json.dump(payload, f, indent=1, allow_nan=False)
                    f.write('\n')
            logger.info(f"Wrote {len(rows)} rows to {self.path}")
            return True
        except (OSError, ValueError) as e:
            logger.error(f"Error writing results to {self.path}: {str(e)}")
            return False


def load_records(path):
    """Read a CSV or JSON result file back into the flat re_/im_ frame."""
    if path.lower().endswith('.json'):
        with open(path, 'r', encoding='utf-8') as f:
            payload = json.load(f)
        rows = []
        for row in payload:
            rows.append({key: (complex(value['re'] if value['re'] is not None else math.nan,
                                       value['im'] if value['im'] is not None else math.nan)
                               if isinstance(value, dict) else value)
                         for key, value in row.items()})
        return rows_to_frame(rows)
    return pd.read_csv(path, float_precision='round_trip')
