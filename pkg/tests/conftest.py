"""
Shared fixtures. RESONANCE_DATA_DIR must point at a scratch directory before
app.config.settings is first imported, since it creates logs/ and results/ there.
"""
import os
import tempfile

os.environ.setdefault('RESONANCE_DATA_DIR', tempfile.mkdtemp(prefix='resonance-tests-'))

import pytest  # noqa: E402

from app.config import settings  # noqa: E402
from app.services.dispersion import ModelParams  # noqa: E402

LADDER = (1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5)


@pytest.fixture
def ladder():
    return LADDER


@pytest.fixture
def make_params():
    def factory(d, theta0, c, epsilon, b=1.0):
        return ModelParams(d=d, theta0=theta0, c=c, epsilon=epsilon, b=b)
    return factory


@pytest.fixture
def data_dir(tmp_path, monkeypatch):
    """Send CLI outputs and run summaries to tmp_path."""
    monkeypatch.setattr(settings, 'RESULTS_DIR', str(tmp_path / 'results'))
    monkeypatch.setattr('app.utils.logging_utils.LOG_DIR', str(tmp_path / 'logs'))
    return tmp_path
