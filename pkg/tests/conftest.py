import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from physiofuse.ingest import ChannelMeta, Channel, Modality, SignalRecord  # noqa: E402

NINE = [("ECG", Modality.ECG, ""), ("EOG-H", Modality.EOG, "H"), ("EOG-V", Modality.EOG, "V"),
        ("EMG", Modality.EMG, ""), ("C3", Modality.EEG, "C3"), ("C4", Modality.EEG, "C4"),
        ("Cz", Modality.EEG, "Cz"), ("Fz", Modality.EEG, "Fz"), ("Pz", Modality.EEG, "Pz")]


def make_record(seconds=20.0, rate=512.0, layout=NINE, seed=0, kss=((0.0, 2),),
                session_id="s1"):
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    chans = tuple(Channel(ChannelMeta(lab, mod, sub, rate), rng.standard_normal(n))
                  for lab, mod, sub in layout)
    return SignalRecord(chans, session_id, kss)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def nine_channel_record():
    return make_record()


# --- acceptance reporting ---------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.failed:
        _CRITERIA[number] = (title, "FAIL")
    elif report.when == "call" and number not in _CRITERIA:
        _CRITERIA[number] = (title, "PASS")
    elif report.skipped and number not in _CRITERIA:
        _CRITERIA[number] = (title, "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
