import os
import shutil

import pytest

REPORT = """Exam Type: CHEST (PA AND LAT)
History: Cough.
Findings:
Lungs and Airways:
- Right lower lobe consolidation.
- No pneumothorax.
Cardiovascular:
- Heart size is normal.
Impression:
1. Right lower lobe pneumonia.
"""


@pytest.fixture
def report_text():
    return REPORT


@pytest.fixture
def cli():
    path = os.environ.get("SRRG_CLI") or shutil.which("srrg")
    if not path:
        pytest.skip("srrg binary not available")
    return path
