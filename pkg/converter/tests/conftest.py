import pytest

from fixture_archive import make_archive


@pytest.fixture
def source_dir(tmp_path):
    """Dataset root holding one default subject, S2."""
    root = tmp_path / "wesad"
    make_archive(root)
    return root
