import pytest

from leedwork.config import Config
from leedwork.datastore import UnifiedStore, qty


@pytest.fixture
def base_store() -> UnifiedStore:
    return UnifiedStore(
        project={"name": "T", "floor_area": qty(1000.0, "m2"), "stories": 2},
        inputs={"building": {"wwr": qty(0.4, "1")}},
    )


@pytest.fixture
def manager(tmp_path):
    from leedwork.project import ProjectManager

    return ProjectManager(tmp_path / "projects", Config(workers=2))
