import os
from pathlib import Path

from django.conf import settings


DEFAULT_DATA_DIR = Path(__file__).resolve().parent.parent / "data"

TASK_TOOLS = {
    "woodworking": ("hammer", "screwdriver"),
    "cooking": ("spatula", "ladle"),
    "cleaning": ("squeegee", "rake"),
}


def data_dir() -> Path:
    if settings.configured:
        return Path(settings.PLANNER_DATA_DIR)
    return Path(os.getenv("FGS_DATA_DIR") or DEFAULT_DATA_DIR)


def resolve_path(path: str | Path) -> Path:
    """Existing paths are used as given; relative ones that do not exist are looked up in the data directory."""
    path = Path(path)
    if path.exists() or path.is_absolute():
        return path
    candidate = data_dir() / path
    return candidate if candidate.exists() else path


def task_assets(name: str) -> tuple[Path, Path]:
    """Domain and problem files of a bundled task (a tool name or a task type)."""
    domains = data_dir() / "domains"
    return domains / f"{name}.domain.pddl", domains / f"{name}.problem.pddl"


def tool_registry_path() -> Path:
    return data_dir() / "tools.json"


def library_path() -> Path:
    return data_dir() / "library" / "objects.json"
