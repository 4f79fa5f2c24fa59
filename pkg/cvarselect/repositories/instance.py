from abc import ABC, abstractmethod
from logging import getLogger
from pathlib import Path

from pydantic import TypeAdapter, ValidationError

from cvarselect.exceptions import SchemaException, StorageException
from cvarselect.models.casestudies import CoverageInstance, Instance, ModInstance

logger = getLogger(__name__)

instance_adapter: TypeAdapter[ModInstance | CoverageInstance] = TypeAdapter(Instance)


class BaseInstanceRepository(ABC):
    @abstractmethod
    def __init__(self, *, staged: dict[str, str]):
        pass

    @abstractmethod
    def add_one(self, *, name: str, instance: ModInstance | CoverageInstance) -> None:
        pass

    @staticmethod
    def get_one(*, path: Path) -> ModInstance | CoverageInstance:
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as e:
            logger.error("Instance read failed: %s", e)
            raise StorageException(f"cannot read instance file {path}: {e}") from e

        try:
            return instance_adapter.validate_json(raw)
        except ValidationError as e:
            logger.error("Instance parse failed: %s", e)
            raise SchemaException(f"{path} is not a valid instance file:\n{e}") from e


class InstanceRepository(BaseInstanceRepository):
    def __init__(self, *, staged: dict[str, str]):
        self.staged = staged

    def add_one(self, *, name: str, instance: ModInstance | CoverageInstance) -> None:
        self.staged[name] = instance.model_dump_json(indent=2) + "\n"
