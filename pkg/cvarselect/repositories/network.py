from abc import ABC, abstractmethod
from logging import getLogger
from pathlib import Path

from pydantic import ValidationError

from cvarselect.exceptions import SchemaException, StorageException
from cvarselect.models.streetnet import StreetNetwork

logger = getLogger(__name__)


class BaseNetworkRepository(ABC):
    @abstractmethod
    def __init__(self, *, staged: dict[str, str]):
        pass

    @abstractmethod
    def add_one(self, *, name: str, network: StreetNetwork) -> None:
        pass

    @staticmethod
    def get_one(*, path: Path) -> StreetNetwork:
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as e:
            logger.error("Network read failed: %s", e)
            raise StorageException(f"cannot read network file {path}: {e}") from e

        try:
            return StreetNetwork.model_validate_json(raw)
        except ValidationError as e:
            logger.error("Network parse failed: %s", e)
            raise SchemaException(f"{path} is not a valid streetnet file:\n{e}") from e


class NetworkRepository(BaseNetworkRepository):
    def __init__(self, *, staged: dict[str, str]):
        self.staged = staged

    def add_one(self, *, name: str, network: StreetNetwork) -> None:
        self.staged[name] = network.model_dump_json(indent=2, by_alias=True) + "\n"
