from abc import ABC, abstractmethod
from logging import getLogger
from pathlib import Path
from typing import Self

from cvarselect.exceptions import StorageException
from cvarselect.repositories.instance import BaseInstanceRepository, InstanceRepository
from cvarselect.repositories.network import BaseNetworkRepository, NetworkRepository
from cvarselect.repositories.result import BaseResultRepository, ResultRepository

logger = getLogger(__name__)


class BaseUnitOfWork(ABC):
    @abstractmethod
    def __enter__(self) -> Self:
        pass

    def __exit__(self, *args) -> None:
        pass

    @abstractmethod
    def get_result_repo(self) -> BaseResultRepository:
        pass

    @abstractmethod
    def get_instance_repo(self) -> BaseInstanceRepository:
        pass

    @abstractmethod
    def get_network_repo(self) -> BaseNetworkRepository:
        pass

    @abstractmethod
    def commit(self) -> list[Path]:
        pass


class UnitOfWork(BaseUnitOfWork):
    """Stages output files in memory and writes them only on commit."""

    def __init__(self, *, root: Path):
        self.root = root

    def __enter__(self) -> Self:
        self.staged: dict[str, str] = {}

        self.result_repo = ResultRepository(staged=self.staged)
        self.instance_repo = InstanceRepository(staged=self.staged)
        self.network_repo = NetworkRepository(staged=self.staged)

        return self

    def __exit__(self, *args) -> None:
        self.staged.clear()

    def get_result_repo(self) -> BaseResultRepository:
        return self.result_repo

    def get_instance_repo(self) -> BaseInstanceRepository:
        return self.instance_repo

    def get_network_repo(self) -> BaseNetworkRepository:
        return self.network_repo

    def commit(self) -> list[Path]:
        written = []
        try:
            for name in sorted(self.staged):
                path = self.root / name
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "w", encoding="utf-8", newline="\n") as f:
                    f.write(self.staged[name])
                written.append(path)
        except OSError as e:
            logger.error("Writing results failed: %s", e)
            raise StorageException(f"cannot write to {self.root}: {e}") from e

        self.staged.clear()
        logger.info("wrote %s file(s) to %s", len(written), self.root)
        return written
