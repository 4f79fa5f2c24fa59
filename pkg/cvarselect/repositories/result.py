import io
import json
from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence

import pandas as pd
from pydantic import BaseModel

# bump when a table's columns change
CSV_SCHEMA = "cvarselect-csv-v1"


def _header(config: BaseModel) -> str:
    return json.dumps(
        {"schema": CSV_SCHEMA, **config.model_dump(mode="json")}, sort_keys=True
    )


class BaseResultRepository(ABC):
    @abstractmethod
    def __init__(self, *, staged: dict[str, str]):
        pass

    @abstractmethod
    def add_table(self, *, name: str, frame: pd.DataFrame, config: BaseModel) -> None:
        pass

    @abstractmethod
    def add_document(self, *, name: str, document: BaseModel, config: BaseModel) -> None:
        pass

    @abstractmethod
    def add_events(
        self, *, name: str, events: Iterable[BaseModel], config: BaseModel
    ) -> None:
        pass

    @abstractmethod
    def add_plot_data(
        self,
        *,
        name: str,
        blocks: Sequence[tuple[str, pd.DataFrame]],
        config: BaseModel,
    ) -> None:
        pass


class ResultRepository(BaseResultRepository):
    def __init__(self, *, staged: dict[str, str]):
        self.staged = staged

    def add_table(self, *, name: str, frame: pd.DataFrame, config: BaseModel) -> None:
        buffer = io.StringIO()
        buffer.write(f"# config: {_header(config)}\n")
        frame.to_csv(buffer, index=False, lineterminator="\n")
        self.staged[name] = buffer.getvalue()

    def add_document(self, *, name: str, document: BaseModel, config: BaseModel) -> None:
        payload = {
            "config": json.loads(_header(config)),
            "result": document.model_dump(mode="json"),
        }
        self.staged[name] = json.dumps(payload, indent=2) + "\n"

    def add_events(
        self, *, name: str, events: Iterable[BaseModel], config: BaseModel
    ) -> None:
        lines = [json.dumps({"config": json.loads(_header(config))})]
        lines.extend(event.model_dump_json() for event in events)
        self.staged[name] = "\n".join(lines) + "\n"

    def add_plot_data(
        self,
        *,
        name: str,
        blocks: Sequence[tuple[str, pd.DataFrame]],
        config: BaseModel,
    ) -> None:
        """Whitespace columns, one blank-line separated block per label."""
        buffer = io.StringIO()
        buffer.write(f"# config: {_header(config)}\n")
        for i, (label, frame) in enumerate(blocks):
            if i:
                buffer.write("\n\n")
            buffer.write(f"# {label}\n")
            buffer.write("# " + " ".join(frame.columns) + "\n")
            frame.to_csv(
                buffer, sep=" ", index=False, header=False, lineterminator="\n"
            )
        self.staged[name] = buffer.getvalue()
