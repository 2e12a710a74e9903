"""Document parsing, serialization and atomic file output"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Sequence, Type, TypeVar

from pydantic import BaseModel, ValidationError

from ..errors import SchemaError
from ..models.documents import InstanceDocument, PartitionDocument, SystemDocument
from ..models.instance import Instance, Item, Product
from ..models.system import Action, SubstitutableSystem, SystemProduct

DocumentT = TypeVar("DocumentT", bound=BaseModel)


def _parse(text: str, schema: Type[DocumentT]) -> DocumentT:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(e.msg, locus=f"line {e.lineno}, column {e.colno}")
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        locus = ".".join(str(part) for part in first["loc"]) or schema.__name__
        message = first["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        raise SchemaError(message, locus=locus)


def _dump(data: Dict[str, Any]) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


def load_instance(text: str) -> Instance:
    """Parse an instance document"""
    document = _parse(text, InstanceDocument)
    return Instance(
        L=document.L,
        items=tuple(Item(item.id, item.inventory) for item in document.items),
        products=tuple(
            Product(
                id=product.id,
                items=tuple(product.items),
                reward=product.reward,
                active_prob=product.active_prob,
                batch=product.batch,
            )
            for product in document.products
        ),
        batches=tuple(tuple(batch) for batch in document.batches),
    )


def instance_to_document(instance: Instance) -> Dict[str, Any]:
    return {
        "L": instance.L,
        "items": [{"id": item.id, "inventory": item.inventory} for item in instance.items],
        "products": [
            {
                "id": product.id,
                "items": list(product.items),
                "reward": product.reward,
                "active_prob": product.active_prob,
                "batch": product.batch,
            }
            for product in instance.products
        ],
        "batches": [list(batch) for batch in instance.batches],
    }


def save_instance(instance: Instance) -> str:
    """Serialize an instance to its canonical document text"""
    return _dump(instance_to_document(instance))


def load_system(text: str) -> SubstitutableSystem:
    """Parse a substitutable-system document"""
    document = _parse(text, SystemDocument)
    return SubstitutableSystem(
        products=tuple(SystemProduct(p.id, tuple(p.items), p.reward) for p in document.products),
        inventories=dict(document.inventories),
        actions=tuple(
            tuple(Action(action.id, dict(action.phi)) for action in table)
            for table in document.actions
        ),
    )


def system_to_document(system: SubstitutableSystem) -> Dict[str, Any]:
    return {
        "periods": system.periods,
        "products": [
            {"id": p.id, "items": list(p.items), "reward": p.reward} for p in system.products
        ],
        "inventories": dict(system.inventories),
        "actions": [
            [{"id": action.id, "phi": dict(action.phi)} for action in table]
            for table in system.actions
        ],
    }


def save_system(system: SubstitutableSystem) -> str:
    return _dump(system_to_document(system))


def load_partition(text: str) -> List[List[str]]:
    """Parse a partition document into its item groups"""
    return [list(group) for group in _parse(text, PartitionDocument).groups]


def save_partition(groups: Sequence[Sequence[str]]) -> str:
    return _dump({"groups": [list(group) for group in groups]})


class FileHandler:
    """Handles reading documents and writing reports"""

    def __init__(self, output_dir: str = "."):
        self.output_dir = Path(output_dir)

    def read_text(self, path: str) -> str:
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"File '{path}' not found")
        with open(file_path, 'r', encoding='utf-8') as f:
            return f.read()

    def load_instance_file(self, path: str) -> Instance:
        return load_instance(self.read_text(path))

    def load_system_file(self, path: str) -> SubstitutableSystem:
        return load_system(self.read_text(path))

    def load_partition_file(self, path: str) -> List[List[str]]:
        return load_partition(self.read_text(path))

    def resolve(self, filename: str) -> Path:
        """Relative names land in the output directory"""
        path = Path(filename)
        return path if path.is_absolute() or path.parent != Path('.') else self.output_dir / path

    def write_atomic(self, filename: str, text: str) -> str:
        """Write text via a temporary file in the target directory

        Returns:
            Full path to saved file
        """
        save_path = self.resolve(filename)
        save_path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=save_path.parent, prefix=f".{save_path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
            os.replace(tmp_name, save_path)
        except OSError as e:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise RuntimeError(f"Failed to write '{save_path}': {e}")
        return str(save_path)
