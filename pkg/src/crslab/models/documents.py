"""Pydantic schemas for instance and system documents"""

from typing import Dict, List

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    NonNegativeInt,
    PositiveInt,
    field_validator,
    model_validator,
)


def _check_probability(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} out of range")
    return value


class ItemDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    inventory: PositiveInt = Field(default=1, description="Units of the resource (k_i).")


class ProductDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    items: List[str] = Field(..., min_length=1, description="Bundle A_j.")
    reward: NonNegativeFloat
    active_prob: float = Field(..., description="x_j, or lambda_j for raw accept-reject data.")
    batch: NonNegativeInt = Field(..., description="Zero-based batch index.")

    @field_validator("active_prob")
    @classmethod
    def check_active_prob(cls, value: float) -> float:
        return _check_probability(value, "active_prob")


class InstanceDocument(BaseModel):
    """Instance document: items, products and ordered batches"""
    model_config = ConfigDict(extra="forbid")

    L: PositiveInt
    items: List[ItemDocument]
    products: List[ProductDocument]
    batches: List[List[str]]


class ActionDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    phi: Dict[str, float] = Field(default_factory=dict, description="Sale probability per product.")

    @field_validator("phi")
    @classmethod
    def check_phi(cls, value: Dict[str, float]) -> Dict[str, float]:
        for prob in value.values():
            _check_probability(prob, "phi")
        return value


class SystemProductDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    items: List[str] = Field(..., min_length=1)
    reward: NonNegativeFloat


class SystemDocument(BaseModel):
    """Substitutable system document: one action table per period"""
    model_config = ConfigDict(extra="forbid")

    periods: PositiveInt
    products: List[SystemProductDocument]
    inventories: Dict[str, PositiveInt]
    actions: List[List[ActionDocument]]

    @model_validator(mode="after")
    def validate_system(self) -> "SystemDocument":
        if len(self.actions) != self.periods:
            raise ValueError(f"Expected {self.periods} action tables, got {len(self.actions)}")
        return self


class PartitionDocument(BaseModel):
    """Item groups certifying an instance as L-partite"""
    model_config = ConfigDict(extra="forbid")

    groups: List[List[str]] = Field(..., min_length=1, description="One list of item ids per group.")
