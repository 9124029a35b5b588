"""
Reports - Pydantic models for decomposition/estimation results and the CLI output envelope
"""
import json
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class InfoStateContribution(BaseModel):
    model_config = ConfigDict(frozen=True)

    info_state: str
    contribution: float
    reach: float


class DecompositionReport(BaseModel):
    """Split of V(Y) into the part explained by one player's actions and the rest"""

    model_config = ConfigDict(frozen=True)

    target_player: int
    conditioning_player: int
    total_variance: float
    explained: float
    residual: float
    explained_ratio: float = Field(ge=0.0, le=1.0)
    per_info_state: List[InfoStateContribution] = Field(default_factory=list)


class ThreeWayReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    skill: float
    chance: float
    remaining: float
    total: float


class EstimateReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimate: float
    standard_error: float = Field(ge=0.0)
    nu: int
    method: Literal["plugin", "plugin-empirical-eta", "regression"]


class EnvelopeMeta(BaseModel):
    tool_version: str
    seed: Optional[int] = None
    input_digest: str


class OutputEnvelope(BaseModel):
    """Everything a CLI command prints; JSON output validates against this model"""

    format: Literal["text", "json", "csv"]
    command: str
    payload: Dict[str, Any]
    meta: EnvelopeMeta

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        lines.extend(_flatten(self.payload))
        lines.extend(_flatten(self.meta.model_dump(mode="json"), "meta."))
        return "\n".join(lines)


def _flatten(data: Any, prefix: str = "") -> List[str]:
    """`key: value` lines for nested dicts/lists; keys in sorted order"""
    if isinstance(data, dict):
        lines = []
        for key in sorted(data):
            lines.extend(_flatten(data[key], f"{prefix}{key}."))
        return lines
    if isinstance(data, list):
        lines = []
        for index, item in enumerate(data):
            lines.extend(_flatten(item, f"{prefix}{index}."))
        return lines
    return [f"{prefix[:-1]}: {_scalar(data)}"]


def _scalar(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return "null"
    return str(value)
