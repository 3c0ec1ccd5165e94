"""Report models written by every CLI run."""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field


class ErrorResponse(BaseModel):
    """Error response model."""

    code: int = Field(1, description="Process exit code")
    message: str = Field("Error", description="Error message")
    detail: Optional[str] = Field(None, description="Exception type and offending field, if any")


class RunReport(BaseModel):
    """Provenance and diagnostics of one CLI run."""

    tool_version: str = Field(..., description="Version of chaos-surrogate")
    command: str = Field(..., description="Subcommand name")
    config: Dict[str, Any] = Field(default_factory=dict, description="Echo of flags and resolved configuration")
    seeds: Dict[str, Any] = Field(default_factory=dict, description="Master seeds and the splitting rule")
    outputs: List[str] = Field(default_factory=list, description="Files written")
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)
    status: Literal["ok", "error"] = "ok"
    error: Optional[ErrorResponse] = None
