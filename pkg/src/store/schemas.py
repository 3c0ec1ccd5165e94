"""File schemas for surrogate model files and SPOD basis manifests."""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

MODEL_FILE_VERSION = 1
SPOD_MANIFEST_VERSION = 1


class OscillatorRecord(BaseModel):
    """One channel's oscillator."""

    k: float = Field(..., gt=0, description="Stiffness, 1/s^2")
    beta: float = Field(..., gt=0, description="Damping, 1/s")
    D: float = Field(..., gt=0, description="Noise intensity, 1/s^3; equals k*beta")


class ComponentRecord(BaseModel):
    """One triangular map component."""

    dim: int = Field(..., ge=1)
    multi_indices: List[List[int]]
    coefficients: List[float]
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class MapRecord(BaseModel):
    degree: int = Field(..., ge=1)
    names: List[str]
    ordering: List[int]
    means: List[float]
    stds: List[float]
    medians: List[float]
    monotone_domain: List[Tuple[float, float]]
    warnings: List[str] = Field(default_factory=list)
    components: List[ComponentRecord]


class ModelFile(BaseModel):
    """Serialized SurrogateModel."""

    version: Literal[1] = Field(MODEL_FILE_VERSION, description="Schema version")
    kind: Literal["chaos-surrogate-model"] = "chaos-surrogate-model"
    dt: float = Field(..., gt=0, description="Sampling interval, seconds")
    names: List[str] = Field(..., description="Channel names in input order")
    map: MapRecord
    oscillators: List[OscillatorRecord]
    provenance: Dict[str, Any] = Field(default_factory=dict)


class SpodFrequencyRecord(BaseModel):
    omega: float
    energies: List[float]
    n_modes: int = Field(..., ge=0)
    file: str = Field(..., description="Binary file holding the P x n_modes complex modes")


class SpodManifest(BaseModel):
    """Serialized SpodBasis: per-frequency modes in little-endian complex128 binaries."""

    version: Literal[1] = Field(SPOD_MANIFEST_VERSION, description="Schema version")
    kind: Literal["spod-basis"] = "spod-basis"
    n_points: int = Field(..., ge=1)
    n_blocks: int = Field(..., ge=2)
    nperseg: int = Field(..., ge=8)
    overlap: float = Field(..., ge=0, lt=1)
    dt: float = Field(..., gt=0)
    weights_file: Optional[str] = None
    frequencies: List[SpodFrequencyRecord]


class SnapshotHeader(BaseModel):
    """JSON sidecar of a snapshot binary."""

    P: int = Field(..., ge=1, description="Spatial points")
    M: int = Field(..., ge=1, description="Snapshots (columns)")
    dt: float = Field(..., gt=0)
    dtype: Literal["<f8"] = "<f8"
    layout: Literal["PxM-row-major"] = "PxM-row-major"
