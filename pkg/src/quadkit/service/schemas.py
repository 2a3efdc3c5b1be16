"""Request/response models for the HTTP service.

Responses that correspond to files or terminal output carry the canonical
text (or base64 bytes) alongside the structured fields, so thin clients
write service output verbatim instead of re-serialising numbers themselves.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

Corners = list[float]  # 8 values: x1,y1,...,x4,y4


class HealthResponse(BaseModel):
    status: str
    version: str


class IouRequest(BaseModel):
    a: Corners = Field(min_length=8, max_length=8)
    b: Corners = Field(min_length=8, max_length=8)


class IouResponse(BaseModel):
    iou: float
    text: str


class GridRequest(BaseModel):
    quad: Corners = Field(min_length=8, max_length=8)
    stride: int = Field(default=1, ge=1)
    kernel_h: int = Field(default=3, ge=2)
    kernel_w: int = Field(default=3, ge=2)


class GridResponse(BaseModel):
    points: list[list[float]]  # row-major (x, y) pairs, h·w entries
    offsets: list[list[float]] | None  # row-major (dy, dx), odd kernels only
    text: str


class DetectionModel(BaseModel):
    quad: Corners = Field(min_length=8, max_length=8)
    score: float = Field(ge=0.0, le=1.0)


class PnmsRequest(BaseModel):
    file_text: str
    threshold: float = Field(default=0.3, gt=0.0, lt=1.0)


class PnmsResponse(BaseModel):
    detections: list[DetectionModel]
    file_text: str


class LevelModel(BaseModel):
    level: int
    lo: float = Field(ge=0.0)
    hi: float | None = None  # None marks an unbounded top range


class TargetsRequest(BaseModel):
    gt_text: str
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    shrink_r: float = Field(default=0.25, ge=0.0, lt=0.5)
    levels: list[LevelModel] | None = None


class TargetLevelSummary(BaseModel):
    level: int
    stride: int
    height: int
    width: int
    positive: int
    ignore: int
    negative: int


class TargetsResponse(BaseModel):
    summary: str
    blob_b64: str
    levels: list[TargetLevelSummary]


class EvaluateRequest(BaseModel):
    gt_files: dict[str, str]
    det_files: dict[str, str]
    taus: list[float] = Field(default=[0.5, 0.75], min_length=1)


class EvalRowModel(BaseModel):
    tau: float
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f_measure: float


class EvaluateResponse(BaseModel):
    results: list[EvalRowModel]
    report: str


class SynthRequest(BaseModel):
    seed: int = Field(ge=0)
    images: int = Field(default=1, ge=1)
    noise: float = Field(default=0.0, ge=0.0)


class SynthResponse(BaseModel):
    files: dict[str, str]


class ErrorResponse(BaseModel):
    error: str
    detail: str
