import pandera as pa


class TrajectoryTable(pa.DataFrameModel):
    """One row per stored iterate; coordinate columns (x, y, u, v or f1.., m1..) sit between step and sum."""

    step: int = pa.Field(ge=0)
    sum: float = pa.Field()
    product: float = pa.Field()


class StepHistogramTable(pa.DataFrameModel):
    steps: int = pa.Field(ge=0)
    count: int = pa.Field(gt=0)


class ScanFailureTable(pa.DataFrameModel):
    sample_index: int = pa.Field(ge=0)
    step: int = pa.Field(ge=0)
    reason: str = pa.Field()
