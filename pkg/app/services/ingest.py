"""
Reading external datasets into a Dataset.

A dataset file has a header row and one row per unit; by default the
columns are y, x, s1, s2 followed by any covariates. A latent column u,
written by synthetic exports, is never a covariate unless named.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from app.estimation.dgp import LATENT_COLUMN, Dataset
from app.estimation.errors import IngestionError
from app.estimation.spatial_core import LocationSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColumnMap:
    """Which columns hold the outcome, exposure, locations and covariates."""

    outcome: str = "y"
    exposure: str = "x"
    locations: tuple = ("s1", "s2")
    covariates: tuple = None

    @property
    def required(self):
        return (self.outcome, self.exposure, *self.locations)


@dataclass(frozen=True)
class IngestedDataset:
    """
    A Dataset read from a table, with the columns it came from.

    Attributes:
        dataset (Dataset): the units kept after the row filter
        columns (ColumnMap): source columns
        covariate_names (tuple): covariate columns, in order
        rows (int): rows kept
        dropped (int): rows removed for missing cells
        normalized (bool): whether quantitative columns were z-scored
    """

    dataset: Dataset
    columns: ColumnMap
    covariate_names: tuple = field(default_factory=tuple)
    rows: int = 0
    dropped: int = 0
    normalized: bool = False


def _numeric(frame, column):
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = (values.isna() & frame[column].notna()) | np.isinf(values)
    if bad.any():
        index = bad.idxmax()
        row = int(frame.index.get_loc(index)) + 2
        raise IngestionError(
            f"Non-numeric or infinite value '{frame.at[index, column]}' "
            f"in column '{column}' at row {row}.",
            row=row, column=column,
        )
    return values


def ingest_frame(frame, columns=None, normalize=False):
    """
    Validate and convert a DataFrame.

    Rows with a missing cell in any used column are dropped. With
    `normalize`, outcome, exposure and covariates are z-scored; locations
    are left as they are.

    Raises:
        IngestionError: a required column is absent or a cell is not a finite number
    """
    columns = columns or ColumnMap()
    missing = [name for name in columns.required if name not in frame.columns]
    if missing:
        raise IngestionError(f"Missing column(s): {', '.join(missing)}.", column=missing[0])

    if columns.covariates is None:
        covariate_names = tuple(c for c in frame.columns
                                if c not in columns.required and c != LATENT_COLUMN)
    else:
        covariate_names = tuple(columns.covariates)
        absent = [name for name in covariate_names if name not in frame.columns]
        if absent:
            raise IngestionError(f"Missing covariate column(s): {', '.join(absent)}.", column=absent[0])

    used = [*columns.required, *covariate_names]
    numeric = pd.DataFrame({name: _numeric(frame, name) for name in used}, index=frame.index)
    kept = numeric.dropna()
    dropped = len(numeric) - len(kept)
    if dropped:
        logger.info("Dropped %d row(s) with missing values", dropped)
    if kept.empty:
        raise IngestionError("No complete rows remain after dropping missing values.")

    if normalize:
        scaled = [columns.outcome, columns.exposure, *covariate_names]
        spread = kept[scaled].std(ddof=0).replace(0.0, 1.0)
        kept = kept.copy()
        kept[scaled] = (kept[scaled] - kept[scaled].mean()) / spread

    covariates = kept[list(covariate_names)].to_numpy(dtype=float) if covariate_names else None
    dataset = Dataset(
        locations=LocationSet.bounding(kept[list(columns.locations)].to_numpy(dtype=float)),
        x=kept[columns.exposure].to_numpy(dtype=float),
        y=kept[columns.outcome].to_numpy(dtype=float),
        covariates=covariates,
    )
    return IngestedDataset(dataset=dataset, columns=columns, covariate_names=covariate_names,
                           rows=len(kept), dropped=dropped, normalized=normalize)


def ingest_csv(path, columns=None, normalize=False):
    """Read a delimited-text dataset file."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestionError(f"Cannot read dataset '{path}': {e}") from e
    return ingest_frame(frame, columns, normalize)


def ingest_records(records, columns=None, normalize=False):
    """Build a dataset from a list of row mappings (the REST payload)."""
    if not records:
        raise IngestionError("No rows supplied.")
    return ingest_frame(pd.DataFrame.from_records(records), columns, normalize)

