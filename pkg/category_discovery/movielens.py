"""MovieLens-format ratings: parsing, title subsets and rating similarity."""
from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np  # type: ignore
import pandas as pd  # type: ignore

from category_discovery import settings
from category_discovery.exceptions import DatasetIOError, InvalidParameter, MalformedInput
from category_discovery.partition import Partition
from category_discovery.similarity_graph import SimilarityMatrix

logger = logging.getLogger(__name__)

RATING_COLUMNS = ["user", "item", "rating", "timestamp"]

SUBSET_DIR = Path(__file__).parent / "subsets"

_PANDAS_LINE = re.compile(r"line (\d+)")


@dataclass(frozen=True, eq=False)
class RatingsTable:
    """Ratings as integer columns ``user, item, rating, timestamp`` and the item titles."""
    ratings: pd.DataFrame
    titles: Dict[int, str]

    @property
    def num_ratings(self) -> int:
        return len(self.ratings)

    @property
    def num_users(self) -> int:
        return int(self.ratings["user"].nunique())

    @property
    def num_items(self) -> int:
        return int(self.ratings["item"].nunique())

    def title(self, item: int) -> str:
        return self.titles.get(item, f"item {item}")


def _read_table(
    path: Path, *, sep: str, names: List[str], encoding: str, usecols: Optional[List[int]] = None,
) -> pd.DataFrame:
    """Read every field as text; with `usecols` only those columns are kept, renamed to `names`.

    Row ``i`` of the result is line ``i + 1`` of the file; blank lines are rejected.
    """
    try:
        frame = pd.read_csv(
            path, sep=sep, header=None, names=None if usecols else names, usecols=usecols, dtype=str,
            encoding=encoding, quoting=csv.QUOTE_NONE, keep_default_na=False, skip_blank_lines=False,
        )
    except pd.errors.EmptyDataError:
        return pd.DataFrame({name: pd.Series(dtype=str) for name in names})
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise MalformedInput(str(e), path=str(path), line=int(match.group(1)) if match else None) from e
    except OSError as e:
        raise DatasetIOError(str(path), e.strerror or str(e)) from e
    if usecols:
        frame.columns = names
    blank = frame.fillna("").apply(lambda column: column.str.strip() == "").all(axis=1)
    if blank.any():
        row = int(np.flatnonzero(blank.to_numpy())[0])
        raise MalformedInput("blank line", path=str(path), line=row + 1)
    return frame


def _integer_column(frame: pd.DataFrame, column: str, path: Path) -> pd.Series:
    values = pd.to_numeric(frame[column].str.strip(), errors="coerce")
    bad = values.isna() | (values != values.round())
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise MalformedInput(
            f"expected an integer, got {frame[column].iloc[row]!r}", path=str(path), line=row + 1, field=column,
        )
    return values.astype(np.int64)


def parse_ratings(data_file: Path, item_file: Path) -> RatingsTable:
    """Read a tab separated ``user item rating timestamp`` file and a pipe separated item list.

    Ratings must be whole numbers from 0 to 5 and each (user, item) pair may
    appear once. Errors name the file, the 1-based line and the field.
    """
    data_file, item_file = Path(data_file), Path(item_file)
    raw = _read_table(data_file, sep="\t", names=RATING_COLUMNS, encoding="latin-1")
    ratings = pd.DataFrame({column: _integer_column(raw, column, data_file) for column in RATING_COLUMNS})

    out_of_range = (ratings["rating"] < 0) | (ratings["rating"] > settings.rating_scale)
    if out_of_range.any():
        row = int(np.flatnonzero(out_of_range.to_numpy())[0])
        raise MalformedInput(
            f"rating {ratings['rating'].iloc[row]} outside [0, {settings.rating_scale}]",
            path=str(data_file), line=row + 1, field="rating",
        )
    duplicated = ratings.duplicated(["user", "item"])
    if duplicated.any():
        row = int(np.flatnonzero(duplicated.to_numpy())[0])
        first = int(np.flatnonzero(
            ((ratings["user"] == ratings["user"].iloc[row]) & (ratings["item"] == ratings["item"].iloc[row])).to_numpy()
        )[0])
        raise MalformedInput(
            f"user {ratings['user'].iloc[row]} already rated item {ratings['item'].iloc[row]} on line {first + 1}",
            path=str(data_file), line=row + 1,
        )

    items = _read_table(item_file, sep="|", names=["item", "title"], usecols=[0, 1], encoding="latin-1")
    item_ids = _integer_column(items, "item", item_file)
    titles = dict(zip(item_ids.tolist(), items["title"].tolist()))

    table = RatingsTable(ratings.reset_index(drop=True), titles)
    logger.info("Read %d ratings by %d users of %d items from %s",
                table.num_ratings, table.num_users, table.num_items, data_file)
    return table


def read_movielens_dir(directory: Path) -> RatingsTable:
    """Parse ``u.data`` and ``u.item`` from an unpacked ml-100k directory."""
    directory = Path(directory)
    return parse_ratings(directory / "u.data", directory / "u.item")


@dataclass(frozen=True)
class SubsetSpec:
    """Which titles make up the analysis universe.

    `exact_titles` must equal a title ignoring case; `patterns` match any
    title containing them, ignoring case.
    """
    patterns: Tuple[str, ...] = ()
    exact_titles: Tuple[str, ...] = ()

    @classmethod
    def from_lines(cls, lines: Sequence[str]) -> SubsetSpec:
        patterns, exact = [], []
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("="):
                exact.append(line[1:].strip())
            else:
                patterns.append(line)
        return cls(tuple(patterns), tuple(exact))

    @classmethod
    def from_file(cls, path: Path) -> SubsetSpec:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise DatasetIOError(str(path), e.strerror or str(e)) from e
        spec = cls.from_lines(text.splitlines())
        if not spec.patterns and not spec.exact_titles:
            raise MalformedInput("subset file lists no titles", path=str(path))
        return spec

    @classmethod
    def bundled(cls, name: str) -> SubsetSpec:
        """One of the subset files shipped with the package, by stem."""
        path = SUBSET_DIR / f"{name}.txt"
        if not path.exists():
            known = sorted(p.stem for p in SUBSET_DIR.glob("*.txt"))
            raise InvalidParameter(f"no bundled subset '{name}', expected one of {known}")
        return cls.from_file(path)

    def resolve(self, titles: Dict[int, str]) -> List[int]:
        """Sorted ids of every item whose title matches."""
        exact = {t.casefold() for t in self.exact_titles}
        patterns = [p.casefold() for p in self.patterns]
        chosen = sorted(
            item for item, title in titles.items()
            if title.casefold() in exact or any(p in title.casefold() for p in patterns)
        )
        found = {titles[item].casefold() for item in chosen}
        for title in self.exact_titles:
            if title.casefold() not in found:
                logger.warning("Subset title %r matches no item", title)
        if len(chosen) < 2:
            raise InvalidParameter(f"subset resolves to {len(chosen)} item(s), need at least 2")
        return chosen


def build_rating_similarity(table: RatingsTable, subset: SubsetSpec) -> Tuple[SimilarityMatrix, List[int]]:
    """Mean rating similarity of every pair of subset items over their co-raters.

    A user who rated both items contributes ``1 - |r_a - r_b| / 5``. Pairs
    nobody rated together get similarity 0 and a co-rater count of 0.
    Returns the matrix and the item ids its rows stand for.
    """
    items = subset.resolve(table.titles)
    frame = table.ratings[table.ratings["item"].isin(items)]
    wide = frame.pivot(index="user", columns="item", values="rating").reindex(columns=items)

    rated = wide.notna().to_numpy()
    values = wide.fillna(0).to_numpy(np.int64)
    k = len(items)
    co_raters = rated.T.astype(np.int64) @ rated.astype(np.int64)

    distance = np.zeros((k, k), dtype=np.int64)
    for a in range(k):
        both = rated[:, [a]] & rated
        distance[a] = np.where(both, np.abs(values[:, [a]] - values), 0).sum(axis=0)

    with np.errstate(divide="ignore", invalid="ignore"):
        mean_sim = np.where(co_raters > 0, 1.0 - distance / (co_raters * settings.rating_scale), 0.0)
    np.fill_diagonal(mean_sim, 1.0)
    logger.info("Rating similarity over %d items from %d users", k, wide.shape[0])
    return SimilarityMatrix(mean_sim, co_raters), items


def category_listing(partition: Partition, items: Sequence[int], titles: Dict[int, str]) -> str:
    """One line per community: ``Category k: title, title, ...``."""
    if partition.n != len(items):
        raise InvalidParameter(f"partition covers {partition.n} vertices but {len(items)} items were given")
    lines = []
    for index, members in enumerate(partition.communities(), start=1):
        names = ", ".join(titles.get(items[v], f"item {items[v]}") for v in sorted(members))
        lines.append(f"Category {index}: {names}")
    return "\n".join(lines)
