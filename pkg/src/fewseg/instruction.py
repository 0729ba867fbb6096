"""Instruction rendering, the coordinate-token vocabulary, and output parsing.

All coordinates inside rendered instructions use the 384-symbol vocabulary
[c-0] .. [c-383], one token per axis value.  Visual-token slots such as
[support image] stay symbolic; their byte spans are reported so a downstream
pipeline can splice real visual tokens in.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EncodingError, ParameterError, PolygonParseError, TemplateInputError
from .geometry import Polygon16
from .synthesis import PseudoPair
from .tablegen import CorrespondingTable

COORD_TOKENS = 384
MASK_TOKEN = "[mask]"

TASK_TEMPLATE = (
    "For each object within the class {category} in an image, output coordinates of "
    "a 16-point polygon that encloses the object. These points should be arranged in "
    "a clockwise direction. The output should be a tuple in the format of "
    "(c1, c2, ..., cn), where cn is the coordinates for the n-th object and its "
    "format should be ((x1,y1),(x2,y2),...,(x16,y16)). The coordinate value should "
    "be within {image_size}. For example, for image [support image], the output "
    "should be {support_gt}."
)

PRETRAIN_TEMPLATE = (
    "For the target object in a query image that has the same class as the support "
    "image foreground, output coordinates of a 16-point polygon that encloses the "
    "object. These points should be arranged in a clockwise direction and the format "
    "of their coordinates is ((x1,y1),(x2,y2),...,(x16,y16)). The coordinate value "
    "should be within {image_size}. For support image [pseudo support image], the "
    "foreground is {support_foreground}. For the target object in the query image "
    "[pseudo query image], the output should be {masked_gt}. What is the remaining "
    "points?"
)

MULTISHOT_PREFIX = (
    "For each object within the class {category} in an image, output coordinates of "
    "a 16-point polygon that encloses the object. These points should be arranged in "
    "a clockwise direction. The output should be a tuple in the format of "
    "(c1, c2, ..., cn), where cn is the coordinates for the n-th object and its "
    "format should be ((x1,y1),(x2,y2),...,(x16,y16)). The coordinate value should "
    "be within {image_size}. To accomplish this task, you can refer to the following "
    "properties of {category}: {category} has {attributes}. For example, "
)

MULTISHOT_SUFFIX = ". For image [query image], what is the output?"


@dataclass(frozen=True)
class CoordToken:
    """One axis value v in [0, 383], written [c-v]."""

    value: int

    def __post_init__(self):
        if not (0 <= self.value < COORD_TOKENS):
            raise EncodingError(f"coordinate {self.value} outside [0, {COORD_TOKENS - 1}]")

    @property
    def text(self) -> str:
        return f"[c-{self.value}]"

    _PATTERN = re.compile(r"\[c-(\d+)\]")

    @classmethod
    def parse(cls, text: str) -> "CoordToken":
        m = cls._PATTERN.fullmatch(text)
        if m is None:
            raise EncodingError(f"not a coordinate token: {text!r}")
        return cls(int(m.group(1)))


@dataclass(frozen=True)
class RenderedInstruction:
    """Final instruction text plus the spans of the symbolic visual-token slots."""

    text: str
    placeholder_spans: tuple[tuple[str, int, int], ...]
    kind: str  # task | incontext | pretrain | multishot
    shots: int | None = None


@dataclass(frozen=True)
class PolygonTuple:
    """One or more polygons parsed from (or destined for) model output text."""

    objects: tuple[Polygon16, ...]
    spans: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if len(self.objects) == 0:
            raise ParameterError("a polygon tuple holds at least one polygon")


@dataclass(frozen=True)
class ShotExample:
    """One support shot for the multi-shot instruction."""

    gt_polygons: tuple[Polygon16, ...]
    table: CorrespondingTable
    region_polygons: Mapping[str, Polygon16]


def encode_pair(x: int, y: int) -> str:
    return f"({CoordToken(x).text},{CoordToken(y).text})"


def encode_polygon(poly: Polygon16) -> str:
    """Token text for one polygon: ``(([c-x1],[c-y1]),...,([c-x16],[c-y16]))``."""
    return "(" + ",".join(encode_pair(x, y) for x, y in poly.vertices) + ")"


def encode_polygon_tuple(polys: Sequence[Polygon16]) -> str:
    """Tuple text; a single object is written without the outer tuple wrapper."""
    if len(polys) == 0:
        raise EncodingError("cannot encode an empty polygon tuple")
    if len(polys) == 1:
        return encode_polygon(polys[0])
    return "(" + ",".join(encode_polygon(p) for p in polys) + ")"


def _image_size_text(image_size: int) -> str:
    if not (1 <= image_size <= COORD_TOKENS):
        raise TemplateInputError(
            f"image size {image_size} unsupported by the {COORD_TOKENS}-token vocabulary"
        )
    return f"({image_size}, {image_size})"


def _find_spans(text: str, slots: Sequence[str]) -> tuple[tuple[str, int, int], ...]:
    spans = []
    for slot in slots:
        start = text.index(slot)
        spans.append((slot, start, start + len(slot)))
    return tuple(spans)


def render_task_instruction(category: str, image_size: int,
                            support_gt: Sequence[Polygon16]) -> RenderedInstruction:
    """Segmentation task instruction with the support shown as a worked example."""
    if not category.strip():
        raise TemplateInputError("category must be a non-empty noun")
    if len(support_gt) == 0:
        raise TemplateInputError("support ground truth must contain at least one polygon")
    text = TASK_TEMPLATE.format(
        category=category,
        image_size=_image_size_text(image_size),
        support_gt=encode_polygon_tuple(list(support_gt)),
    )
    return RenderedInstruction(text, _find_spans(text, ["[support image]"]), "task")


def _region_clauses(table: CorrespondingTable,
                    region_polygons: Mapping[str, Polygon16]) -> list[str]:
    if set(table.rows) != set(region_polygons):
        raise TemplateInputError("table rows and region polygons disagree on region ids")
    clauses = []
    for region_id, attrs in table.rows.items():
        if not attrs:
            continue  # unmatched regions are omitted
        clauses.append(f"{encode_polygon(region_polygons[region_id])} is {', '.join(attrs)}")
    return clauses


def render_incontext_instruction(category: str, attributes: Sequence[str],
                                 table: CorrespondingTable,
                                 region_polygons: Mapping[str, Polygon16],
                                 ) -> RenderedInstruction:
    """Fine-grained in-context instruction listing attributes and matched regions."""
    if not category.strip():
        raise TemplateInputError("category must be a non-empty noun")
    if not attributes:
        raise TemplateInputError("attribute list must be non-empty")
    text = f"The {category} has {', '.join(attributes)}."
    clauses = _region_clauses(table, region_polygons)
    slots: list[str] = []
    if clauses:
        text += f" For example, in [support image], {', '.join(clauses)}."
        slots.append("[support image]")
    return RenderedInstruction(text, _find_spans(text, slots), "incontext")


def render_pretrain_instruction(pair: PseudoPair, hinted_indices: Sequence[int],
                                m: int) -> RenderedInstruction:
    """Pretraining instruction: hinted vertices as tokens, the rest as [mask]."""
    hinted = set(int(i) for i in hinted_indices)
    if len(hinted) != len(hinted_indices) or len(hinted) != m:
        raise TemplateInputError(f"need exactly {m} distinct hinted indices")
    if any(i < 0 or i >= 16 for i in hinted):
        raise TemplateInputError("hinted indices must lie in [0, 16)")
    if not pair.support_polygons or not pair.query_polygons:
        raise TemplateInputError("pair lacks extracted polygons for instruction rendering")
    target = pair.query_polygons[0]
    parts = [encode_pair(x, y) if k in hinted else MASK_TOKEN
             for k, (x, y) in enumerate(target.vertices)]
    text = PRETRAIN_TEMPLATE.format(
        image_size=_image_size_text(pair.width),
        support_foreground=encode_polygon_tuple(pair.support_polygons),
        masked_gt="(" + ",".join(parts) + ")",
    )
    return RenderedInstruction(
        text,
        _find_spans(text, ["[pseudo support image]", "[pseudo query image]"]),
        "pretrain",
    )


def render_multishot_instruction(category: str, attributes: Sequence[str],
                                 shots: Sequence[ShotExample],
                                 image_size: int) -> RenderedInstruction:
    """Combined instruction with K support demonstrations, in order."""
    if not category.strip():
        raise TemplateInputError("category must be a non-empty noun")
    if len(shots) == 0:
        raise TemplateInputError("multi-shot instruction needs at least one support shot")
    if not attributes:
        raise TemplateInputError("attribute list must be non-empty")
    text = MULTISHOT_PREFIX.format(
        category=category,
        image_size=_image_size_text(image_size),
        attributes=", ".join(attributes),
    )
    pieces = []
    slots = []
    for k, shot in enumerate(shots, start=1):
        slot = f"[support image {k}]"
        slots.append(slot)
        clause = (f"for image {slot}, the output should be "
                  f"{encode_polygon_tuple(list(shot.gt_polygons))}")
        region_clauses = _region_clauses(shot.table, shot.region_polygons)
        if region_clauses:
            clause += f", because in these regions, {', '.join(region_clauses)}"
        pieces.append(clause)
    text += "; ".join(pieces) + MULTISHOT_SUFFIX
    slots.append("[query image]")
    return RenderedInstruction(text, _find_spans(text, slots), "multishot",
                               shots=len(shots))


class _Scanner:
    """Cursor over the raw output text; whitespace is insignificant between tokens."""

    _INT = re.compile(r"\d+")
    _TOKEN = re.compile(r"\[c-(\d+)\]")

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str, what: str) -> None:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise PolygonParseError(f"unexpected end of input, expected '{ch}' {what}", self.pos)
        if self.text[self.pos] != ch:
            raise PolygonParseError(
                f"expected '{ch}' {what}, found {self.text[self.pos]!r}", self.pos)
        self.pos += 1

    def coordinate(self) -> int:
        self.skip_ws()
        m = self._TOKEN.match(self.text, self.pos)
        if m is None:
            m = self._INT.match(self.text, self.pos)
        if m is None:
            got = self.text[self.pos] if self.pos < len(self.text) else "end of input"
            raise PolygonParseError(
                f"expected a coordinate token or integer, found {got!r}", self.pos)
        value = int(m.group(1) if m.lastindex else m.group(0))
        if value >= COORD_TOKENS:
            raise PolygonParseError(
                f"coordinate {value} outside [0, {COORD_TOKENS - 1}]", self.pos)
        self.pos = m.end()
        return value

    def _pair(self) -> tuple[int, int]:
        self.expect("(", "to open a coordinate pair")
        x = self.coordinate()
        self.expect(",", "between pair coordinates")
        y = self.coordinate()
        self.expect(")", "to close the coordinate pair")
        return x, y

    def polygon(self) -> tuple[Polygon16, tuple[int, int]]:
        self.skip_ws()
        start = self.pos
        self.expect("(", "to open a polygon")
        pairs = [self._pair()]
        while True:
            self.skip_ws()
            if self.peek() == ",":
                self.pos += 1
                if len(pairs) == 16:
                    self.skip_ws()
                    raise PolygonParseError(
                        "expected 16 vertices, found more", self.pos)
                pairs.append(self._pair())
            else:
                break
        self.skip_ws()
        if len(pairs) != 16:
            raise PolygonParseError(
                f"expected 16 vertices, found {len(pairs)}", self.pos)
        self.expect(")", "to close the polygon")
        return Polygon16(tuple(pairs)), (start, self.pos)


def parse_polygon_output(text: str) -> PolygonTuple:
    """Parse model output: either one polygon or a tuple of polygons.

    Grammar: TUPLE := '(' POLY (',' POLY)* ')' | POLY;
    POLY := '(' PAIR (',' PAIR) x15 ')'; PAIR := '(' COORD ',' COORD ')';
    COORD := '[c-v]' | bare integer in [0, 383].  Whitespace is tolerated
    anywhere between tokens.
    """
    sc = _Scanner(text)
    # Nesting depth before the first coordinate tells the two TUPLE forms apart:
    # three opens means an outer tuple wrapper, two means a single polygon.
    probe = _Scanner(text)
    depth = 0
    while probe.peek() == "(" and depth < 3:
        probe.pos += 1
        depth += 1
    polygons: list[Polygon16] = []
    spans: list[tuple[int, int]] = []
    if depth >= 3:
        sc.expect("(", "to open the polygon tuple")
        poly, span = sc.polygon()
        polygons.append(poly)
        spans.append(span)
        while sc.peek() == ",":
            sc.pos += 1
            poly, span = sc.polygon()
            polygons.append(poly)
            spans.append(span)
        sc.expect(")", "to close the polygon tuple")
    else:
        poly, span = sc.polygon()
        polygons.append(poly)
        spans.append(span)
    sc.skip_ws()
    if sc.pos != len(sc.text):
        raise PolygonParseError(
            f"trailing characters after polygon tuple: {sc.text[sc.pos]!r}", sc.pos)
    return PolygonTuple(tuple(polygons), tuple(spans))
