"""Pluggable data collection, normalized record emission, and deviation alerts.

Sources are polled on their own schedule and normalized into
:class:`OutputRecord` values: the ingest-schema payload plus provenance
(``source_id``, ``fetched_at``). Records are emitted as JSON lines or as
one XML ``<record>`` element per line; both forms round-trip losslessly
through the parsers in this module. Item ids are deduplicated per source
within a run (at-least-once polling, id-based dedup).

Deviation notification is a rolling z-score over fixed-width time buckets
of a stream metric (record volume or mean sentiment): each bucket is
compared against the mean and standard deviation of the preceding window,
with a floored sigma so a flat history followed by any change still
divides cleanly.
"""

from __future__ import annotations

import email.utils
import json
import re
import statistics
import time
import urllib.error
import urllib.request
import xml.etree.ElementTree as ET
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import IO, Callable, Iterable, Sequence, Union

from .errors import EmptyCorpusError, RecordParseError
from .ingest import (
    InteractionRecord,
    format_rfc3339,
    parse_corpus,
    parse_rfc3339,
    record_from_dict,
    record_to_dict,
)
from .model import Handle
from .textmine import Lexicon, sentiment

_HASHTAG_RE = re.compile(r"#(\w+)")


@dataclass(frozen=True)
class SourceSpec:
    id: str
    kind: str  # file | rss | http-json
    location: str
    poll_interval: float = 60.0  # seconds; ignored for file sources

    def __post_init__(self):
        if self.kind not in ("file", "rss", "http-json"):
            raise ValueError(f"unknown source kind: {self.kind!r}")
        if not self.id:
            raise ValueError("source id must be non-empty")


@dataclass(frozen=True)
class OutputRecord:
    source_id: str
    fetched_at: datetime
    payload: InteractionRecord


@dataclass
class SourceState:
    """Per-source dedup and monotonic-fetch bookkeeping for one run."""

    seen_ids: set[str] = field(default_factory=set)
    duplicates_dropped: int = 0
    last_fetched_at: datetime | None = None


@dataclass(frozen=True)
class SourceDiagnostic:
    source_id: str
    reason: str
    retryable: bool = False


@dataclass(frozen=True)
class DeviationConfig:
    metric: str = "volume"  # volume | mean_sentiment
    window: int = 20
    z_threshold: float = 3.0
    sigma_floor: float = 1e-6
    bucket_seconds: float = 60.0

    def __post_init__(self):
        if self.metric not in ("volume", "mean_sentiment"):
            raise ValueError(f"unknown deviation metric: {self.metric!r}")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.z_threshold <= 0 or self.sigma_floor <= 0:
            raise ValueError("z_threshold and sigma_floor must be positive")
        if self.bucket_seconds <= 0:
            raise ValueError("bucket_seconds must be positive")


@dataclass(frozen=True)
class AlertEvent:
    metric: str
    bucket: datetime
    observed: float
    rolling_mean: float
    rolling_std: float
    z_score: float

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "bucket": format_rfc3339(self.bucket),
            "observed": self.observed,
            "rolling_mean": self.rolling_mean,
            "rolling_std": self.rolling_std,
            "z_score": self.z_score,
        }


def _slug_handle(raw: str) -> Handle:
    cleaned = re.sub(r"[^0-9A-Za-z_.-]+", "_", raw.strip()).strip("_")
    return Handle(cleaned or "unknown_source")


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _feed_records(text: str, fallback_ts: datetime) -> list[InteractionRecord]:
    """Map RSS 2.0 / Atom items to interaction records.

    Item text is title + " " + description/summary; the feed author (or
    feed title) becomes the authoring handle. Hashtags come from category
    elements and inline #tags so topic filters keep working on collected
    corpora.
    """
    root = ET.fromstring(text)
    rootname = _local_name(root.tag)

    def first(elem, *names) -> str | None:
        if elem is None:
            return None
        for name in names:
            for child in elem:
                if _local_name(child.tag) == name and child.text and child.text.strip():
                    return child.text.strip()
        return None

    if rootname == "rss":
        channel = next((c for c in root if _local_name(c.tag) == "channel"), root)
        feed_author = first(channel, "managingEditor", "title") or "unknown_feed"
        items = [e for e in channel if _local_name(e.tag) == "item"]
    elif rootname == "feed":
        author_elem = next((c for c in root if _local_name(c.tag) == "author"), None)
        feed_author = first(author_elem, "name") or first(root, "title") or "unknown_feed"
        items = [e for e in root if _local_name(e.tag) == "entry"]
    else:
        raise RecordParseError(f"not an RSS or Atom document (root <{rootname}>)")

    author = _slug_handle(feed_author)
    records = []
    for item in items:
        title = first(item, "title") or ""
        body = first(item, "description", "summary", "content") or ""
        text_joined = (title + " " + body).strip()
        rid = first(item, "guid", "id", "link")
        if rid is None:
            rid = f"{author.value}:{zlib.crc32(text_joined.encode('utf-8')):08x}"
        ts = fallback_ts
        raw_ts = first(item, "pubDate")
        if raw_ts:
            try:
                parsed = email.utils.parsedate_to_datetime(raw_ts)
                if parsed.tzinfo is None:
                    parsed = parsed.replace(tzinfo=timezone.utc)
                ts = parsed.astimezone(timezone.utc)
            except (TypeError, ValueError):
                pass
        else:
            raw_ts = first(item, "updated", "published")
            if raw_ts:
                try:
                    ts = parse_rfc3339(raw_ts)
                except ValueError:
                    pass
        tags = [
            c.text.strip().lstrip("#").lower()
            for c in item.iter()
            if _local_name(c.tag) == "category" and c.text and c.text.strip()
        ]
        tags += [t.lower() for t in _HASHTAG_RE.findall(text_joined)]
        seen: dict[str, None] = {}
        for t in tags:
            seen.setdefault(t)
        records.append(
            InteractionRecord(
                id=rid,
                author=author,
                text=text_joined,
                timestamp=ts,
                hashtags=tuple(seen),
            )
        )
    return records


def _fetch_url(location: str, timeout: float = 30.0) -> str:
    with urllib.request.urlopen(location, timeout=timeout) as response:
        return response.read().decode("utf-8", errors="replace")


def poll_source(
    spec: SourceSpec,
    state: SourceState | None = None,
    now_fn: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
) -> tuple[list[OutputRecord], list[SourceDiagnostic]]:
    """Fetch one round from a source and wrap new items as output records.

    Unreachable locations yield a retryable diagnostic instead of raising;
    malformed items yield per-item diagnostics. Ids already seen in
    ``state`` are dropped and counted.
    """
    state = state if state is not None else SourceState()
    diagnostics: list[SourceDiagnostic] = []
    fetched_at = now_fn()
    if state.last_fetched_at is not None and fetched_at < state.last_fetched_at:
        fetched_at = state.last_fetched_at

    records: list[InteractionRecord] = []
    try:
        if spec.kind == "file":
            parsed, diags = parse_corpus(spec.location)
            records = parsed
            diagnostics.extend(
                SourceDiagnostic(spec.id, f"line {d.line_no}: {d.reason}") for d in diags
            )
        elif spec.kind == "rss":
            if "://" in spec.location:
                text = _fetch_url(spec.location)
            else:
                text = Path(spec.location).read_text(encoding="utf-8")
            records = _feed_records(text, fetched_at)
        else:  # http-json
            text = _fetch_url(spec.location)
            lines = [ln for ln in text.splitlines() if ln.strip()]
            for line_no, line in enumerate(lines, start=1):
                try:
                    records.append(record_from_dict(json.loads(line)))
                except (json.JSONDecodeError, ValueError, TypeError) as exc:
                    diagnostics.append(
                        SourceDiagnostic(spec.id, f"line {line_no}: {exc}")
                    )
    except (OSError, urllib.error.URLError) as exc:
        diagnostics.append(
            SourceDiagnostic(spec.id, f"unreachable: {exc}", retryable=True)
        )
        return [], diagnostics
    except (ET.ParseError, RecordParseError, EmptyCorpusError) as exc:
        diagnostics.append(SourceDiagnostic(spec.id, str(exc)))
        return [], diagnostics

    out: list[OutputRecord] = []
    for record in records:
        if record.id in state.seen_ids:
            state.duplicates_dropped += 1
            continue
        state.seen_ids.add(record.id)
        out.append(OutputRecord(spec.id, fetched_at, record))
    state.last_fetched_at = fetched_at
    return out, diagnostics


# --- serialization -----------------------------------------------------------

def output_record_to_dict(record: OutputRecord) -> dict:
    payload = record_to_dict(record.payload)
    payload["source_id"] = record.source_id
    payload["fetched_at"] = format_rfc3339(record.fetched_at)
    return payload


def output_record_from_dict(obj: dict) -> OutputRecord:
    if "source_id" not in obj or "fetched_at" not in obj:
        raise RecordParseError("output record needs source_id and fetched_at")
    return OutputRecord(
        source_id=str(obj["source_id"]),
        fetched_at=parse_rfc3339(str(obj["fetched_at"])),
        payload=record_from_dict(obj),
    )


def _escape_newlines(serialized: str) -> str:
    return serialized.replace("\r", "&#13;").replace("\n", "&#10;")


def output_record_to_xml(record: OutputRecord) -> str:
    """One ``<record>`` element on a single line.

    List fields use ``<tag>`` child elements; ``in_reply_to`` is omitted
    when absent. Literal newlines in text content are escaped as character
    references so the line framing of sinks survives arbitrary text.
    """
    payload = record.payload
    root = ET.Element("record")
    ET.SubElement(root, "id").text = payload.id
    ET.SubElement(root, "author").text = payload.author.value
    ET.SubElement(root, "text").text = payload.text
    tags = ET.SubElement(root, "hashtags")
    for t in payload.hashtags:
        ET.SubElement(tags, "tag").text = t
    if payload.in_reply_to is not None:
        ET.SubElement(root, "in_reply_to").text = payload.in_reply_to.value
    mentions = ET.SubElement(root, "mentions")
    for m in payload.mentions:
        ET.SubElement(mentions, "tag").text = m.value
    follows = ET.SubElement(root, "follows")
    for f in payload.follows:
        ET.SubElement(follows, "tag").text = f.value
    ET.SubElement(root, "timestamp").text = format_rfc3339(payload.timestamp)
    ET.SubElement(root, "source_id").text = record.source_id
    ET.SubElement(root, "fetched_at").text = format_rfc3339(record.fetched_at)
    return _escape_newlines(ET.tostring(root, encoding="unicode"))


def output_record_from_xml(text: str) -> OutputRecord:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise RecordParseError(f"bad record XML: {exc}") from exc
    if _local_name(root.tag) != "record":
        raise RecordParseError(f"expected <record>, got <{root.tag}>")

    def text_of(name: str, default: str | None = None) -> str | None:
        elem = root.find(name)
        if elem is None:
            return default
        return elem.text or ""

    def tag_list(name: str) -> list[str]:
        elem = root.find(name)
        if elem is None:
            return []
        return [(t.text or "") for t in elem.findall("tag")]

    rid = text_of("id")
    author = text_of("author")
    ts = text_of("timestamp")
    if rid is None or author is None or ts is None:
        raise RecordParseError("record XML is missing id, author, or timestamp")
    source_id = text_of("source_id")
    fetched_at = text_of("fetched_at")
    if source_id is None or fetched_at is None:
        raise RecordParseError("record XML is missing source_id or fetched_at")
    reply = text_of("in_reply_to")
    payload = InteractionRecord(
        id=rid,
        author=Handle(author),
        text=text_of("text", "") or "",
        timestamp=parse_rfc3339(ts),
        hashtags=tuple(tag_list("hashtags")),
        in_reply_to=Handle(reply) if reply else None,
        mentions=tuple(Handle(m) for m in tag_list("mentions")),
        follows=tuple(Handle(f) for f in tag_list("follows")),
    )
    return OutputRecord(source_id, parse_rfc3339(fetched_at), payload)


def emit(record: OutputRecord, format: str, sink: IO[str]) -> None:
    """Write one record to the sink, one line per record."""
    if format == "json":
        sink.write(json.dumps(output_record_to_dict(record), ensure_ascii=False) + "\n")
    elif format == "xml":
        sink.write(output_record_to_xml(record) + "\n")
    else:
        raise ValueError(f"unknown emission format: {format!r}")


def read_records(source: Union[str, Path, IO[str]], format: str) -> list[OutputRecord]:
    """Parse a sink written by :func:`emit` back into output records."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_records(fh, format)
    out = []
    for line in source:
        line = line.strip()
        if not line:
            continue
        if format == "json":
            out.append(output_record_from_dict(json.loads(line)))
        elif format == "xml":
            out.append(output_record_from_xml(line))
        else:
            raise ValueError(f"unknown emission format: {format!r}")
    return out


# --- deviation notification --------------------------------------------------

def bucketize(
    records: Iterable[OutputRecord | InteractionRecord],
    config: DeviationConfig,
    lexicon: Lexicon | None = None,
) -> list[tuple[datetime, float]]:
    """Aggregate records into fixed-width time buckets of the chosen metric.

    Volume counts records per bucket; mean_sentiment averages the lexicon
    score (and requires a lexicon). Gaps between the first and last bucket
    are filled with zero so silence is observable.
    """
    if config.metric == "mean_sentiment" and lexicon is None:
        raise ValueError("mean_sentiment bucketing needs a lexicon")
    width = timedelta(seconds=config.bucket_seconds)
    epoch = datetime(1970, 1, 1, tzinfo=timezone.utc)
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for item in records:
        payload = item.payload if isinstance(item, OutputRecord) else item
        bucket = int((payload.timestamp - epoch) // width)
        counts[bucket] = counts.get(bucket, 0) + 1
        if config.metric == "mean_sentiment":
            sums[bucket] = sums.get(bucket, 0.0) + sentiment(payload.text, lexicon).score
    if not counts:
        return []
    series = []
    for b in range(min(counts), max(counts) + 1):
        ts = epoch + b * width
        if config.metric == "volume":
            series.append((ts, float(counts.get(b, 0))))
        else:
            n = counts.get(b, 0)
            series.append((ts, (sums.get(b, 0.0) / n) if n else 0.0))
    return series


def detect_deviation(
    series: Sequence[tuple[datetime, float]], config: DeviationConfig
) -> list[AlertEvent]:
    """Rolling z-score alerts over a time-ordered bucket series.

    Each bucket after the first ``window`` is scored against the mean and
    population standard deviation of the preceding window (current bucket
    excluded); sigma is floored so constant history stays divisible. A
    series shorter than the window yields no alerts.
    """
    alerts = []
    values = [v for _, v in series]
    for i in range(config.window, len(series)):
        window = values[i - config.window : i]
        mean = statistics.fmean(window)
        std = statistics.pstdev(window)
        sigma = max(std, config.sigma_floor)
        z = (values[i] - mean) / sigma
        if abs(z) >= config.z_threshold:
            alerts.append(
                AlertEvent(
                    metric=config.metric,
                    bucket=series[i][0],
                    observed=values[i],
                    rolling_mean=mean,
                    rolling_std=std,
                    z_score=z,
                )
            )
    return alerts


# --- the collector run loop --------------------------------------------------

@dataclass
class CollectorConfig:
    sources: list[SourceSpec]
    sink_path: str
    sink_format: str = "json"
    alerts_path: str | None = None
    deviation: DeviationConfig = field(default_factory=DeviationConfig)
    lexicon_pos: str | None = None
    lexicon_neg: str | None = None

    @classmethod
    def from_dict(cls, obj: dict) -> "CollectorConfig":
        sources = [
            SourceSpec(
                id=s["id"],
                kind=s["kind"],
                location=s["location"],
                poll_interval=float(s.get("poll_interval", 60.0)),
            )
            for s in obj.get("sources", [])
        ]
        if not sources:
            raise ValueError("collector config needs at least one source")
        sink = obj.get("sink", {})
        dev = obj.get("deviation", {})
        return cls(
            sources=sources,
            sink_path=sink.get("path", "collected.jsonl"),
            sink_format=sink.get("format", "json"),
            alerts_path=obj.get("alerts", {}).get("path"),
            deviation=DeviationConfig(
                metric=dev.get("metric", "volume"),
                window=int(dev.get("window", 20)),
                z_threshold=float(dev.get("z_threshold", 3.0)),
                sigma_floor=float(dev.get("sigma_floor", 1e-6)),
                bucket_seconds=float(dev.get("bucket_seconds", 60.0)),
            ),
            lexicon_pos=obj.get("lexicon", {}).get("positive"),
            lexicon_neg=obj.get("lexicon", {}).get("negative"),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CollectorConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class CollectorRunStats:
    records_emitted: int = 0
    duplicates_dropped: int = 0
    alerts_emitted: int = 0
    diagnostics: list[SourceDiagnostic] = field(default_factory=list)


def run_collector(
    config: CollectorConfig,
    once: bool = False,
    max_cycles: int | None = None,
    now_fn: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
    sleep_fn: Callable[[float], None] = time.sleep,
) -> CollectorRunStats:
    """Poll sources into the sink; detect deviations over the stream.

    With ``once`` every source is polled a single time and the function
    returns; otherwise each source is re-polled on its own interval until
    ``max_cycles`` rounds have run (or forever). All sources feed one
    serialized sink writer, so records never interleave mid-line.
    """
    from .textmine import load_lexicon

    stats = CollectorRunStats()
    states = {spec.id: SourceState() for spec in config.sources}
    lexicon = None
    if config.lexicon_pos and config.lexicon_neg:
        lexicon = load_lexicon(config.lexicon_pos, config.lexicon_neg)

    collected: list[OutputRecord] = []
    next_due = {spec.id: 0.0 for spec in config.sources}
    clock = 0.0
    cycle = 0
    with open(config.sink_path, "w", encoding="utf-8") as sink:
        while True:
            cycle += 1
            for spec in config.sources:
                if next_due[spec.id] > clock:
                    continue
                next_due[spec.id] = clock + max(spec.poll_interval, 0.0)
                records, diags = poll_source(spec, states[spec.id], now_fn=now_fn)
                stats.diagnostics.extend(diags)
                for record in records:
                    emit(record, config.sink_format, sink)
                    collected.append(record)
                    stats.records_emitted += 1
            sink.flush()
            if once or (max_cycles is not None and cycle >= max_cycles):
                break
            wait = max(min(next_due.values()) - clock, 0.0)
            sleep_fn(wait)
            clock += wait

    stats.duplicates_dropped = sum(s.duplicates_dropped for s in states.values())
    series = bucketize(collected, config.deviation, lexicon)
    alerts = detect_deviation(series, config.deviation)
    stats.alerts_emitted = len(alerts)
    if config.alerts_path:
        with open(config.alerts_path, "w", encoding="utf-8") as fh:
            for alert in alerts:
                fh.write(json.dumps(alert.to_dict()) + "\n")
    return stats
