from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, FilePath

import config as config
from metrics import gini, gini_rows

REQUIRED_COLUMNS = ["channel_id", "video_id", "published_at", "t_hour", "views"]
INT64_MAX = np.iinfo(np.int64).max


class DatasetError(ValueError):
    """Invalid view-count input; carries the 1-based CSV line and the offending field."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = ", ".join(location)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class EmptyChannelError(ValueError):
    pass


class EmpiricalOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    input: FilePath
    min_videos: int = Field(default=1, ge=1)
    min_concurrent: int = Field(default=1, ge=1)
    min_observed_hours: int = Field(default=config.FIRST_WEEK_HOURS, ge=1)
    until: Optional[datetime] = None


@dataclass
class VideoSeries:
    channel_id: str
    video_id: str
    published_at: pd.Timestamp
    hourly_views: np.ndarray

    @property
    def observed_hours(self) -> int:
        return int(self.hourly_views.size)

    def first_week(self) -> np.ndarray:
        """Hourly views over the first week, zero-padded to FIRST_WEEK_HOURS entries."""
        week = np.zeros(config.FIRST_WEEK_HOURS, dtype=np.int64)
        head = self.hourly_views[:config.FIRST_WEEK_HOURS]
        week[:head.size] = head
        return week

    def first_week_views(self) -> int:
        return int(self.first_week().sum())

    def wall_clock_index(self) -> pd.DatetimeIndex:
        return pd.date_range(self.published_at, periods=self.observed_hours, freq="h")


@dataclass
class ChannelDataset:
    channel_id: str
    videos: List[VideoSeries]
    start: pd.Timestamp
    end: pd.Timestamp

    @cached_property
    def wall_clock_views(self) -> pd.DataFrame:
        """Views per absolute hour (rows) and video (columns); NaN where a video was not observed."""
        columns = {
            v.video_id: pd.Series(v.hourly_views, index=v.wall_clock_index())
            for v in self.videos
        }
        return pd.DataFrame(columns).sort_index()

    @cached_property
    def hourly_totals(self) -> pd.Series:
        return self.wall_clock_views.sum(axis=1, min_count=1).fillna(0)


@dataclass
class VideoMetrics:
    channel_id: str
    video_id: str
    lifecycle_hours: Optional[int]
    peak_hour: Optional[int]
    peak_hour_share: Optional[float]
    gini_hourly: float
    first_week_views: int


@dataclass
class TemporalProfile:
    channel_id: str
    mean_shares: np.ndarray
    videos: int


@dataclass
class ChannelSummary:
    channel_id: str
    videos: int
    total_views: int
    mean_lifecycle_hours: Optional[float]
    mean_gini_hourly: float
    mean_peak_hour_share: Optional[float]
    mean_wallclock_gini: Optional[float]
    max_concurrent_videos: int


def read_views_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Read the views CSV as strings; undecodable or malformed input raises DatasetError."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DatasetError("invalid UTF-8", line=raw.count(b"\n", 0, e.start) + 1) from e
    try:
        return pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise DatasetError("empty file, expected a header row", line=1) from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise DatasetError(f"malformed CSV row: {e}", line=int(match.group(1)) if match else None) from e


def _raise_first(mask: pd.Series, lines: pd.Series, field: str, message: str) -> None:
    if mask.any():
        first = mask.to_numpy().nonzero()[0][0]
        raise DatasetError(message, line=int(lines.iloc[first]), field=field)


def load_dataset(rows: pd.DataFrame, until: Optional[datetime] = None) -> List[ChannelDataset]:
    """
    Validate and group hourly view rows into channels.

    Missing hours inside a video's observed range are filled with 0 views. Videos are
    ordered by publication time, channels by id. Rows whose wall-clock hour lies after
    `until` are dropped.
    """
    missing = [c for c in REQUIRED_COLUMNS if c not in rows.columns]
    if missing:
        raise DatasetError(f"missing column(s) {', '.join(missing)}", line=1, field=missing[0])

    frame = rows[REQUIRED_COLUMNS].reset_index(drop=True).copy()
    # header is line 1
    lines = pd.Series(frame.index + 2)

    for name in ("channel_id", "video_id"):
        frame[name] = frame[name].astype(str).str.strip()
        _raise_first(frame[name] == "", lines, name, "empty identifier")

    published = pd.to_datetime(frame["published_at"], format="ISO8601", utc=True, errors="coerce")
    _raise_first(published.isna(), lines, "published_at", "not an ISO 8601 UTC timestamp")
    offsets = frame["published_at"].astype(str).str.strip().str.extract(r"([+-]\d{2}:?\d{2})$")[0]
    _raise_first(offsets.notna() & ~offsets.isin(["+00:00", "+0000"]), lines, "published_at",
                 "offset must be UTC (Z or +00:00)")
    _raise_first(published != published.dt.floor("h"), lines, "published_at",
                 "timestamp must be truncated to the hour")

    for name in ("t_hour", "views"):
        text = frame[name].astype(str).str.strip()
        _raise_first(text.str.fullmatch(r"-\d+"), lines, name, "must be non-negative")
        _raise_first(~text.str.fullmatch(r"\d+"), lines, name, "not a plain non-negative integer")
        numbers = text.map(int)
        _raise_first(numbers > INT64_MAX, lines, name, "exceeds the 64-bit integer range")
        frame[name] = numbers.astype("int64")
    frame["published_at"] = published

    _raise_first(frame.duplicated(subset=["video_id", "t_hour"]), lines, "t_hour",
                 "duplicate (video_id, t_hour)")
    for name in ("channel_id", "published_at"):
        inconsistent = frame.groupby("video_id")[name].transform("nunique") > 1
        _raise_first(inconsistent, lines, name, "video has conflicting values")

    if until is not None:
        until = pd.Timestamp(until)
        until = until.tz_localize("UTC") if until.tzinfo is None else until.tz_convert("UTC")
        wall_clock = frame["published_at"] + pd.to_timedelta(frame["t_hour"], unit="h")
        dropped = int((wall_clock > until).sum())
        frame = frame[wall_clock <= until]
        logging.info("Dropped %d rows observed after %s", dropped, until)

    channels: List[ChannelDataset] = []
    for channel_id, channel_rows in frame.groupby("channel_id", sort=True):
        videos = []
        for video_id, video_rows in channel_rows.groupby("video_id", sort=True):
            hours = np.zeros(int(video_rows["t_hour"].max()) + 1, dtype=np.int64)
            hours[video_rows["t_hour"].to_numpy()] = video_rows["views"].to_numpy()
            videos.append(VideoSeries(
                channel_id=str(channel_id),
                video_id=str(video_id),
                published_at=video_rows["published_at"].iloc[0],
                hourly_views=hours,
            ))
        videos.sort(key=lambda v: (v.published_at, v.video_id))
        channels.append(ChannelDataset(
            channel_id=str(channel_id),
            videos=videos,
            start=min(v.published_at for v in videos),
            end=max(v.wall_clock_index()[-1] for v in videos),
        ))

    logging.info("Loaded %d channels, %d videos", len(channels), sum(len(c.videos) for c in channels))
    return channels


def dataset_to_frame(channels: List[ChannelDataset]) -> pd.DataFrame:
    """Gap-filled canonical rows, ordered by channel, publication and hour."""
    records = []
    for channel in channels:
        for video in channel.videos:
            published = video.published_at.strftime("%Y-%m-%dT%H:%M:%SZ")
            for hour, views in enumerate(video.hourly_views):
                records.append((channel.channel_id, video.video_id, published, hour, int(views)))
    return pd.DataFrame(records, columns=REQUIRED_COLUMNS)


def video_lifecycle_95(video: VideoSeries) -> Optional[int]:
    """Hours needed to reach 95% of the first-week views (h + 1 for the first hour h reaching it)."""
    week = video.first_week()
    total = int(week.sum())
    if total == 0:
        return None
    cumulative = np.cumsum(week)
    # integer comparison: 100 * cum >= 95 * total
    reached = cumulative * 100 >= config.LIFECYCLE_PERCENT * total
    return int(np.argmax(reached)) + 1


def peak_hour_share(video: VideoSeries, channel: ChannelDataset) -> Optional[Tuple[int, float]]:
    if video.channel_id != channel.channel_id:
        raise ValueError(f"video {video.video_id} does not belong to channel {channel.channel_id}")
    week = video.first_week()
    if week.sum() == 0:
        return None
    peak_hour = int(np.argmax(week))
    wall_hour = video.published_at + pd.Timedelta(hours=peak_hour)
    channel_total = float(channel.hourly_totals.loc[wall_hour])
    return peak_hour, float(week[peak_hour]) / channel_total


def gini_hourly(video: VideoSeries) -> float:
    return gini(video.first_week())


def video_metrics(
        video: VideoSeries,
        channel: ChannelDataset,
        min_observed_hours: int = config.FIRST_WEEK_HOURS,
) -> VideoMetrics:
    peak = peak_hour_share(video, channel)
    lifecycle = video_lifecycle_95(video)
    if video.observed_hours < min_observed_hours:
        # first week not fully observed
        lifecycle = None
    return VideoMetrics(
        channel_id=video.channel_id,
        video_id=video.video_id,
        lifecycle_hours=lifecycle,
        peak_hour=peak[0] if peak else None,
        peak_hour_share=peak[1] if peak else None,
        gini_hourly=gini_hourly(video),
        first_week_views=video.first_week_views(),
    )


def average_temporal_profile(channel: ChannelDataset) -> TemporalProfile:
    shares = []
    for video in channel.videos:
        week = video.first_week()
        total = week.sum()
        if total > 0:
            shares.append(week[:config.PROFILE_HOURS] / total)
    if not shares:
        raise EmptyChannelError(f"channel {channel.channel_id} has no video with first-week views")
    return TemporalProfile(
        channel_id=channel.channel_id,
        mean_shares=np.mean(np.vstack(shares), axis=0),
        videos=len(shares),
    )


def max_concurrent_videos(channel: ChannelDataset) -> int:
    """Largest number of videos inside their first week at the same wall-clock hour."""
    week = pd.Timedelta(hours=config.FIRST_WEEK_HOURS)
    starts = pd.Series(1, index=[v.published_at for v in channel.videos])
    ends = pd.Series(-1, index=[v.published_at + week for v in channel.videos])
    deltas = pd.concat([starts, ends]).groupby(level=0).sum().sort_index()
    return int(deltas.cumsum().max())


def wallclock_gini(channel: ChannelDataset) -> Optional[float]:
    """Gini across the channel's observed videos at each wall-clock hour, averaged over hours with views."""
    matrix = channel.wall_clock_views.to_numpy(dtype=float)
    active = np.nansum(matrix, axis=1) > 0
    if not active.any():
        return None
    # NaN marks videos not observed at that hour
    return float(gini_rows(matrix[active]).mean())


def channel_summary(
        channel: ChannelDataset,
        min_observed_hours: int = config.FIRST_WEEK_HOURS,
        metrics: Optional[List[VideoMetrics]] = None,
) -> ChannelSummary:
    if metrics is None:
        metrics = [video_metrics(v, channel, min_observed_hours) for v in channel.videos]
    lifecycles = [m.lifecycle_hours for m in metrics if m.lifecycle_hours is not None]
    shares = [m.peak_hour_share for m in metrics if m.peak_hour_share is not None]

    return ChannelSummary(
        channel_id=channel.channel_id,
        videos=len(channel.videos),
        total_views=int(sum(int(v.hourly_views.sum()) for v in channel.videos)),
        mean_lifecycle_hours=float(np.mean(lifecycles)) if lifecycles else None,
        mean_gini_hourly=float(np.mean([m.gini_hourly for m in metrics])) if metrics else 0.0,
        mean_peak_hour_share=float(np.mean(shares)) if shares else None,
        mean_wallclock_gini=wallclock_gini(channel),
        max_concurrent_videos=max_concurrent_videos(channel),
    )


@dataclass
class EmpiricalReport:
    video_metrics: List[VideoMetrics] = field(default_factory=list)
    summaries: List[ChannelSummary] = field(default_factory=list)
    profiles: List[TemporalProfile] = field(default_factory=list)
    skipped: Dict[str, str] = field(default_factory=dict)


def analyze_channels(
        channels: List[ChannelDataset],
        min_videos: int = 1,
        min_concurrent: int = 1,
        min_observed_hours: int = config.FIRST_WEEK_HOURS,
) -> EmpiricalReport:
    report = EmpiricalReport()
    for channel in channels:
        if len(channel.videos) < min_videos:
            report.skipped[channel.channel_id] = f"{len(channel.videos)} videos < min_videos {min_videos}"
            logging.info("Skipping channel %s: %s", channel.channel_id, report.skipped[channel.channel_id])
            continue
        concurrent = max_concurrent_videos(channel)
        if concurrent < min_concurrent:
            report.skipped[channel.channel_id] = f"{concurrent} concurrent videos < min_concurrent {min_concurrent}"
            logging.info("Skipping channel %s: %s", channel.channel_id, report.skipped[channel.channel_id])
            continue

        metrics = [video_metrics(v, channel, min_observed_hours) for v in channel.videos]
        report.video_metrics.extend(metrics)
        report.summaries.append(channel_summary(channel, min_observed_hours, metrics))
        try:
            report.profiles.append(average_temporal_profile(channel))
        except EmptyChannelError as e:
            logging.warning("No profile for channel %s: %s", channel.channel_id, e)
    return report


def video_metrics_frame(metrics: List[VideoMetrics]) -> pd.DataFrame:
    frame = pd.DataFrame(
        [vars(m) for m in metrics],
        columns=["channel_id", "video_id", "lifecycle_hours", "peak_hour", "peak_hour_share",
                 "gini_hourly", "first_week_views"],
    )
    return frame.astype({"lifecycle_hours": "Int64", "peak_hour": "Int64"})


def channel_summary_frame(summaries: List[ChannelSummary]) -> pd.DataFrame:
    return pd.DataFrame(
        [vars(s) for s in summaries],
        columns=["channel_id", "videos", "total_views", "mean_lifecycle_hours", "mean_gini_hourly",
                 "mean_peak_hour_share", "mean_wallclock_gini", "max_concurrent_videos"],
    )


def profiles_frame(profiles: List[TemporalProfile]) -> pd.DataFrame:
    records = []
    for profile in profiles:
        for hour, share in enumerate(profile.mean_shares):
            records.append((profile.channel_id, hour, float(share), profile.videos))
    return pd.DataFrame(records, columns=["channel_id", "hour", "mean_share", "videos"])
