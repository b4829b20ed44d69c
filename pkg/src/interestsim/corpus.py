"""Immutable corpus of users, videos, tags and behavior logs.

The corpus is a snapshot covering a 31-day horizon: day 0 is the current
(target) day, negative days are the past.  All loaders validate foreign
keys and value ranges up front so downstream code never has to.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

DAY_MIN = -30
DAY_MAX = 0

GENDERS = ("M", "F")

CSV_NAMES = {
    "users": "users.csv",
    "videos": "videos.csv",
    "views": "views.csv",
    "friends": "friends.csv",
    "groups": "groups.csv",
    "messages": "messages.csv",
}

Window = tuple[int, int]


class CorpusError(Exception):
    """Base class for corpus construction problems."""


class FormatError(CorpusError):
    """A malformed row in an input file."""

    def __init__(self, file: str, line: int, message: str):
        super().__init__(f"{file}:{line}: {message}")
        self.file = file
        self.line = line


class IntegrityError(CorpusError):
    """Dangling foreign keys or inconsistent relations."""


def check_window(window: Window) -> Window:
    lo, hi = window
    if lo > hi:
        raise ValueError(f"empty window {window}: start day must be <= end day")
    if lo < DAY_MIN or hi > DAY_MAX:
        raise ValueError(f"window {window} outside [{DAY_MIN}, {DAY_MAX}]")
    return window


@dataclass(frozen=True)
class UserRecord:
    id: int
    gender: str  # "M" or "F"
    age: int
    city: int


@dataclass(frozen=True)
class VideoRecord:
    id: int
    tags: frozenset[int]


@dataclass
class LoadReport:
    """Counts of rows dropped while loading (age filter and its fallout)."""

    users_dropped_age: int = 0
    rows_dropped_filtered_user: dict[str, int] = field(default_factory=dict)
    duplicate_views: int = 0

    def total_dropped(self) -> int:
        return (
            self.users_dropped_age
            + sum(self.rows_dropped_filtered_user.values())
            + self.duplicate_views
        )


class Corpus:
    """Validated, immutable snapshot of all raw logs plus derived indexes.

    Equality compares the raw data only; derived indexes are deterministic
    functions of it.  Instances are safe for unrestricted concurrent reads.
    """

    def __init__(
        self,
        users: dict[int, UserRecord],
        videos: dict[int, VideoRecord],
        views: set[tuple[int, int, int]],
        friend_edges: set[tuple[int, int]],
        memberships: set[tuple[int, int]],
        messages: dict[tuple[int, int], dict[int, int]],
        report: LoadReport | None = None,
    ):
        if not users:
            raise IntegrityError("corpus must contain at least one user")
        self.users = dict(users)
        self.videos = dict(videos)
        self.views = frozenset(views)
        self.friend_edges = frozenset(friend_edges)
        self.memberships = frozenset(memberships)
        self.messages = {pair: dict(days) for pair, days in messages.items()}
        self.report = report if report is not None else LoadReport()
        self._validate()
        self._build_indexes()

    # -- validation ------------------------------------------------------

    def _validate(self) -> None:
        dangling: list[str] = []

        def check_user(u: int, where: str) -> None:
            if u not in self.users and len(dangling) < 10:
                dangling.append(f"{where}: unknown user {u}")

        for vid, rec in self.videos.items():
            if not rec.tags:
                raise IntegrityError(f"video {vid} has an empty tag set")
        for u, m, d in self.views:
            check_user(u, "views")
            if m not in self.videos and len(dangling) < 10:
                dangling.append(f"views: unknown video {m}")
            if not DAY_MIN <= d <= DAY_MAX:
                raise IntegrityError(f"view day {d} outside [{DAY_MIN}, {DAY_MAX}]")
        for a, b in self.friend_edges:
            if a >= b:
                raise IntegrityError(f"friend edge ({a}, {b}) not normalized a < b")
            check_user(a, "friends")
            check_user(b, "friends")
        for u, g in self.memberships:
            check_user(u, "groups")
        for (a, b), days in self.messages.items():
            if a >= b:
                raise IntegrityError(f"message pair ({a}, {b}) not normalized a < b")
            check_user(a, "messages")
            check_user(b, "messages")
            if (a, b) not in self.friend_edges and len(dangling) < 10:
                dangling.append(f"messages: pair ({a}, {b}) are not friends")
            for d, cnt in days.items():
                if not DAY_MIN <= d <= -1:
                    raise IntegrityError(f"message day {d} outside [{DAY_MIN}, -1]")
                if cnt <= 0:
                    raise IntegrityError(f"message count {cnt} for pair ({a}, {b}) not positive")
        if dangling:
            raise IntegrityError(
                "dangling references (first 10 shown):\n  " + "\n  ".join(dangling)
            )

    def _build_indexes(self) -> None:
        self.user_ids: tuple[int, ...] = tuple(sorted(self.users))
        self.tag_vocab: frozenset[int] = frozenset(
            t for rec in self.videos.values() for t in rec.tags
        )
        by_user: dict[int, dict[int, set[int]]] = {}
        for u, m, d in self.views:
            by_user.setdefault(u, {}).setdefault(d, set()).add(m)
        self.views_by_user: dict[int, dict[int, frozenset[int]]] = {
            u: {d: frozenset(vs) for d, vs in days.items()} for u, days in by_user.items()
        }
        adj: dict[int, set[int]] = {}
        for a, b in self.friend_edges:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        self.friends_of: dict[int, frozenset[int]] = {
            u: frozenset(vs) for u, vs in adj.items()
        }
        gr: dict[int, set[int]] = {}
        members: dict[int, set[int]] = {}
        for u, g in self.memberships:
            gr.setdefault(u, set()).add(g)
            members.setdefault(g, set()).add(u)
        self.groups_of: dict[int, frozenset[int]] = {u: frozenset(v) for u, v in gr.items()}
        self.group_members: dict[int, frozenset[int]] = {
            g: frozenset(v) for g, v in members.items()
        }
        # monthly message aggregates: pair -> (total count, days communicated)
        self.msg_totals: dict[tuple[int, int], tuple[int, int]] = {
            pair: (sum(days.values()), len(days)) for pair, days in self.messages.items()
        }

    # -- queries ---------------------------------------------------------

    def friends(self, u: int) -> frozenset[int]:
        return self.friends_of.get(u, frozenset())

    def groups(self, u: int) -> frozenset[int]:
        return self.groups_of.get(u, frozenset())

    def view_set(self, u: int, window: Window) -> frozenset[int]:
        """Union of videos viewed by ``u`` over the inclusive day window."""
        check_window(window)
        days = self.views_by_user.get(u)
        if not days:
            return frozenset()
        out: set[int] = set()
        for d, vids in days.items():
            if window[0] <= d <= window[1]:
                out.update(vids)
        return frozenset(out)

    def message_stats(self, u: int, v: int) -> tuple[int, int]:
        """(monthly message count, days communicated) for an unordered pair."""
        key = (u, v) if u < v else (v, u)
        return self.msg_totals.get(key, (0, 0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self.users == other.users
            and self.videos == other.videos
            and self.views == other.views
            and self.friend_edges == other.friend_edges
            and self.memberships == other.memberships
            and self.messages == other.messages
        )

    def __repr__(self) -> str:
        return (
            f"Corpus(users={len(self.users)}, videos={len(self.videos)}, "
            f"tags={len(self.tag_vocab)}, views={len(self.views)}, "
            f"friend_edges={len(self.friend_edges)})"
        )


def active_users(c: Corpus, window: Window) -> frozenset[int]:
    """Users with at least one view event inside the inclusive window."""
    check_window(window)
    lo, hi = window
    out = set()
    for u, days in c.views_by_user.items():
        if any(lo <= d <= hi for d in days):
            out.add(u)
    return frozenset(out)


# -- CSV I/O --------------------------------------------------------------


def _parse_int(value: str, file: str, line: int, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise FormatError(file, line, f"{what} is not an integer: {value!r}") from None


def _read_rows(path: Path, expected_header: list[str]):
    name = path.name
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(name, 1, "missing header row") from None
        if header != expected_header:
            raise FormatError(name, 1, f"expected header {expected_header}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise FormatError(name, lineno, f"expected {len(expected_header)} fields, got {len(row)}")
            yield lineno, row


def load_corpus(directory: str | Path, age_bounds: tuple[int, int] = (10, 40)) -> Corpus:
    """Load and validate the six corpus CSV files from ``directory``.

    Users with age outside ``age_bounds`` are dropped, along with every log
    row that references them; the drop counts end up in ``Corpus.report``.
    Rows referencing ids that never existed raise :class:`IntegrityError`.
    """
    directory = Path(directory)
    for name in CSV_NAMES.values():
        if not (directory / name).exists():
            raise FileNotFoundError(directory / name)
    report = LoadReport(rows_dropped_filtered_user={})
    lo_age, hi_age = age_bounds

    users: dict[int, UserRecord] = {}
    filtered: set[int] = set()
    fname = CSV_NAMES["users"]
    for lineno, row in _read_rows(directory / fname, ["user_id", "gender", "age", "city_id"]):
        uid = _parse_int(row[0], fname, lineno, "user_id")
        gender = row[1]
        if gender not in GENDERS:
            raise FormatError(fname, lineno, f"gender must be M or F, got {gender!r}")
        age = _parse_int(row[2], fname, lineno, "age")
        city = _parse_int(row[3], fname, lineno, "city_id")
        if uid in users or uid in filtered:
            raise FormatError(fname, lineno, f"duplicate user id {uid}")
        if not lo_age <= age <= hi_age:
            filtered.add(uid)
            report.users_dropped_age += 1
            continue
        users[uid] = UserRecord(uid, gender, age, city)

    def drop_if_filtered(table: str, *ids: int) -> bool:
        if any(i in filtered for i in ids):
            report.rows_dropped_filtered_user[table] = (
                report.rows_dropped_filtered_user.get(table, 0) + 1
            )
            return True
        return False

    videos: dict[int, VideoRecord] = {}
    fname = CSV_NAMES["videos"]
    for lineno, row in _read_rows(directory / fname, ["video_id", "tags"]):
        vid = _parse_int(row[0], fname, lineno, "video_id")
        if vid in videos:
            raise FormatError(fname, lineno, f"duplicate video id {vid}")
        if not row[1]:
            raise FormatError(fname, lineno, "video has no tags")
        tags = frozenset(_parse_int(t, fname, lineno, "tag") for t in row[1].split("|"))
        videos[vid] = VideoRecord(vid, tags)

    views: set[tuple[int, int, int]] = set()
    fname = CSV_NAMES["views"]
    for lineno, row in _read_rows(directory / fname, ["user_id", "video_id", "day"]):
        u = _parse_int(row[0], fname, lineno, "user_id")
        m = _parse_int(row[1], fname, lineno, "video_id")
        d = _parse_int(row[2], fname, lineno, "day")
        if not DAY_MIN <= d <= DAY_MAX:
            raise FormatError(fname, lineno, f"day {d} outside [{DAY_MIN}, {DAY_MAX}]")
        if drop_if_filtered("views", u):
            continue
        if (u, m, d) in views:
            report.duplicate_views += 1
            continue
        views.add((u, m, d))

    friends: set[tuple[int, int]] = set()
    fname = CSV_NAMES["friends"]
    for lineno, row in _read_rows(directory / fname, ["user_a", "user_b"]):
        a = _parse_int(row[0], fname, lineno, "user_a")
        b = _parse_int(row[1], fname, lineno, "user_b")
        if a == b:
            raise FormatError(fname, lineno, f"self-loop friendship for user {a}")
        if drop_if_filtered("friends", a, b):
            continue
        friends.add((min(a, b), max(a, b)))

    memberships: set[tuple[int, int]] = set()
    fname = CSV_NAMES["groups"]
    for lineno, row in _read_rows(directory / fname, ["user_id", "group_id"]):
        u = _parse_int(row[0], fname, lineno, "user_id")
        g = _parse_int(row[1], fname, lineno, "group_id")
        if drop_if_filtered("groups", u):
            continue
        memberships.add((u, g))

    messages: dict[tuple[int, int], dict[int, int]] = {}
    fname = CSV_NAMES["messages"]
    for lineno, row in _read_rows(directory / fname, ["user_a", "user_b", "day", "count"]):
        a = _parse_int(row[0], fname, lineno, "user_a")
        b = _parse_int(row[1], fname, lineno, "user_b")
        d = _parse_int(row[2], fname, lineno, "day")
        cnt = _parse_int(row[3], fname, lineno, "count")
        if a == b:
            raise FormatError(fname, lineno, f"self-loop message for user {a}")
        if not DAY_MIN <= d <= -1:
            raise FormatError(fname, lineno, f"message day {d} outside [{DAY_MIN}, -1]")
        if cnt <= 0:
            raise FormatError(fname, lineno, f"message count must be positive, got {cnt}")
        if drop_if_filtered("messages", a, b):
            continue
        key = (min(a, b), max(a, b))
        days = messages.setdefault(key, {})
        days[d] = days.get(d, 0) + cnt

    return Corpus(users, videos, views, friends, memberships, messages, report=report)


def write_corpus(c: Corpus, directory: str | Path) -> None:
    """Write the six corpus CSV files, sorted by primary key (bit-stable)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    def dump(name: str, header: list[str], rows) -> None:
        with open(directory / name, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)

    dump(
        CSV_NAMES["users"],
        ["user_id", "gender", "age", "city_id"],
        ((u.id, u.gender, u.age, u.city) for u in (c.users[i] for i in sorted(c.users))),
    )
    dump(
        CSV_NAMES["videos"],
        ["video_id", "tags"],
        ((v, "|".join(str(t) for t in sorted(c.videos[v].tags))) for v in sorted(c.videos)),
    )
    dump(CSV_NAMES["views"], ["user_id", "video_id", "day"], sorted(c.views))
    dump(CSV_NAMES["friends"], ["user_a", "user_b"], sorted(c.friend_edges))
    dump(CSV_NAMES["groups"], ["user_id", "group_id"], sorted(c.memberships))
    dump(
        CSV_NAMES["messages"],
        ["user_a", "user_b", "day", "count"],
        (
            (a, b, d, cnt)
            for (a, b) in sorted(c.messages)
            for d, cnt in sorted(c.messages[(a, b)].items())
        ),
    )
