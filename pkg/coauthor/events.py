import csv
import logging
import os
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any, Dict, List, Mapping, Type, TypeVar

from pyee.base import EventEmitter

logger = logging.getLogger(__name__)

R = TypeVar("R")


class Outcome(Enum):
    ACCEPTED = "accepted"
    WITHDRAWN = "withdrawn"
    TERMINATED = "terminated"


@dataclass
class UltimatumEvent:
    """
    One raised ultimatum and how it ended.
    """

    paper_id: int
    step: int
    week: int
    "Paper week tau at issuance."
    duration: int
    "Scheduled duration T_m of the paper."
    issuer_id: int
    issuer_policy: str
    from_pos: int
    to_pos: int
    outcome: Outcome
    votes: Dict[int, bool] = field(default_factory=dict)
    "Responder id to accept (True) or refuse (False)."

    COLUMNS = ("paper_id", "step", "week", "duration", "issuer_id", "issuer_policy",
               "from_pos", "to_pos", "outcome")

    @property
    def gap(self) -> int:
        return self.from_pos - self.to_pos

    @property
    def scheduled_end(self) -> int:
        """
        Step at which the paper was due to end; its first week runs on the
        spawn step.
        """
        return self.step - self.week + 1 + self.duration

    def to_row(self) -> List[Any]:
        return [self.paper_id, self.step, self.week, self.duration, self.issuer_id,
                self.issuer_policy, self.from_pos, self.to_pos, self.outcome.value]

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> "UltimatumEvent":
        return cls(
            paper_id=int(row["paper_id"]),
            step=int(row["step"]),
            week=int(row["week"]),
            duration=int(row["duration"]),
            issuer_id=int(row["issuer_id"]),
            issuer_policy=row["issuer_policy"],
            from_pos=int(row["from_pos"]),
            to_pos=int(row["to_pos"]),
            outcome=Outcome(row["outcome"]),
        )


@dataclass
class VoteRecord:
    paper_id: int
    step: int
    responder_id: int
    responder_policy: str
    gap: int
    "Positions demanded by the issuer, j - j'."
    displaced: bool
    "Whether the reorder would move the responder down."
    accepted: bool

    COLUMNS = ("paper_id", "step", "responder_id", "responder_policy", "gap", "displaced", "vote")

    def to_row(self) -> List[Any]:
        return [self.paper_id, self.step, self.responder_id, self.responder_policy, self.gap,
                int(self.displaced), "accept" if self.accepted else "refuse"]

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> "VoteRecord":
        return cls(
            paper_id=int(row["paper_id"]),
            step=int(row["step"]),
            responder_id=int(row["responder_id"]),
            responder_policy=row["responder_policy"],
            gap=int(row["gap"]),
            displaced=row["displaced"] == "1",
            accepted=row["vote"] == "accept",
        )


@dataclass
class PaperRecord:
    paper_id: int
    start_step: int
    duration: int
    size: int
    status: str
    end_step: int
    "-1 while the paper is still active."

    COLUMNS = ("paper_id", "start_step", "duration", "size", "status", "end_step")

    @property
    def scheduled_end(self) -> int:
        return self.start_step + self.duration

    def to_row(self) -> List[Any]:
        return [self.paper_id, self.start_step, self.duration, self.size, self.status, self.end_step]

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> "PaperRecord":
        return cls(
            paper_id=int(row["paper_id"]),
            start_step=int(row["start_step"]),
            duration=int(row["duration"]),
            size=int(row["size"]),
            status=row["status"],
            end_step=int(row["end_step"]),
        )


@dataclass
class AgentRecord:
    id: int
    policy: str
    papers_joined: int
    papers_completed: int
    utility: float
    raw_utility: float
    n_raise: int
    n_agree: int
    n_refuse: int
    n_pull: int
    n_insist: int
    n_destr: int

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def of(cls, agent: Any) -> "AgentRecord":
        return cls(**{name: getattr(agent, name) for name in cls.columns()})

    def to_row(self) -> List[Any]:
        return [getattr(self, name) for name in self.columns()]

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> "AgentRecord":
        values: Dict[str, Any] = {}
        for f in fields(cls):
            convert = f.type if f.type in (int, float) else str
            values[f.name] = convert(row[f.name])
        return cls(**values)


EVENTS_CSV = "events.csv"
VOTES_CSV = "votes.csv"
PAPERS_CSV = "papers.csv"
AGENTS_CSV = "agents.csv"


def _write(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read(path: str, record: Type[R]) -> List[R]:
    with open(path, encoding="utf-8", newline="") as fd:
        return [record.from_row(row) for row in csv.DictReader(fd)]


class EventLog:
    """
    Append-only record of one run, fed by the events a
    :class:`~coauthor.engine.Simulation` emits.
    """

    def __init__(self) -> None:
        self.ultimatums: List[UltimatumEvent] = []
        self.votes: List[VoteRecord] = []
        self.papers: Dict[int, PaperRecord] = {}
        self.agents: List[AgentRecord] = []

    def attach(self, emitter: EventEmitter) -> "EventLog":
        emitter.add_listener("ultimatum", self.ultimatums.append)
        emitter.add_listener("vote", self.votes.append)
        emitter.add_listener("paper_spawned", self._on_paper)
        emitter.add_listener("paper_closed", self._on_paper)
        emitter.add_listener("finished", self._on_finished)
        return self

    def _on_paper(self, paper, *args) -> None:
        self.papers[paper.id] = PaperRecord(
            paper_id=paper.id,
            start_step=paper.start_step,
            duration=paper.duration,
            size=paper.size,
            status=paper.status.value,
            end_step=-1 if paper.end_step is None else paper.end_step,
        )

    def _on_finished(self, agents) -> None:
        self.agents = [AgentRecord.of(a) for a in agents]

    def write(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        _write(os.path.join(directory, EVENTS_CSV), UltimatumEvent.COLUMNS,
               (e.to_row() for e in self.ultimatums))
        _write(os.path.join(directory, VOTES_CSV), VoteRecord.COLUMNS,
               (v.to_row() for v in self.votes))
        _write(os.path.join(directory, PAPERS_CSV), PaperRecord.COLUMNS,
               (self.papers[k].to_row() for k in sorted(self.papers)))
        _write(os.path.join(directory, AGENTS_CSV), AgentRecord.columns(),
               (a.to_row() for a in self.agents))
        logger.debug("wrote %d ultimatums, %d papers to %s", len(self.ultimatums),
                     len(self.papers), directory)

    @classmethod
    def read(cls, directory: str) -> "EventLog":
        log = cls()
        log.ultimatums = _read(os.path.join(directory, EVENTS_CSV), UltimatumEvent)
        log.votes = _read(os.path.join(directory, VOTES_CSV), VoteRecord)
        log.papers = {p.paper_id: p for p in _read(os.path.join(directory, PAPERS_CSV), PaperRecord)}
        log.agents = _read(os.path.join(directory, AGENTS_CSV), AgentRecord)
        return log
