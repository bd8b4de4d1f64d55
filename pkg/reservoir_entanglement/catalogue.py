"""Models for the SQLite catalogue of executed runs"""

import datetime
import logging
from typing import List, Optional

from sqlalchemy import (
    Column,
    DateTime,
    Float,
    ForeignKey,
    Integer,
    MetaData,
    String,
    create_engine,
    func,
)
from sqlalchemy.orm import Mapped, Session, declarative_base, relationship, sessionmaker, synonym

from .artifacts import RunManifest

logger = logging.getLogger(__name__)

metadata = MetaData()
Base = declarative_base(metadata=metadata)


class Run(Base):
    __tablename__ = "run"

    id = Column(Integer, primary_key=True, autoincrement=True)

    kind = Column(String(16), nullable=False)
    label = Column(String(100))
    directory = Column(String)
    created = Column(DateTime, nullable=False, server_default=func.current_timestamp())
    version = Column(String(50))
    method = Column(String(16))
    status = Column(String(20), nullable=False, index=True)

    gamma = Column(Float, nullable=False)
    coupling = Column(Float, nullable=False, index=True)
    detuning = Column(Float)
    atom_frequency = Column(Float)
    atom_population = Column(Float)
    n_modes = Column(Integer)
    half_span = Column(Float)
    t_end = Column(Float)
    dt = Column(Float)

    duration_seconds = Column(Float)
    norm_drift = Column(Float)
    cross_method_max_dev = Column(Float)
    c2_infinity = Column(Float)

    # Relationships

    files: Mapped[List["RunFile"]] = relationship("RunFile", backref="run", cascade="all, delete-orphan", order_by="RunFile.name")

    # Synonyms

    omega0_coupling: Mapped[float] = synonym("coupling")
    created_at: Mapped[datetime.datetime] = synonym("created")

    def __str__(self):
        return f"{self.__class__.__name__}({self.id}) <{self.kind} {self.label or ''} {self.status}>"

    @property
    def coupling_ratio(self) -> float:
        return self.coupling / self.gamma


class RunFile(Base):
    __tablename__ = "runfile"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("run.id"), nullable=False)

    name = Column(String(100), nullable=False)
    rows = Column(Integer, nullable=False)


def open_catalogue(path: str) -> Session:
    """Session on a SQLite catalogue file (":memory:" for a throwaway one), creating tables as needed"""
    url = "sqlite://" if path == ":memory:" else f"sqlite:///{path}"
    engine = create_engine(url)
    metadata.create_all(engine)
    return sessionmaker(bind=engine)()


def close_catalogue(session: Session):
    """Close the session and dispose of the engine open_catalogue created for it"""
    engine = session.get_bind()
    session.close()
    engine.dispose()


def record_run(
    session: Session,
    manifest: RunManifest,
    kind: str,
    label: Optional[str] = None,
) -> Run:
    config = manifest.config
    diagnostics = manifest.diagnostics
    run = Run(
        kind=kind,
        label=label,
        directory=config.get("directory"),
        version=manifest.version,
        method=config.get("method"),
        status=manifest.status,
        gamma=config["gamma"],
        coupling=config["coupling"],
        detuning=config.get("detuning"),
        atom_frequency=config.get("atom_frequency"),
        atom_population=config.get("atom_population"),
        n_modes=config.get("n_modes"),
        half_span=config.get("half_span"),
        t_end=config.get("t_end"),
        dt=config.get("dt"),
        duration_seconds=manifest.duration_seconds,
        norm_drift=diagnostics.get("norm_drift"),
        cross_method_max_dev=diagnostics.get("cross_method_max_dev"),
        c2_infinity=diagnostics.get("c2_infinity"),
    )
    run.files = [RunFile(name=record.name, rows=record.rows) for record in manifest.files]
    session.add(run)
    session.commit()
    logger.info("Catalogued %s", run)
    return run
