from typing import List, Optional

from sqlalchemy import func
from sqlalchemy.orm import Query, Session

from ..catalogue import Run

RATIO_TOLERANCE = 1e-9


def find_runs(
    session: Session,
    kind: Optional[str] = None,
    status: Optional[str] = None,
    coupling: Optional[float] = None,
    coupling_ratio: Optional[float] = None,
) -> List[Run]:
    """
    Catalogued runs matching every given filter, oldest first.

    coupling is the absolute Omega_0; coupling_ratio compares Omega_0 / gamma.
    """
    query: Query = session.query(Run)
    if kind is not None:
        query = query.filter(Run.kind == kind)
    if status is not None:
        query = query.filter(Run.status == status)
    if coupling is not None:
        query = query.filter(Run.coupling == coupling)
    if coupling_ratio is not None:
        query = query.filter(func.abs(Run.coupling - coupling_ratio * Run.gamma) <= RATIO_TOLERANCE * Run.gamma)
    return query.order_by(Run.id).all()


def latest_run(session: Session) -> Optional[Run]:
    return session.query(Run).order_by(Run.id.desc()).first()
