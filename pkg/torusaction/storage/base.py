"""Abstract base class for report stores."""
from abc import ABC, abstractmethod
from typing import List, Optional

from torusaction.storage.models import Report


class BaseReportStore(ABC):
    """Abstract report store."""

    @abstractmethod
    async def save_report(self, report: Report) -> str:
        """Save a report with its CSV tables.

        Args:
            report: Report to save

        Returns:
            Directory the report was written to
        """
        pass

    @abstractmethod
    async def get_report(self, scenario: str) -> Optional[Report]:
        """Retrieve the last report of a scenario.

        Args:
            scenario: Scenario name

        Returns:
            Report if found, None otherwise
        """
        pass

    @abstractmethod
    async def list_reports(self) -> List[str]:
        """Names of the scenarios with a stored report."""
        pass

    @abstractmethod
    async def delete_report(self, scenario: str) -> bool:
        """Delete the report of a scenario.

        Returns:
            True if deleted, False if not found
        """
        pass
