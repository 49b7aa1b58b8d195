"""File-based report store."""
import csv
import io
import json
import logging
import shutil
from pathlib import Path
from typing import List, Optional

import aiofiles

from torusaction.exceptions import StorageError
from torusaction.storage.base import BaseReportStore
from torusaction.storage.models import Report

logger = logging.getLogger(__name__)

SPECTRUM_COLUMNS = ['label', 'l_mu', 'error']
LINKING_COLUMNS = ['label_a', 'label_b', 'value']


def _csv_text(columns: List[str], rows: List[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator='\n')
    writer.writeheader()
    for row in rows:
        writer.writerow({key: row.get(key) for key in columns})
    return buffer.getvalue()


class FileReportStore(BaseReportStore):
    """One directory per scenario holding report.json, spectrum.csv and linking.csv."""

    def __init__(self, out_dir: str = "reports"):
        """Initialize file store.

        Args:
            out_dir: Base directory for reports
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _get_scenario_dir(self, scenario: str) -> Path:
        """Get a scenario's report directory, creating if needed."""
        scenario_dir = self.out_dir / scenario
        scenario_dir.mkdir(exist_ok=True)
        return scenario_dir

    async def save_report(self, report: Report) -> str:
        """Save report.json and the CSV tables."""
        scenario_dir = self._get_scenario_dir(report.scenario)
        try:
            async with aiofiles.open(scenario_dir / "report.json", 'w') as f:
                await f.write(report.to_json())
            async with aiofiles.open(scenario_dir / "spectrum.csv", 'w') as f:
                await f.write(_csv_text(SPECTRUM_COLUMNS, report.spectrum))
            async with aiofiles.open(scenario_dir / "linking.csv", 'w') as f:
                await f.write(_csv_text(LINKING_COLUMNS, report.linking))
        except OSError as e:
            raise StorageError(f"Could not write report for {report.scenario}: {e}")
        logger.info("Report for %s written to %s", report.scenario, scenario_dir)
        return str(scenario_dir)

    async def get_report(self, scenario: str) -> Optional[Report]:
        """Retrieve the stored report of a scenario."""
        report_file = self.out_dir / scenario / "report.json"
        if not report_file.exists():
            return None
        async with aiofiles.open(report_file, 'r') as f:
            content = await f.read()
        try:
            return Report.from_json(content)
        except (json.JSONDecodeError, TypeError) as e:
            raise StorageError(f"Corrupted report {report_file}: {e}")

    async def list_reports(self) -> List[str]:
        """Names of the scenarios with a stored report."""
        return sorted(p.parent.name for p in self.out_dir.glob("*/report.json"))

    async def delete_report(self, scenario: str) -> bool:
        """Delete the report directory of a scenario."""
        scenario_dir = self.out_dir / scenario
        if not scenario_dir.exists():
            return False
        shutil.rmtree(scenario_dir)
        return True
