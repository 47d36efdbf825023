"""
Simple file-based storage of equivalence check records
"""
import json
import os
from datetime import datetime
from typing import Any, Dict, List, Optional
import uuid


class CheckRecord:
    def __init__(self, id: str = None, function: Optional[str] = None,
                 sources: Optional[Dict[str, str]] = None):
        self.id = id or str(uuid.uuid4())
        self.function = function
        self.sources = sources or {}  # source name -> text
        self.created = datetime.now()
        self.verdict: Optional[bool] = None
        self.report: Optional[dict] = None
        self.error: Optional[dict] = None

    def set_report(self, report: dict) -> None:
        self.report = report
        self.verdict = report.get('verdict')

    def set_error(self, error: dict) -> None:
        self.error = error
        self.verdict = None

    def to_dict(self) -> dict:
        return {
            'id': self.id,
            'created': self.created.isoformat(),
            'function': self.function,
            'sources': self.sources,
            'verdict': self.verdict,
            'report': self.report,
            'error': self.error,
        }

    def summary(self) -> dict:
        return {
            'id': self.id,
            'created': self.created.isoformat(),
            'function': self.function,
            'verdict': self.verdict,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'CheckRecord':
        record = cls(
            id=data['id'],
            function=data.get('function'),
            sources=data.get('sources', {}),
        )
        record.created = datetime.fromisoformat(data['created'])
        record.verdict = data.get('verdict')
        record.report = data.get('report')
        record.error = data.get('error')
        return record


class FileStorage:
    def __init__(self, storage_file: str = 'checks.json'):
        self.storage_file = storage_file

    def _load_records(self) -> List[CheckRecord]:
        if not os.path.exists(self.storage_file):
            return []
        try:
            with open(self.storage_file, 'r', encoding='utf-8') as f:
                data = json.load(f)
                return [CheckRecord.from_dict(item) for item in data]
        except (json.JSONDecodeError, KeyError):
            return []

    def _save_records(self, records: List[CheckRecord]):
        with open(self.storage_file, 'w', encoding='utf-8') as f:
            data = [record.to_dict() for record in records]
            json.dump(data, f, indent=2, ensure_ascii=False)

    def add_record(self, record: CheckRecord) -> CheckRecord:
        records = self._load_records()
        records.append(record)
        self._save_records(records)
        return record

    def get_record(self, record_id: str) -> Optional[CheckRecord]:
        for record in self._load_records():
            if record.id == record_id:
                return record
        return None

    def get_recent_records(self, limit: int = 10) -> List[CheckRecord]:
        records = self._load_records()
        records.sort(key=lambda x: x.created, reverse=True)
        return records[:limit]

    def delete_record(self, record_id: str) -> bool:
        records = self._load_records()
        original_len = len(records)
        records = [r for r in records if r.id != record_id]
        if len(records) < original_len:
            self._save_records(records)
            return True
        return False


def save_report_file(report: Dict[str, Any], folder: str, record_id: Optional[str] = None) -> str:
    """Write a report as results/report_<id>_<timestamp>.json and return the path"""
    os.makedirs(folder, exist_ok=True)
    record_id = record_id or str(uuid.uuid4())
    stamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    path = os.path.join(folder, f"report_{record_id}_{stamp}.json")
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(report, f, indent=2, ensure_ascii=False)
    return path
