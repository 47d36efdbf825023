import json
import os
from datetime import datetime, timedelta

from storage import CheckRecord, FileStorage, save_report_file


def test_records_persist(tmp_path):
    storage = FileStorage(str(tmp_path / 'checks.json'))
    record = CheckRecord(function='prog', sources={'a.c': 'void prog(void){}'})
    record.set_report({'verdict': True})
    storage.add_record(record)

    loaded = storage.get_record(record.id)
    assert loaded.verdict is True
    assert loaded.sources == {'a.c': 'void prog(void){}'}
    assert loaded.created == record.created


def test_error_clears_verdict():
    record = CheckRecord()
    record.set_report({'verdict': False})
    record.set_error({'kind': 'parse', 'message': 'bad'})
    assert record.verdict is None
    assert record.summary()['verdict'] is None


def test_recent_records_newest_first(tmp_path):
    storage = FileStorage(str(tmp_path / 'checks.json'))
    now = datetime.now()
    for k in range(3):
        record = CheckRecord(function=f"f{k}")
        record.created = now + timedelta(seconds=k)
        storage.add_record(record)
    assert [r.function for r in storage.get_recent_records(2)] == ['f2', 'f1']


def test_delete_and_missing(tmp_path):
    storage = FileStorage(str(tmp_path / 'checks.json'))
    record = storage.add_record(CheckRecord())
    assert storage.delete_record(record.id)
    assert not storage.delete_record(record.id)
    assert storage.get_record(record.id) is None


def test_unreadable_file_is_empty(tmp_path):
    path = tmp_path / 'checks.json'
    path.write_text('{not json')
    assert FileStorage(str(path)).get_recent_records() == []


def test_report_file(tmp_path):
    path = save_report_file({'verdict': True}, str(tmp_path / 'results'), 'abc')
    assert os.path.basename(path).startswith('report_abc_')
    with open(path, encoding='utf-8') as f:
        assert json.load(f) == {'verdict': True}
