"""
Deterministic output files: CSV frames and curves, and the JSON run file that bundles the configuration, the frames,
the flow series and the witness reports
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
from loguru import logger
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_random_exponential

from idflow.dynamics import FlowRecord
from idflow.errors import IdflowError, IoError
from idflow.experiment import ExperimentConfig
from idflow.fields import FieldFrame
from idflow.witness import IntervalReport

CSV_COLUMNS = ['axis1', 'axis2', 'value', 'mask']
PathLike = Union[str, Path]


@dataclass
class Run:
    """Everything one invocation produced"""
    config: Optional[ExperimentConfig] = None
    frames: List[FieldFrame] = field(default_factory=list)
    series: Dict[str, List[FlowRecord]] = field(default_factory=dict)
    reports: List[IntervalReport] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)


def number(value: Optional[float]) -> str:
    """Shortest round-trip decimal of a float; empty for None and non-finite values"""
    if value is None or not math.isfinite(value):
        return ''
    return repr(float(value))


@retry(wait=wait_random_exponential(multiplier=0.1, max=2), stop=stop_after_attempt(3), reraise=True,
       retry=retry_if_exception_type(OSError))
def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(text)


def write_text(path: PathLike, text: str) -> Path:
    """
    Writes UTF-8 text with LF line endings, retrying transient OS errors
    :param path: destination file
    :param text: file contents
    :return: the written path
    """
    target = Path(path)
    try:
        _write(target, text)
    except OSError as err:
        raise IoError(f'Could not write {target}: {err}') from err
    logger.debug('Wrote {} ({} bytes)', target, len(text.encode('utf-8')))
    return target


def frame_table(frame: FieldFrame) -> pd.DataFrame:
    """Row-major table of a frame with the CSV columns, all values already formatted"""
    rows = [(number(a), number(b), '' if frame.mask[i, j] else number(frame.values[i, j]), str(frame.mask[i, j]))
            for i, a in enumerate(frame.axis1) for j, b in enumerate(frame.axis2)]
    return pd.DataFrame(rows, columns=CSV_COLUMNS, dtype=str)


def emit_csv(frame: FieldFrame, path: PathLike) -> Path:
    """
    Writes a frame as CSV with header axis1,axis2,value,mask; masked cells have an empty value
    :param frame: FieldFrame
    :param path: destination file
    :return: the written path
    """
    return write_text(path, frame_table(frame).to_csv(index=False, lineterminator='\n'))


def series_table(records: List[FlowRecord]) -> pd.DataFrame:
    """Table of a flow series: t, idqs, idf, ridf, one sub_idf and gamma column per channel, status"""
    channels = len(records[0].gamma) if records else 0
    columns = ['t', 'idqs', 'idf', 'ridf'] + [f'sub_idf_{i}' for i in range(channels)] + \
        [f'gamma_{i}' for i in range(channels)] + ['status']
    rows = [[number(r.t), number(r.idqs), number(r.idf), number(r.ridf)] + [number(v) for v in r.sub_idf] +
            [number(v) for v in r.gamma] + [r.status] for r in records]
    return pd.DataFrame(rows, columns=columns, dtype=str)


def emit_series_csv(records: List[FlowRecord], path: PathLike) -> Path:
    """Writes one flow series as a curve CSV"""
    return write_text(path, series_table(records).to_csv(index=False, lineterminator='\n'))


def _finite(obj: Any) -> Any:
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def run_document(run: Run) -> Dict[str, Any]:
    """JSON-ready representation of a run; non-finite floats become null"""
    return _finite({
        'config': run.config.model_dump(mode='json', by_alias=True) if run.config is not None else None,
        'frames': [f.to_dict() for f in run.frames],
        'series': {name: [r.to_dict() for r in records] for name, records in run.series.items()},
        'reports': [r.to_dict() for r in run.reports],
        'extras': run.extras,
    })


def emit_json(run: Run, path: PathLike) -> Path:
    """
    Writes the run file with sorted keys, so identical runs give identical bytes
    :param run: Run
    :param path: destination file
    :return: the written path
    """
    return write_text(path, json.dumps(run_document(run), sort_keys=True, indent=1, allow_nan=False) + '\n')


def read_run(path: PathLike) -> Run:
    """
    Loads a run file written by emit_json
    :param path: run file
    :return: Run
    """
    source = Path(path)
    try:
        document = json.loads(source.read_text(encoding='utf-8'))
    except (OSError, json.JSONDecodeError) as err:
        raise IoError(f'Could not read run file {source}: {err}') from err
    try:
        config = ExperimentConfig.model_validate(document['config']) if document.get('config') else None
        return Run(config=config,
                   frames=[FieldFrame.from_dict(f) for f in document['frames']],
                   series={name: [FlowRecord.from_dict(r) for r in records]
                           for name, records in document['series'].items()},
                   reports=[IntervalReport.from_dict(r) for r in document['reports']],
                   extras=document.get('extras', {}))
    except (KeyError, TypeError, ValueError, IdflowError) as err:
        raise IoError(f'Run file {source} is malformed: {err}') from err
