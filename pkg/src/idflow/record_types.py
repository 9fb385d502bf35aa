"""Serialized shapes of the records written to JSON run files"""
# pylint:disable=too-few-public-methods
# pylint:disable=inherit-non-class
from typing import List, Optional, TypedDict


class FlowRecordType(TypedDict):
    """One FlowRecord"""
    t: float
    idqs: Optional[float]
    idf: Optional[float]
    ridf: Optional[float]
    sub_idf: List[Optional[float]]
    gamma: List[Optional[float]]
    status: str


class IntervalType(TypedDict):
    """One interval of an IntervalReport"""
    start: float
    end: float
    sign: int
    peak_time: Optional[float]
    peak_value: Optional[float]
    trough_time: Optional[float]
    trough_value: Optional[float]


class IntervalReportType(TypedDict):
    """One IntervalReport"""
    witness_kind: str
    channel: Optional[int]
    grid_step: float
    intervals: List[IntervalType]


class FieldFrameType(TypedDict):
    """One FieldFrame"""
    field: str
    time: float
    axis_labels: List[str]
    axis1: List[float]
    axis2: List[float]
    values: List[List[Optional[float]]]
    mask: List[List[str]]
