""" idflow module """
from . import cli, constants, dynamics, emit, errors, experiment, fields, fisher, operators, qubit, record_types, svg, \
    witness

__all__ = ['cli', 'constants', 'dynamics', 'emit', 'errors', 'experiment', 'fields', 'fisher', 'operators', 'qubit',
           'record_types', 'svg', 'witness']
