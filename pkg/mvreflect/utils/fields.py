"""
Column names and loading/writing of the CSV files produced by mvreflect.
"""
import csv

import numpy as np

TIME = 't'
PARTICLE_ID = 'particle_id'
ATOM_ID = 'atom_id'
WEIGHT = 'weight'
LOCAL_TIME = 'l'
TILDE_LOCAL_TIME = 'l_tilde'
SUP_ABS = 'sup_abs'
VALUE = 'value'
CELL_CENTER = 'cell_center'
ITERATION = 'iteration'
DISTANCE = 'distance'

FLOAT_FORMAT = '%.17g'


def coord_names(dim, prefix='x'):
    return ['{}{}'.format(prefix, i + 1) for i in range(dim)]


def flow_header(dim):
    return [TIME, PARTICLE_ID] + coord_names(dim) + [LOCAL_TIME, TILDE_LOCAL_TIME]


def measure_header(dim):
    return [ATOM_ID] + coord_names(dim) + [WEIGHT]


def density_header(dim):
    if dim == 1:
        return [TIME, CELL_CENTER, VALUE]
    return [TIME] + coord_names(dim, prefix=CELL_CENTER + '_') + [VALUE]


class CsvTable:

    @staticmethod
    def write(path, header, block):
        """ Write a numeric block under `header`.
        Values use a fixed 17-digit format so identical arrays give identical bytes.
        """
        block = np.atleast_2d(np.asarray(block, dtype=float))
        if block.size and block.shape[1] != len(header):
            raise ValueError('block has {} columns, header has {}'.format(block.shape[1], len(header)))
        with open(path, 'w', newline='') as f:
            f.write(','.join(header) + '\n')
            if block.size:
                np.savetxt(f, block, fmt=FLOAT_FORMAT, delimiter=',')

    @staticmethod
    def write_records(path, records):
        """ Write a list of flat dicts (report rows, diagnostics) with the keys of the first record as header. """
        if not records:
            with open(path, 'w', newline='') as f:
                f.write('')
            return
        header = list(records[0].keys())
        with open(path, 'w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=header, lineterminator='\n')
            writer.writeheader()
            for record in records:
                writer.writerow({key: _format_cell(record.get(key)) for key in header})

    @staticmethod
    def load(path):
        """ Load a numeric CSV written by `write`.
        Returns the header and a dict mapping each column name to a float array.
        """
        with open(path, newline='') as f:
            reader = csv.reader(f)
            header = next(reader)
        data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
        if data.size == 0:
            data = np.zeros((0, len(header)))
        return header, {name: data[:, i] for i, name in enumerate(header)}


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    return value
