# This file contains every file read and write of the toolkit.
import csv
import json
import logging
import math
import os
import re
from decimal import ROUND_FLOOR, Decimal, InvalidOperation, localcontext

import numpy as np

from src.constants import (
    BASE_OFFSET_MARKER,
    DEFAULT_CHUNK_SIZE,
    FORMAT_BASE_OFFSET,
    FORMAT_PLAIN,
    METADATA_PREFIX,
    TOOLKIT_NAME,
    TOOLKIT_VERSION,
)
from src.errors import ArgumentError, DataError, ParseError
from src.models import (
    EmpiricalCurve,
    Provenance,
    SpacingCurve,
    ThinningParam,
    TranscendentSolution,
    UnfoldedSequence,
    ZerosDataset,
)

logger = logging.getLogger(__name__)

# Dot-decimal only, so parsing never depends on the locale
_DECIMAL = re.compile(r'[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?')

# Heights near 1e22 carry more digits than the default decimal context
_DECIMAL_DIGITS = 64

# Metadata keys read back as numbers
_FLOAT_KEYS = {'rho_bar', 'xi', 'bin_width', 's_max', 'E', 'alpha', 'N_eff'}
_INT_KEYS = {'seed', 'n_ref', 'window', 'block', 'start_index', 'count'}


def _parse_decimal(text, line_number):
    if not _DECIMAL.fullmatch(text):
        raise ParseError(f"malformed number {text!r}", line_number)
    try:
        return Decimal(text)
    except InvalidOperation:
        raise ParseError(f"malformed number {text!r}", line_number) from None


def _format_float(value):
    return repr(float(value))


def _convert_meta(key, text):
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
    except ValueError:
        raise ParseError(f"metadata {key}={text!r} is not numeric") from None
    return text


class DataManagement:
    def __init__(self, app=None):
        self.app = app

    # Metadata header

    def _metadata_lines(self, extra=None):
        lines = [f"{METADATA_PREFIX} generator={TOOLKIT_NAME} {TOOLKIT_VERSION}"]
        config = getattr(self.app, 'config', None)
        if config is not None:
            lines.extend(f"{METADATA_PREFIX} {key}={value}" for key, value in config.metadata_items())
        for key in sorted(extra or {}):
            value = extra[key]
            if value is None:
                continue
            if isinstance(value, float):
                value = _format_float(value)
            lines.append(f"{METADATA_PREFIX} {key}={value}")
        return lines

    def _open_csv(self, path, columns, extra=None):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handle = open(path, 'w', newline='', encoding='utf-8')
        try:
            for line in self._metadata_lines(extra):
                handle.write(line + "\n")
            writer = csv.writer(handle)
            writer.writerow(columns)
        except BaseException:
            handle.close()
            raise
        return handle, writer

    @staticmethod
    def _read_csv(path):
        """Return (metadata, header, rows) of a '#'-headed CSV file"""
        if not os.path.exists(path):
            raise DataError(f"file not found: {path}")
        metadata = {}
        rows = []
        header = None
        with open(path, 'r', newline='', encoding='utf-8') as f:
            body = []
            for line in f:
                if line.startswith(METADATA_PREFIX):
                    key, sep, value = line[len(METADATA_PREFIX):].strip().partition('=')
                    if sep:
                        metadata[key.strip()] = _convert_meta(key.strip(), value.strip())
                else:
                    body.append(line)
            for row in csv.reader(body):
                if not row:
                    continue
                if header is None:
                    header = row
                    continue
                rows.append(row)
        if header is None:
            raise ParseError(f"{path}: missing column header")
        return metadata, header, rows

    # Zeros data sets

    def iter_zeros(self, path, fmt=FORMAT_PLAIN, chunk_size=DEFAULT_CHUNK_SIZE):
        """
        Yield (base, offsets) chunks of a zeros file.

        PlainHeights files are split into an integer base (the floor of the
        first height) and offsets parsed exactly before rounding to binary64.
        """
        if fmt not in (FORMAT_PLAIN, FORMAT_BASE_OFFSET):
            raise ArgumentError(f"unknown zeros format {fmt!r}")
        if not os.path.exists(path):
            raise DataError(f"zeros file not found: {path}")
        base = None
        previous = None
        chunk = []
        yielded = False
        with open(path, 'r', encoding='ascii', errors='strict') as f:
            try:
                for line_number, line in enumerate(f, start=1):
                    text = line.strip()
                    if not text or text.startswith(METADATA_PREFIX):
                        continue
                    if fmt == FORMAT_BASE_OFFSET and base is None:
                        marker, _, value = text.partition(' ')
                        value = value.strip()
                        if marker != BASE_OFFSET_MARKER or not re.fullmatch(r'[+-]?\d+', value):
                            raise ParseError(f"expected '{BASE_OFFSET_MARKER} <integer>', got {text!r}", line_number)
                        base = int(value)
                        continue
                    number = _parse_decimal(text, line_number)
                    if base is None:
                        base = int(number.to_integral_value(rounding=ROUND_FLOOR))
                    if fmt == FORMAT_PLAIN:
                        with localcontext() as ctx:
                            ctx.prec = _DECIMAL_DIGITS
                            number -= base
                    if previous is not None and number <= previous:
                        raise DataError(f"line {line_number}: entries must be strictly increasing")
                    previous = number
                    chunk.append(float(number))
                    if len(chunk) >= chunk_size:
                        yield base, np.array(chunk)
                        yielded = True
                        chunk = []
            except UnicodeDecodeError as e:
                raise ParseError(f"non-ASCII content in {path}: {e}") from None
        if chunk or not yielded:
            yield (base or 0), np.array(chunk, dtype=float)

    def load_zeros(self, path, fmt=FORMAT_PLAIN):
        """Read a whole zeros file into a ZerosDataset"""
        base = 0
        parts = []
        for base, offsets in self.iter_zeros(path, fmt):
            parts.append(offsets)
        offsets = np.concatenate(parts) if parts else np.empty(0)
        logger.info(f"Loaded {offsets.size} zeros from {path} (base={base})")
        return ZerosDataset(base=base, offsets=offsets)

    def write_zeros(self, path, base, offsets, fmt=FORMAT_PLAIN):
        with open(path, 'w', encoding='ascii') as f:
            if fmt == FORMAT_BASE_OFFSET:
                f.write(f"{BASE_OFFSET_MARKER} {int(base)}\n")
                for value in offsets:
                    f.write(f"{_format_float(value)}\n")
            else:
                with localcontext() as ctx:
                    ctx.prec = _DECIMAL_DIGITS
                    for value in offsets:
                        f.write(f"{Decimal(int(base)) + Decimal(_format_float(value))}\n")

    # Unfolded point files

    def write_points(self, path, chunks, metadata):
        """Write point chunks as one column; returns the number of points"""
        handle, writer = self._open_csv(path, ['x'], metadata)
        count = 0
        with handle:
            for chunk in chunks:
                writer.writerows([_format_float(x)] for x in chunk)
                count += len(chunk)
        logger.info(f"Wrote {count} points to {path}")
        return count

    def read_points_metadata(self, path):
        if not os.path.exists(path):
            raise DataError(f"points file not found: {path}")
        metadata = {}
        with open(path, 'r', encoding='utf-8') as f:
            for line in f:
                if not line.startswith(METADATA_PREFIX):
                    break
                key, sep, value = line[len(METADATA_PREFIX):].strip().partition('=')
                if sep:
                    metadata[key.strip()] = _convert_meta(key.strip(), value.strip())
        return metadata

    def iter_points(self, path, chunk_size=DEFAULT_CHUNK_SIZE):
        """Yield arrays of unfolded points, validating monotonicity across chunks"""
        if not os.path.exists(path):
            raise DataError(f"points file not found: {path}")
        previous = -math.inf
        chunk = []
        with open(path, 'r', encoding='utf-8') as f:
            header_seen = False
            for line_number, line in enumerate(f, start=1):
                text = line.strip()
                if not text or text.startswith(METADATA_PREFIX):
                    continue
                if not header_seen:
                    header_seen = True
                    if text == 'x':
                        continue
                value = float(_parse_decimal(text, line_number))
                if value <= previous:
                    raise DataError(f"line {line_number}: points must be strictly increasing")
                previous = value
                chunk.append(value)
                if len(chunk) >= chunk_size:
                    yield np.array(chunk)
                    chunk = []
        if chunk:
            yield np.array(chunk)

    def read_points(self, path):
        metadata = self.read_points_metadata(path)
        parts = list(self.iter_points(path))
        points = np.concatenate(parts) if parts else np.empty(0)
        if 'rho_bar' not in metadata:
            raise DataError(f"{path}: missing rho_bar metadata")
        meta = {k: v for k, v in metadata.items() if k not in ('generator', 'rho_bar')}
        return UnfoldedSequence(points=points, rho_bar=metadata['rho_bar'], source_meta=meta)

    # Transcendents

    def write_solution(self, path, solution):
        payload = {
            'generator': f"{TOOLKIT_NAME} {TOOLKIT_VERSION}",
            'config': self.app.config.to_dict() if getattr(self.app, 'config', None) else {},
            'solution': solution.to_dict(),
        }
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2)
        logger.info(f"Saved {solution!r} to {path}")

    def read_solution(self, path):
        if not os.path.exists(path):
            raise DataError(f"transcendent file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                payload = json.load(f)
            return TranscendentSolution.from_dict(payload['solution'])
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: invalid JSON ({e.msg})", e.lineno) from None
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"{path}: malformed transcendent record ({e})") from None

    def write_samples(self, path, solution, grid):
        """Tabulate value and first derivative of a solution on grid"""
        values = solution.fn.sample(grid, 0)
        slopes = solution.fn.sample(grid, 1)
        extra = {'kind': solution.kind.value, 'xi': solution.xi.xi, 'residual_sup': solution.residual_sup}
        handle, writer = self._open_csv(path, ['s', 'value', 'derivative'], extra)
        with handle:
            for row in zip(grid, values, slopes):
                writer.writerow([_format_float(v) for v in row])

    # Spacing curves

    def write_curve(self, path, curve, extra=None):
        meta = {'xi': curve.xi.xi, **curve.metadata, **(extra or {})}
        handle, writer = self._open_csv(path, ['s', 'leading', 'correction', 'provenance'], meta)
        with handle:
            for s, lead, corr, provenance in curve.rows():
                writer.writerow([_format_float(s), _format_float(lead), _format_float(corr), provenance])
        logger.info(f"Wrote {curve!r} to {path}")

    def read_curve(self, path):
        metadata, header, rows = self._read_csv(path)
        if header[:3] != ['s', 'leading', 'correction']:
            raise ParseError(f"{path}: unexpected columns {header}")
        if 'xi' not in metadata:
            raise DataError(f"{path}: missing xi metadata")
        try:
            table = np.array([[float(v) for v in row[:3]] for row in rows])
            provenance = Provenance(rows[0][3]) if rows and len(rows[0]) > 3 else Provenance.SIGMA_PATH
        except ValueError as e:
            raise ParseError(f"{path}: {e}") from None
        if table.size == 0:
            raise DataError(f"{path}: no curve rows")
        return SpacingCurve(
            xi=ThinningParam(metadata['xi']),
            grid=table[:, 0],
            leading=table[:, 1],
            correction=table[:, 2],
            provenance=provenance,
            metadata={k: v for k, v in metadata.items() if k not in ('generator', 'xi')},
        )

    def write_table(self, path, columns, rows, extra=None):
        """Generic numeric table, used for extrapolation and discrepancy reports"""
        handle, writer = self._open_csv(path, columns, extra)
        with handle:
            for row in rows:
                writer.writerow([_format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])

    # Empirical curves and residuals

    def write_empirical(self, path, curve):
        handle, writer = self._open_csv(
            path, ['bin_lo', 'bin_hi', 'bin_center', 'count', 'value', 'stderr'],
            {**curve.metadata, 'n_ref': curve.n_ref})
        with handle:
            for lo, hi, center, count, value, err in zip(curve.bin_edges[:-1], curve.bin_edges[1:],
                                                         curve.bin_centers, curve.counts,
                                                         curve.values, curve.stderr):
                writer.writerow([_format_float(lo), _format_float(hi), _format_float(center),
                                 int(count), _format_float(value), _format_float(err)])
        logger.info(f"Wrote {curve.counts.size} bins (n_ref={curve.n_ref}) to {path}")

    def read_empirical(self, path):
        metadata, header, rows = self._read_csv(path)
        if header[:4] != ['bin_lo', 'bin_hi', 'bin_center', 'count']:
            raise ParseError(f"{path}: unexpected columns {header}")
        if 'n_ref' not in metadata:
            raise DataError(f"{path}: missing n_ref metadata")
        try:
            lo = [float(row[0]) for row in rows]
            hi = [float(row[1]) for row in rows]
            counts = [int(row[3]) for row in rows]
        except ValueError as e:
            raise ParseError(f"{path}: {e}") from None
        if not rows:
            raise DataError(f"{path}: no histogram rows")
        edges = np.array(lo + [hi[-1]])
        meta = {k: v for k, v in metadata.items() if k != 'generator'}
        return EmpiricalCurve(bin_edges=edges, counts=np.array(counts), n_ref=metadata['n_ref'], metadata=meta)

    def write_residuals(self, path, report):
        handle, writer = self._open_csv(
            path, ['bin_center', 'value', 'stderr', 'theory', 'residual'], report.metadata)
        with handle:
            for row in zip(report.bin_centers, report.values, report.stderr, report.theory, report.residual):
                writer.writerow([_format_float(v) for v in row])
        logger.info(f"Wrote residual report to {path}")

    # Configuration

    def read_config_file(self, path):
        """Parse 'key = value' lines; keys are normalized to underscores"""
        if not os.path.exists(path):
            raise ArgumentError(f"config file not found: {path}")
        values = {}
        with open(path, 'r', encoding='utf-8') as f:
            for line_number, line in enumerate(f, start=1):
                text = line.split('#', 1)[0].strip()
                if not text:
                    continue
                key, sep, value = text.partition('=')
                if not sep or not key.strip():
                    raise ArgumentError(f"{path} line {line_number}: expected 'key = value', got {text!r}")
                values[key.strip().replace('-', '_')] = value.strip()
        logger.debug(f"Read {len(values)} settings from {path}")
        return values
