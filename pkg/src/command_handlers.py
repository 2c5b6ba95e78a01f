# This file contains one handler per command; each returns a process exit code.

import logging
import math
import os

import numpy as np

from src import fredholm, painleve, spacing, zeros
from src.constants import EXIT_NUMERICAL, EXIT_OK
from src.errors import ArgumentError, DataError, InsufficientDataError
from src.models import (
    KernelSpec,
    Provenance,
    SolveOptions,
    TheoryParams,
    ThinningParam,
    TranscendentKind,
)

logger = logging.getLogger(__name__)


def _grid(s_max, step):
    if not step > 0.0 or not s_max > 0.0:
        raise ArgumentError(f"grid needs positive bounds and step, got max={s_max!r}, step={step!r}")
    count = int(round(s_max / step))
    return np.linspace(0.0, count * step, count + 1)


def _solve_options(args, s_max):
    return SolveOptions(
        s_max=s_max,
        degree=args.degree,
        step_factor=args.step_factor,
        min_second_deriv=args.min_second_deriv,
        origin_degree=args.origin_degree,
        residual_tol=args.residual_tol,
    )


class CommandHandlers:
    def __init__(self, app):
        self.app = app

    def emit(self, message):
        """Job summary line on standard output"""
        print(message, file=self.app.stdout)

    # Transcendents and spacing curves

    def cmd_solve(self, args):
        kind = TranscendentKind.parse(args.kind)
        opts = _solve_options(args, args.s_max)
        solution = painleve.solve(kind, args.xi, opts)
        self.app.data.write_solution(args.out, solution)
        samples = args.samples or os.path.splitext(args.out)[0] + ".csv"
        self.app.data.write_samples(samples, solution, _grid(args.s_max, args.sample_step))
        self.emit(f"{kind.value} xi={solution.xi.xi} segments={len(solution.fn.segments)} "
                  f"residual_sup={solution.residual_sup:.3e}")
        return EXIT_OK

    def _sigma_pair(self, xi, opts):
        sigma0 = painleve.solve_sigma0(xi, opts)
        return sigma0, painleve.solve_linear_correction(TranscendentKind.SIGMA1, sigma0, xi, opts)

    def _u_pair(self, xi, opts):
        u0 = painleve.solve_u0(xi, opts)
        return u0, painleve.solve_linear_correction(TranscendentKind.U1, u0, xi, opts)

    def cmd_spacing(self, args):
        xi = ThinningParam(args.xi)
        grid = _grid(args.grid_max, args.grid_step)
        base = _solve_options(args, args.grid_max)
        curves = {}
        if args.path in ('sigma', 'both'):
            opts = spacing.solve_options_for(args.grid_max, base, math.pi)
            sigma0, sigma1 = self._sigma_pair(xi, opts)
            curves['sigma'] = spacing.build_spacing_curve(Provenance.SIGMA_PATH, xi, grid, sigma0=sigma0, sigma1=sigma1)
        if args.path in ('u', 'both'):
            opts = spacing.solve_options_for(args.grid_max, base, 2.0 * math.pi)
            u0, u1 = self._u_pair(xi, opts)
            curves['u'] = spacing.build_spacing_curve(Provenance.U_PATH, xi, grid, u0=u0, u1=u1)

        primary = curves.get('sigma') or curves['u']
        if args.path != 'both':
            self.app.data.write_curve(args.out, primary)
            self.emit(f"spacing xi={xi.xi} path={args.path} points={grid.size}")
            return EXIT_OK

        sig, u = curves['sigma'], curves['u']
        d_leading = np.abs(sig.leading - u.leading)
        d_correction = np.abs(sig.correction - u.correction)
        discrepancy = float(max(d_leading.max(), d_correction.max()))
        self.app.data.write_curve(args.out, primary, {'max_discrepancy': discrepancy})
        if args.discrepancy_out:
            rows = zip(grid, sig.leading, u.leading, sig.correction, u.correction, d_leading, d_correction)
            self.app.data.write_table(
                args.discrepancy_out,
                ['s', 'leading_sigma', 'leading_u', 'correction_sigma', 'correction_u',
                 'abs_diff_leading', 'abs_diff_correction'],
                rows, {'max_discrepancy': discrepancy})
        self.emit(f"spacing xi={xi.xi} path=both points={grid.size} max_discrepancy={discrepancy:.3e}")
        if discrepancy > args.tolerance:
            logger.error(f"Cross-path discrepancy {discrepancy:.3e} exceeds {args.tolerance:.1e}")
            return EXIT_NUMERICAL
        return EXIT_OK

    # Fredholm determinants

    def cmd_det(self, args):
        xi = ThinningParam(args.xi)
        if args.kernel == 'finite':
            if args.N is None:
                raise ArgumentError("--kernel finite needs --N")
            kernel = KernelSpec.finite(args.N, xi)
        else:
            kernel = KernelSpec.sine(xi)
        columns = ['s', 'value', 'est_error']
        if args.trace:
            columns += ['trace', 'det_correction']
        if args.conditioned is not None:
            columns.append(f"E{args.conditioned}")

        rows = []
        for s in args.s:
            if args.kernel == 'finite':
                result = fredholm.finite_n_det(kernel.N, xi, s, args.m)
            else:
                result = fredholm.nystrom_det(kernel, s, args.m)
            row = [s, result.value, result.est_error]
            if args.trace:
                trace = fredholm.resolvent_trace_correction(xi, s, args.m)
                row += [trace, -xi.xi * result.value * trace]
            if args.conditioned is not None:
                row.append(fredholm.conditioned_gap(args.conditioned, s, args.m, args.h_xi))
            rows.append(row)
        self.app.data.write_table(args.out, columns, rows, {'kernel': args.kernel})
        worst = max(row[2] for row in rows) if rows else 0.0
        self.emit(f"det kernel={args.kernel} xi={xi.xi} points={len(rows)} max_est_error={worst:.3e}")
        return EXIT_OK

    def cmd_extrapolate(self, args):
        xi = ThinningParam(args.xi)
        n_list = fredholm.n_values(args.n_from, args.n_to, args.count)
        columns = ['s', 'limit', 'c2', 'painleve_leading', 'painleve_correction']
        grid_max = max(args.s) if args.s else 0.0
        opts = spacing.solve_options_for(grid_max, _solve_options(args, max(grid_max, 1.0)), 2.0 * math.pi)
        u0, u1 = self._u_pair(xi, opts)

        rows = []
        for s in args.s:
            limit, c2 = fredholm.extrapolated_spacing(xi, s, n_list, args.m, args.workers)
            rows.append([s, limit, c2, spacing.spacing_leading_u(u0, xi, s), spacing.spacing_correction_u(u0, u1, xi, s)])
            logger.info(f"s={s}: limit={limit!r}, c2={c2!r}")
        extra = {'n_values': ','.join(str(n) for n in n_list)}
        if rows:
            extra['max_leading_diff'] = max(abs(r[1] - r[3]) for r in rows)
            extra['max_correction_diff'] = max(abs(r[2] - r[4]) for r in rows)
        self.app.data.write_table(args.out, columns, rows, extra)
        self.emit(f"extrapolate xi={xi.xi} N={n_list[0]}..{n_list[-1]} ({len(n_list)} values) points={len(rows)}")
        return EXIT_OK

    # Zeros pipeline

    def cmd_zeros_unfold(self, args):
        if args.chunk_size < 2:
            raise ArgumentError(f"chunk size must be at least 2, got {args.chunk_size}")
        chunks = self.app.data.iter_zeros(args.input, args.format, args.chunk_size)
        first = next(chunks, None)
        if first is None or first[1].size < 2:
            raise InsufficientDataError(f"{args.input}: unfolding needs at least 2 heights")
        base, offsets = first
        unfolder = zeros.Unfolder(base, offsets[0], args.mode, args.block)

        def unfolded():
            yield unfolder.transform(offsets)
            for _, more in chunks:
                yield unfolder.transform(more)

        count = self.app.data.write_points(args.out, unfolded(), unfolder.metadata())
        self.emit(f"unfold points={count} rho_bar={unfolder.rho_bar!r} mode={args.mode}")
        return EXIT_OK

    def cmd_zeros_thin(self, args):
        xi = ThinningParam(args.xi)
        meta = self.app.data.read_points_metadata(args.input)
        if 'rho_bar' not in meta:
            raise DataError(f"{args.input}: missing rho_bar metadata")
        out_meta = {k: v for k, v in meta.items() if k not in ('generator', 'command')}
        out_meta.update({'xi': float(meta.get('xi', 1.0)) * xi.xi, 'seed': args.seed})
        kept = {'count': 0, 'seen': 0}

        def thinned():
            for chunk in self.app.data.iter_points(args.input, args.chunk_size):
                mask = zeros.keep_mask(kept['seen'], chunk.size, xi, args.seed)
                kept['seen'] += chunk.size
                yield chunk[mask]

        count = self.app.data.write_points(args.out, thinned(), out_meta)
        self.emit(f"thin xi={xi.xi} seed={args.seed} kept={count} of {kept['seen']}")
        return EXIT_OK

    def _accumulate(self, accumulator, args):
        for chunk in self.app.data.iter_points(args.input, args.chunk_size):
            accumulator.add(chunk)

    def _histogram_metadata(self, meta, statistic, rescale):
        out = {k: v for k, v in meta.items() if k not in ('generator', 'command')}
        out.update({'statistic': statistic, 'rescaled': rescale})
        return out

    def cmd_zeros_twopoint(self, args):
        meta = self.app.data.read_points_metadata(args.input)
        scale = float(meta.get('xi', 1.0)) if args.rescale else 1.0
        accumulator = zeros.TwoPointAccumulator(args.s_max, args.bin_width, args.window, scale)
        self._accumulate(accumulator, args)
        curve = accumulator.result(self._histogram_metadata(meta, 'twopoint', args.rescale))
        self.app.data.write_empirical(args.out, curve)
        self.emit(f"twopoint n_ref={curve.n_ref} bins={curve.counts.size}")
        return EXIT_OK

    def cmd_zeros_nnspacing(self, args):
        meta = self.app.data.read_points_metadata(args.input)
        scale = float(meta.get('xi', 1.0)) if args.rescale else 1.0
        accumulator = zeros.SpacingAccumulator(args.s_max, args.bin_width, scale)
        self._accumulate(accumulator, args)
        curve = accumulator.result(self._histogram_metadata(meta, 'nnspacing', args.rescale))
        self.app.data.write_empirical(args.out, curve)
        self.emit(f"nnspacing n_ref={curve.n_ref} bins={curve.counts.size}")
        return EXIT_OK

    def _theory_params(self, args, meta):
        height = args.height
        if height is None:
            if 'rho_bar' not in meta:
                raise ArgumentError("--height is required when the histogram has no rho_bar metadata")
            # invert rho_bar = log(E / 2 pi e) / 2 pi
            height = 2.0 * math.pi * math.e * math.exp(2.0 * math.pi * float(meta['rho_bar']))
        return TheoryParams(E=height, Lambda=args.Lambda, Q_over_Lambda=args.q_over_lambda)

    def cmd_zeros_compare(self, args):
        curve = self.app.data.read_empirical(args.input)
        meta = curve.metadata
        statistic = meta.get('statistic')
        if statistic not in ('twopoint', 'nnspacing'):
            raise DataError(f"{args.input}: histogram has no recognised 'statistic' metadata")
        xi = ThinningParam(float(meta.get('xi', 1.0)))
        rescaled = str(meta.get('rescaled', 'False')) == 'True'
        centers = curve.bin_centers

        if args.theory == 'poisson':
            # a unit-rate process after rescaling; density xi otherwise
            rate = 1.0 if rescaled else xi.xi
            if statistic == 'twopoint':
                theory = np.full(centers.size, rate)
            else:
                lo, hi = curve.bin_edges[:-1], curve.bin_edges[1:]
                theory = (np.exp(-rate * lo) - np.exp(-rate * hi)) / (hi - lo)
        else:
            params = self._theory_params(args, meta)
            if statistic == 'twopoint':
                if rescaled:
                    theory = np.array([zeros.theory_two_point(params, xi, s)[0] for s in centers])
                else:
                    theory = np.array([xi.xi * zeros.theory_two_point(params, xi, xi.xi * s)[0] for s in centers])
            else:
                if not args.curve:
                    raise ArgumentError("nnspacing comparison needs --curve (from the spacing command)")
                spacing_curve = self.app.data.read_curve(args.curve)
                if spacing_curve.xi != xi:
                    raise ArgumentError(f"curve is for xi={spacing_curve.xi.xi}, histogram for xi={xi.xi}")

                def leading(s):
                    return float(np.interp(s, spacing_curve.grid, spacing_curve.leading, right=0.0))

                def correction(s):
                    return float(np.interp(s, spacing_curve.grid, spacing_curve.correction, right=0.0))

                theory = np.array([spacing.theory_nn_spacing(params, xi, s, leading, correction, rescaled)
                                   for s in centers])
            meta['E'] = params.E
            meta['alpha'] = params.alpha
            meta['N_eff'] = params.N_eff

        report = zeros.compare(curve, theory)
        report.metadata['theory'] = args.theory
        self.app.data.write_residuals(args.out, report)
        self.emit(f"compare statistic={statistic} theory={args.theory} bins={centers.size} "
                  f"max_scaled={report.max_scaled:.3f} rms={report.rms:.3e}")
        return EXIT_OK
