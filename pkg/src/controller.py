"""
controller.py: Command handlers behind the `por` command line.
Each handler validates its inputs, runs one operation and writes human-readable lines to
the output stream; the return value is the process exit code.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TextIO

from . import models
from .analysis import max_n, max_n_table, threshold_for, verifier_storage_lower_bound
from .audit import min_sample_all_correct, omega_for, plan_sample_size, rejection_table
from .errors import ConfigError, ParameterError, PorError, ProtocolError, RemoteProverError, StoreExhausted
from .extractor import extract, sw_extract
from .keyed_sw import (load_key_file, load_tag_file, save_key_file, save_tag_file, sw_keygen,
                       sw_tag, sw_verify)
from .schemes import SchemeDescriptor, SchemeKind, challenge_at, challenge_count
from .service.client import RemoteProver, audit_session
from .service.pairstore import load_pair_store, precompute_pairs, save_pair_store
from .service.server import ServerState, parse_fault, serve
from .service.storage import encode_file, load_blocks_file, save_blocks_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INSUFFICIENT = 3
EXIT_TIE = 4
EXIT_ERROR = 10
EXIT_CONFIG = 11
EXIT_PROTOCOL = 12
EXIT_EXHAUSTED = 13

SCHEME_OVERRIDES = ("scheme", "q", "n", "k", "ell", "code_kind", "code_file")


def exit_code_for(error: BaseException) -> int:
    """Map an exception escaping a handler to the documented exit code."""
    if isinstance(error, StoreExhausted):
        return EXIT_EXHAUSTED
    if isinstance(error, (ConfigError, FileNotFoundError)):
        return EXIT_CONFIG
    if isinstance(error, (ProtocolError, RemoteProverError, ConnectionError)):
        return EXIT_PROTOCOL
    if isinstance(error, PorError):
        return EXIT_ERROR
    if isinstance(error, ValueError):
        return EXIT_CONFIG
    return EXIT_ERROR


class PorController:
    """
    Runs commands for main.py. Output goes to `out` so tests can capture it.
    """
    def __init__(self, out: TextIO | None = None, err: TextIO | None = None):
        self._out = out or sys.stdout
        self._err = err or sys.stderr

    def _emit(self, line: str = "") -> None:
        self._out.write(line + "\n")

    def _diagnose(self, line: str) -> None:
        logger.info("%s", line)
        self._err.write(line + "\n")

    def load_scheme(self, args: argparse.Namespace) -> SchemeDescriptor:
        """
        Scheme from --config plus flag overrides, validated as a whole.

        Raises:
            ConfigError: listing every validation failure.
        """
        overrides = {name: getattr(args, name, None) for name in SCHEME_OVERRIDES}
        config = models.load_scheme_config(getattr(args, "config", None), overrides)
        validator = models.SchemeConfigValidator()
        if not validator.validate(config):
            for error in validator.latest_errors:
                logger.error("Config: %s", error)
            raise ConfigError(validator.latest_errors)
        return config.to_descriptor()

    @staticmethod
    def load_plan(text: str) -> models.AuditPlan:
        try:
            plan = models.AuditPlan.parse(text)
        except ValueError as e:
            raise ConfigError([str(e)]) from e
        validator = models.AuditPlanValidator()
        if not validator.validate(plan):
            raise ConfigError(validator.latest_errors)
        return plan

    @staticmethod
    def _unit(args: argparse.Namespace, scheme: SchemeDescriptor):
        blocks = load_blocks_file(args.blocks, scheme.code)
        return blocks.unit(getattr(args, "unit", 0) or 0)

    @staticmethod
    def _endpoint(text: str) -> tuple[str, int]:
        try:
            return models.parse_endpoint(text)
        except ValueError as e:
            raise ConfigError([str(e)]) from e

    def encode(self, args: argparse.Namespace) -> int:
        scheme = self.load_scheme(args)
        data = Path(args.input).read_bytes()
        blocks = encode_file(data, scheme.code)
        save_blocks_file(blocks, args.out)
        self._emit(f"encoded {blocks.length} bytes into {len(blocks.units)} unit(s) of "
                   f"{scheme.n} blocks -> {args.out}")
        return EXIT_OK

    def tag(self, args: argparse.Namespace) -> int:
        scheme = self.load_scheme(args)
        if scheme.kind != SchemeKind.SW:
            raise ConfigError([f"Tags belong to the sw scheme, config names {scheme.kind.value}"])
        M = self._unit(args, scheme)
        key = sw_keygen(scheme.code.field, scheme.n, args.seed)
        save_key_file(key, args.key_out)
        save_tag_file(sw_tag(key, M), args.tag_out)
        self._emit(f"key -> {args.key_out} (keep with the verifier)")
        self._emit(f"tag -> {args.tag_out} (give to the prover)")
        return EXIT_OK

    def pairs(self, args: argparse.Namespace) -> int:
        scheme = self.load_scheme(args)
        store = precompute_pairs(scheme, self._unit(args, scheme), args.count, args.seed)
        save_pair_store(store, args.out)
        self._emit(f"{len(store.records)} pair(s) -> {args.out}")
        return EXIT_OK

    def serve(self, args: argparse.Namespace) -> int:
        scheme = self.load_scheme(args)
        host, port = self._endpoint(args.listen)
        tag = load_tag_file(args.tag) if args.tag else None
        state = ServerState(scheme, self._unit(args, scheme), tag, parse_fault(args.fault))
        try:
            serve(state, host, port)
        except KeyboardInterrupt:
            logger.info("Prover stopped")
        return EXIT_OK

    def audit(self, args: argparse.Namespace) -> int:
        scheme = self.load_scheme(args)
        plan = self.load_plan(args.plan)
        sources = [s for s in (args.pairs, args.key, args.blocks) if s]
        if len(sources) != 1:
            raise ConfigError(["Give exactly one of --pairs, --key or --blocks"])
        if args.pairs:
            source = load_pair_store(args.pairs)
        elif args.key:
            source = load_key_file(args.key)
        else:
            source = self._unit(args, scheme)
        report = audit_session(self._endpoint(args.endpoint), scheme, plan, source)
        self._emit(models.audit_record(report))
        if report.advice:
            self._emit(report.advice)
        if args.yaml:
            models.export_report_yaml(report, args.yaml)
        return EXIT_OK if report.rejected else EXIT_INSUFFICIENT

    def extract(self, args: argparse.Namespace) -> int:
        scheme = self.load_scheme(args)
        prover = RemoteProver(self._endpoint(args.endpoint), scheme)
        try:
            if scheme.kind == SchemeKind.SW:
                result = sw_extract(prover, scheme)
            else:
                result = extract(prover, scheme)
            if args.key:
                key = load_key_file(args.key)
                accepted = sum(1 for ordinal in range(challenge_count(scheme))
                               if sw_verify(key, challenge_at(scheme, ordinal), prover.respond_at(ordinal)))
                self._diagnose(f"acceptable under the key: {accepted}/{challenge_count(scheme)}")
        finally:
            prover.close()
        self._emit(" ".join(str(v) for v in result.m_hat.values))
        self._diagnose(f"distance={result.distance} tie={str(result.tie).lower()} "
                       f"unique={str(result.unique).lower()} queries={result.queries}")
        if args.yaml:
            models.export_report_yaml(result, args.yaml)
        return EXIT_TIE if result.tie else EXIT_OK

    def analyze(self, args: argparse.Namespace) -> int:
        match args.what:
            case "dstar" | "threshold":
                scheme = self.load_scheme(args)
                report = threshold_for(scheme)
                if args.what == "dstar":
                    self._emit(f"d*={report.dstar} (formula {report.dstar_formula}, "
                               f"exact {report.dstar_exact}) gamma={report.gamma}")
                else:
                    self._emit(f"threshold={report.threshold} ({report.threshold_float:.6f}) "
                               f"d*={report.dstar} gamma={report.gamma} omega={omega_for(report)} "
                               f"source={report.source}")
                if args.yaml:
                    models.export_report_yaml(report, args.yaml)
            case "max-n":
                self._need(args, "ell", "d", "succ")
                self._emit(str(max_n(args.ell, args.d, args.succ, args.method)))
            case "lower-bound":
                self._need(args, "k", "q", "gamma", "delta_size")
                bound = verifier_storage_lower_bound(args.k, args.q, args.gamma, args.delta_size)
                self._emit(f"H(V) >= {bound.bits:.6g} bits; unkeyed extraction "
                           f"{'possible' if bound.unkeyed_feasible else 'infeasible'}")
            case "max-n-table":
                for row in max_n_table():
                    flag = " MISMATCH " + ",".join(row.mismatches) if row.mismatches else ""
                    self._emit(f"l={row.ell} d={row.d} succ={row.succ} exact={row.exact} "
                               f"estimate={row.estimate} published=({row.published_exact}, "
                               f"{row.published_estimate}){flag}")
            case "rejection-table":
                for row in rejection_table():
                    marks = " ".join("reject" if r else "-" for r in row.rejects)
                    flag = " MISMATCH" if row.mismatch else ""
                    self._emit(f"p0={row.p0} t={row.t} g={row.g} p={row.p_value:.4g} {marks}{flag}")
            case _:
                raise ConfigError([f"Unknown analysis {args.what!r}"])
        return EXIT_OK

    @staticmethod
    def _need(args: argparse.Namespace, *names: str) -> None:
        missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name, None) is None]
        if missing:
            raise ConfigError([f"Missing {', '.join(missing)}"])

    def plan(self, args: argparse.Namespace) -> int:
        scheme = self.load_scheme(args)
        report = threshold_for(scheme)
        omega = omega_for(report)
        p0 = (omega - 1) / report.gamma
        if not p0 < args.assumed_succ <= 1:
            raise ParameterError(f"assumed success {args.assumed_succ} must exceed p0={p0:.4f}")
        self._emit(f"omega={omega} gamma={report.gamma} p0={p0:.6f}")
        if p0 > 0:
            self._emit(f"all-correct sample size: t={min_sample_all_correct(p0, args.alpha)}")
        result = plan_sample_size(p0, args.assumed_succ, args.alpha, args.power,
                                  range(args.t_step, args.t_max + 1, args.t_step))
        if result.t is None:
            self._emit(f"no t up to {args.t_max} reaches power {args.power}")
            return EXIT_INSUFFICIENT
        row = next(r for r in result.rows if r.t == result.t)
        self._emit(f"t={row.t} critical_g={row.critical_g} power={row.power:.4f}")
        return EXIT_OK
