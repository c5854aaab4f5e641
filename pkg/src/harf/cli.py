"""Command-line entry point: ``harf score|eval|agree|normalize|align``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import __version__
from .agreement import (
    Rounding,
    align_to_subjects,
    disagreement_rows,
    pairwise_report,
    read_scores_csv,
)
from .alignment import align
from .alphabet import PhonemeAlphabet, UnknownPolicy, default_alphabet, load_alphabet_file, normalize
from .errors import DatasetError, HarfError, SubjectMismatchError
from .evaluation import format_percent, format_rtf, summarize, utterance_per, utterance_rtf
from .ingest import HttpBackend, InlineBackend, Utterance, fetch_predictions, load_dataset
from .pipeline import assess, eval_record
from .scoring import ScoreWeights
from .segmentation import SegmenterHook

log = logging.getLogger("harf")

EXIT_OK = 0
EXIT_ROW_FAILURES = 1
EXIT_USAGE = 2

SUMMARY_FIELDS = ["id", "status", "harf_score", "clinical_score", "n", "S", "D", "I", "error"]
AGREEMENT_FIELDS = ["group", "a", "b", "pcc", "scc", "icc_2_1", "mae", "rmse", "exact_pct", "within1_pct"]


@dataclass(frozen=True)
class RunConfig:
    alphabet: PhonemeAlphabet
    alphabet_path: str | None
    weights: ScoreWeights
    backend: InlineBackend | HttpBackend
    rounding: Rounding
    out: Path
    jobs: int
    strict: bool
    on_unknown: UnknownPolicy
    flag_below: float | None
    segmenter: SegmenterHook | None

    def header(self) -> dict:
        """Provenance block copied into every report."""
        return {
            "version": __version__,
            "weights": self.weights.to_dict(),
            "alphabet": {"name": self.alphabet.name, "version": self.alphabet.version, "path": self.alphabet_path},
            "rounding": self.rounding.value,
            "on_unknown": self.on_unknown.value,
            "flag_below": self.flag_below,
        }


def _fmt(value: float | None) -> str:
    return "undefined" if value is None else f"{value:.2f}"


def _safe_name(uid: str, taken: set[str]) -> str:
    name = re.sub(r"[^A-Za-z0-9._-]", "_", uid) or "_"
    if name in taken:
        name = f"{name}-{hashlib.sha1(uid.encode('utf-8')).hexdigest()[:8]}"
    taken.add(name)
    return name


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, fields: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _config(args: argparse.Namespace) -> RunConfig:
    alphabet_path = getattr(args, "alphabet", None)
    alphabet = load_alphabet_file(alphabet_path) if alphabet_path else default_alphabet()
    weights = ScoreWeights.from_primary(w_lcs=getattr(args, "w_lcs", 0.6), w_acc=getattr(args, "w_acc", 0.6))
    if getattr(args, "backend", "inline") == "http":
        if not args.endpoint:
            raise HarfError("--backend http needs --endpoint")
        backend = HttpBackend(args.endpoint, timeout=args.timeout, retries=args.retries)
    else:
        backend = InlineBackend()
    jobs = getattr(args, "jobs", 1)
    if jobs < 1:
        raise HarfError("--jobs must be >= 1")
    segmenter_url = getattr(args, "segmenter", None)
    return RunConfig(
        alphabet=alphabet,
        alphabet_path=alphabet_path,
        weights=weights,
        backend=backend,
        rounding=Rounding(getattr(args, "rounding", "integer")),
        out=Path(getattr(args, "out", "harf-out")),
        jobs=jobs,
        strict=getattr(args, "strict", False),
        on_unknown=UnknownPolicy(getattr(args, "on_unknown", "error")),
        flag_below=getattr(args, "flag_below", None),
        segmenter=SegmenterHook(segmenter_url, timeout=args.timeout, retries=args.retries) if segmenter_url else None,
    )


def _load_with_predictions(path: str, cfg: RunConfig) -> tuple[list[Utterance], dict[str, str]]:
    utterances = load_dataset(path)
    fetched = fetch_predictions(cfg.backend, utterances, jobs=cfg.jobs)
    return fetched.utterances, dict(fetched.failures)


def cmd_score(args: argparse.Namespace) -> int:
    cfg = _config(args)
    utterances, failures = _load_with_predictions(args.dataset, cfg)
    reports_dir = cfg.out / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)

    def work(utt: Utterance):
        if utt.id in failures:
            return None, failures[utt.id]
        try:
            return assess(
                utt,
                cfg.alphabet,
                cfg.weights,
                on_unknown=cfg.on_unknown,
                flag_below=cfg.flag_below,
                hook=cfg.segmenter,
            ), None
        except (HarfError, ValueError) as exc:
            return None, str(exc)

    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(work, utterances))

    rows = []
    taken: set[str] = set()
    header = cfg.header()
    for utt, (assessment, error) in zip(utterances, results):
        if assessment is None:
            rows.append({"id": utt.id, "status": "failed", "error": error})
            continue
        report = assessment.report
        doc = {"config": header, **assessment.to_dict()}
        _write_json(reports_dir / f"{_safe_name(utt.id, taken)}.json", doc)
        rows.append(
            {
                "id": utt.id,
                "status": "ok",
                "harf_score": _fmt(report.harf_score),
                "clinical_score": _fmt(report.clinical_score),
                "n": report.n_ref,
                "S": report.s,
                "D": report.d,
                "I": report.i,
                "error": "",
            }
        )
    _write_csv(cfg.out / "summary.csv", SUMMARY_FIELDS, rows)
    failed = [r["id"] for r in rows if r["status"] == "failed"]
    _write_json(
        cfg.out / "summary.json",
        {"config": header, "utterances": len(rows), "failed": failed, "errors": {r["id"]: r["error"] for r in rows if r["status"] == "failed"}},
    )
    print(f"scored {len(rows) - len(failed)}/{len(rows)} utterances -> {cfg.out / 'summary.csv'}")
    for r in rows:
        if r["status"] == "failed":
            print(f"  FAILED {r['id']}: {r['error']}", file=sys.stderr)
    if failed and cfg.strict:
        return EXIT_ROW_FAILURES
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _config(args)
    utterances, failures = _load_with_predictions(args.dataset, cfg)
    records = []
    for utt in utterances:
        if utt.id in failures:
            continue
        try:
            records.append(eval_record(utt, cfg.alphabet, cfg.on_unknown))
        except (HarfError, ValueError) as exc:
            failures[utt.id] = str(exc)
    if not records:
        raise HarfError("no utterance could be evaluated")
    summary = summarize(records)
    cfg.out.mkdir(parents=True, exist_ok=True)
    doc = {"config": cfg.header(), **summary.to_dict(), "failed": sorted(failures)}
    _write_json(cfg.out / "eval_summary.json", doc)
    _write_csv(
        cfg.out / "eval_per_utterance.csv",
        ["id", "n_ref", "S", "D", "I", "per", "rtf"],
        [
            {
                "id": r.utterance_id,
                "n_ref": r.n_ref,
                "S": r.s,
                "D": r.d,
                "I": r.i,
                "per": _fmt(utterance_per(r)),
                "rtf": "unavailable" if utterance_rtf(r) is None else f"{utterance_rtf(r):.4f}",
            }
            for r in records
        ],
    )
    print(f"utterances: {summary.utterance_count}  reference phonemes: {summary.total_ref_phonemes}")
    print(f"PER (micro): {format_percent(summary.per)}")
    print(f"PER (macro): {format_percent(summary.macro_per)}")
    print(f"RTF: {format_rtf(summary.rtf)}")
    if summary.rtf is None:
        print(f"warning: RTF unavailable, {len(summary.missing_timing)} utterance(s) lack timings", file=sys.stderr)
    for uid in sorted(failures):
        print(f"  FAILED {uid}: {failures[uid]}", file=sys.stderr)
    if failures and cfg.strict:
        return EXIT_ROW_FAILURES
    return EXIT_OK


def _read_system(entry: str) -> tuple[str, dict[str, float]]:
    """Parse ``NAME=PATH``; PATH is a report directory, a report JSON or a summary CSV."""
    if "=" not in entry:
        raise HarfError(f"--system expects NAME=PATH, got {entry!r}")
    name, raw_path = entry.split("=", 1)
    path = Path(raw_path)
    scores: dict[str, float] = {}
    if path.is_dir():
        files = sorted(path.glob("*.json"))
    elif path.suffix.lower() == ".csv":
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row.get("status", "ok") == "ok":
                    scores[row["id"]] = float(row["clinical_score"])
        return name, scores
    else:
        files = [path]
    for f in files:
        doc = json.loads(f.read_text(encoding="utf-8"))
        try:
            scores[doc["id"]] = float(doc["scores"]["clinical_score"])
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"{f}: not a score report ({exc})") from None
    return name, scores


def cmd_agree(args: argparse.Namespace) -> int:
    rounding = Rounding(args.rounding)
    out = Path(args.out)
    matrix, systems = read_scores_csv(args.ratings)
    for entry in args.system or []:
        name, scores = _read_system(entry)
        systems[name] = align_to_subjects(name, scores, matrix.subject_ids)
    rows = pairwise_report(matrix, systems, rounding)

    out.mkdir(parents=True, exist_ok=True)
    table = [
        {"group": r.group, "a": r.a, "b": r.b, **{k: _fmt(v) for k, v in r.report.to_dict().items()}}
        for r in rows
    ]
    _write_csv(out / "agreement.csv", AGREEMENT_FIELDS, table)
    _write_json(
        out / "agreement.json",
        {
            "rounding": rounding.value,
            "subjects": len(matrix.subject_ids),
            "raters": list(matrix.rater_ids),
            "systems": list(systems),
            "rows": [{"group": r.group, "a": r.a, "b": r.b, **r.report.to_dict()} for r in rows],
        },
    )
    dis = disagreement_rows(matrix, systems)
    _write_csv(out / "disagreement.csv", ["group", "a", "b", "subject_id", "a_score", "b_score", "abs_diff"], dis)

    current = None
    print(f"{'pair':<28}{'PCC':>8}{'SCC':>8}{'ICC':>8}{'MAE':>7}{'RMSE':>7}{'Exact':>8}{'+-1':>8}")
    for r, cells in zip(rows, table):
        if r.group != current:
            current = r.group
            print(current)
        print(
            f"  {r.label:<26}{cells['pcc']:>8}{cells['scc']:>8}{cells['icc_2_1']:>8}"
            f"{cells['mae']:>7}{cells['rmse']:>7}{cells['exact_pct']:>8}{cells['within1_pct']:>8}"
        )
    return EXIT_OK


def _tokens(values: list[str]) -> list[str]:
    # accept either separate args or a single whitespace-separated string
    return [tok for v in values for tok in v.split()]


def cmd_normalize(args: argparse.Namespace) -> int:
    cfg = _config(args)
    print(" ".join(normalize(_tokens(args.tokens), cfg.alphabet, cfg.on_unknown)))
    return EXIT_OK


def cmd_align(args: argparse.Namespace) -> int:
    ref, pred = _tokens([args.ref]), _tokens([args.pred])
    if args.normalize:
        cfg = _config(args)
        ref = normalize(ref, cfg.alphabet, cfg.on_unknown)
        pred = normalize(pred, cfg.alphabet, cfg.on_unknown)
    a = align(ref, pred)
    for op in a.ops:
        print(f"{op.kind.value:<11}{op.ref or '-':>6} {op.pred or '-':<6}")
    print(f"S={a.s_count} D={a.d_count} I={a.i_count} distance={a.distance}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harf", description="Phoneme-level pronunciation scoring")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    alphabet = argparse.ArgumentParser(add_help=False)
    alphabet.add_argument("--alphabet", help="alphabet config JSON (default: $HARF_ALPHABET or bundled profile)")
    alphabet.add_argument(
        "--on-unknown", choices=[p.value for p in UnknownPolicy], default="error",
        help="unmappable tokens: fail the utterance (default) or drop them with a warning",
    )

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("dataset", help="utterance JSONL file")
    run.add_argument("--out", default="harf-out")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--backend", choices=["inline", "http"], default="inline")
    run.add_argument("--endpoint", help="prediction service URL for --backend http")
    run.add_argument("--timeout", type=float, default=30.0)
    run.add_argument("--retries", type=int, default=2)
    mode = run.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", help="exit nonzero if any utterance fails")
    mode.add_argument("--keep-going", dest="strict", action="store_false", help="record failures and continue (default)")
    run.set_defaults(strict=False)

    p = sub.add_parser("score", parents=[alphabet, run], help="score utterances")
    p.add_argument("--w-lcs", type=float, default=0.6, help="weight of the LCS ratio (PronScore gets the rest)")
    p.add_argument("--w-acc", type=float, default=0.6, help="weight of accuracy inside PronScore")
    p.add_argument("--flag-below", type=float, help="flag words whose clinical score is below this value")
    p.add_argument("--segmenter", help="URL of an external word segmenter (projection is used otherwise)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", parents=[alphabet, run], help="PER / RTF over a dataset")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("agree", help="pairwise agreement table")
    p.add_argument("ratings", help="CSV with subject_id,rater_id,score (systems as rater_id sys:NAME)")
    p.add_argument("--system", action="append", metavar="NAME=PATH",
                   help="system scores from a report directory, report JSON or summary CSV")
    p.add_argument("--rounding", choices=[r.value for r in Rounding], default="integer")
    p.add_argument("--out", default="harf-out")
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("normalize", parents=[alphabet], help="normalize raw tokens")
    p.add_argument("tokens", nargs="+")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("align", parents=[alphabet], help="print the edit operations between two sequences")
    p.add_argument("ref", help="reference tokens, space separated")
    p.add_argument("pred", help="predicted tokens, space separated")
    p.add_argument("--normalize", action="store_true", help="normalize both sides first")
    p.set_defaults(func=cmd_align)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SubjectMismatchError as exc:
        print(f"error: subject mismatch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HarfError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
