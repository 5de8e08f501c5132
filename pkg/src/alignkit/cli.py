"""Batch command-line interface for the alignment pipeline.

Subcommands compose through files (or stdin/stdout for `align` and
`symmetrize`): synth | train | align | symmetrize | eval |
extract-phrases | project. Every run is a pure function of its flags,
input files, and seed; repeated runs with a fixed worker count are
bitwise identical.

Exit codes: 0 success, 1 usage or configuration error, 2 data/format
error, 3 numeric failure.

Options may also come from a flat `key=value` config file (one pair per
line, `#` comments); explicit flags take precedence and environment
variables are never consulted.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import contextmanager
from typing import TextIO

from . import hmm, model1, model2
from .alignment import (
    AlignmentSet,
    format_pharaoh_line,
    harmonize_dims,
    parse_pharaoh_line,
    read_pharaoh,
    symmetrize,
    to_set,
    transpose,
    write_pharaoh,
)
from .corpus import (
    SEPARATOR,
    UNK_ID,
    UNK_TOKEN,
    SentencePair,
    Vocabulary,
    load_bitext,
    parse_bitext_line,
    tokenize,
    write_bitext_line,
)
from .errors import ConfigError, DataFormatError, NumericError
from .evaluation import evaluate_corpus, format_report, parse_gold, write_report_tsv
from .phrases import build_phrase_table, write_phrase_table
from .projection import (
    format_labeled_line,
    parse_span_file,
    project_corpus,
    project_corpus_spans,
    read_labeled,
    write_span_file,
)
from .synth import SynthConfig, generate, write_gold_wpt
from .ttable import read_ttable

log = logging.getLogger(__name__)

HEURISTICS = ("intersect", "union", "grow-diag-final", "grow-diag-final-and")


class _Parser(argparse.ArgumentParser):
    """argparse maps usage problems to exit code 2 by default; this tool
    reserves 2 for data errors, so usage errors exit 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@contextmanager
def _open_in(path: str):
    if path == "-":
        yield sys.stdin
    else:
        with open(path, encoding="utf-8") as fh:
            yield fh


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _read_lines(path: str) -> list[str]:
    with _open_in(path) as fh:
        return fh.read().splitlines()


def _default_jobs() -> int:
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# train


def _resolve_use_null(args) -> bool:
    if args.model == "model2":
        if args.use_null is not None:
            raise ConfigError(
                "the diagonal model routes NULL mass through --p0; "
                "set --p0 0 to disable the empty word"
            )
        return args.p0 is None or args.p0 > 0.0
    return True if args.use_null is None else args.use_null


def cmd_train(args) -> int:
    with _open_in(args.bitext) as fh:
        bitext = load_bitext(
            fh, max_vocab=args.max_vocab, lowercase=args.lowercase, swap=args.reverse
        )
    if len(bitext) == 0:
        raise DataFormatError(f"no usable sentence pairs in {args.bitext}")
    use_null = _resolve_use_null(args)
    log_to = None if args.quiet else sys.stderr
    if args.model == "model1":
        config = model1.Model1Config(
            iterations=args.iters,
            use_null=use_null,
            epsilon=args.epsilon,
            floor=args.floor,
        )
        table, _ = model1.train(
            bitext, config, jobs=args.jobs, quiet=args.quiet, log_to=log_to
        )
        save = lambda out: model1.save_model(out, table)
    elif args.model == "model2":
        config = model2.Model2Config(
            iterations=args.iters,
            epsilon=args.epsilon,
            floor=args.floor,
            lam=args.lam,
            p0=args.p0 if args.p0 is not None else 0.08,
        )
        params, _ = model2.train(
            bitext, config, jobs=args.jobs, quiet=args.quiet, log_to=log_to
        )
        save = lambda out: model2.save_model(out, params)
    else:
        config = hmm.HmmConfig(
            iterations=args.iters,
            model1_iterations=args.init_iters,
            w=args.w,
            p0=args.p0 if args.p0 is not None else 0.2,
            use_null=use_null,
            epsilon=args.epsilon,
            floor=args.floor,
        )
        params, _ = hmm.train(
            bitext, config, jobs=args.jobs, quiet=args.quiet, log_to=log_to
        )
        save = lambda out: hmm.save_model(out, params)
    with _open_out(args.output) as out:
        save(out)
    if args.output != "-":
        with open(args.output + ".source-vocab", "w", encoding="utf-8") as fh:
            bitext.source_vocab.save(fh)
        with open(args.output + ".target-vocab", "w", encoding="utf-8") as fh:
            bitext.target_vocab.save(fh)
    return 0


# --------------------------------------------------------------------------
# align


def _load_any_model(path: str):
    lines = _read_lines(path)
    table, trailer = read_ttable(lines)
    if not trailer:
        return "model1", table
    kind = trailer[0].split("\t", 1)[0]
    if kind == model2.DIAG_TRAILER:
        return "model2", model2.load_model(lines)
    if kind == hmm.HMM_TRAILER:
        return "hmm", hmm.load_model(lines)
    raise DataFormatError(f"{path}: unrecognized model trailer {kind!r}")


def _load_vocab(explicit: str | None, default_path: str, language: str) -> Vocabulary:
    path = explicit or default_path
    try:
        with open(path, encoding="utf-8") as fh:
            return Vocabulary.load(fh, language=language)
    except FileNotFoundError:
        raise DataFormatError(
            f"vocabulary file {path} not found; train writes it next to the "
            f"model, or pass --source-vocab/--target-vocab"
        ) from None


def cmd_align(args) -> int:
    kind, model = _load_any_model(args.model_file)
    source_vocab = _load_vocab(
        args.source_vocab, args.model_file + ".source-vocab", "source"
    )
    target_vocab = _load_vocab(
        args.target_vocab, args.model_file + ".target-vocab", "target"
    )
    if kind == "model1":
        decode = lambda pair: model1.posterior_align(pair, model)
    elif kind == "model2":
        decode = lambda pair: model2.align(pair, model)
    else:
        decode = lambda pair: hmm.viterbi_decode(pair, model)

    unknown = 0
    empty = 0
    with _open_in(args.bitext) as src, _open_out(args.output) as out:
        for lineno, raw in enumerate(src, start=1):
            src_text, tgt_text = parse_bitext_line(raw, lineno)
            if args.reverse:
                src_text, tgt_text = tgt_text, src_text
            src_tokens = tokenize(src_text, args.lowercase)
            tgt_tokens = tokenize(tgt_text, args.lowercase)
            if not src_tokens or not tgt_tokens:
                empty += 1
                out.write("\n")
                continue
            source_ids = source_vocab.encode(src_tokens)
            target_ids = target_vocab.encode(tgt_tokens)
            unknown += source_ids.count(UNK_ID) + target_ids.count(UNK_ID)
            pair = SentencePair(source_ids=source_ids, target_ids=target_ids)
            out.write(format_pharaoh_line(to_set(decode(pair))) + "\n")
    if unknown:
        log.warning(
            "%d tokens were out of vocabulary and treated as %s", unknown, UNK_TOKEN
        )
    if empty:
        log.warning("%d pairs had an empty side and were left unaligned", empty)
    return 0


# --------------------------------------------------------------------------
# symmetrize / eval / extract-phrases / project / synth


def cmd_symmetrize(args) -> int:
    if args.forward == "-" and args.backward == "-":
        raise ConfigError("only one of --forward/--backward may be stdin")
    fwd_lines = _read_lines(args.forward)
    rev_lines = _read_lines(args.backward)
    if len(fwd_lines) != len(rev_lines):
        raise DataFormatError(
            f"{args.forward} has {len(fwd_lines)} lines but "
            f"{args.backward} has {len(rev_lines)}"
        )
    with _open_out(args.output) as out:
        for lineno, (fraw, rraw) in enumerate(zip(fwd_lines, rev_lines), start=1):
            fwd = parse_pharaoh_line(fraw, lineno)
            rev = transpose(parse_pharaoh_line(rraw, lineno))
            fwd, rev = harmonize_dims(fwd, rev)
            out.write(format_pharaoh_line(symmetrize(fwd, rev, args.heuristic)) + "\n")
    return 0


def cmd_eval(args) -> int:
    hypotheses = read_pharaoh(_read_lines(args.hypothesis))
    with _open_in(args.gold) as fh:
        gold = parse_gold(fh)
    report = evaluate_corpus(hypotheses, gold)
    with _open_out(args.output) as out:
        if args.tsv:
            write_report_tsv(report, out)
        else:
            out.write(format_report(report))
    if report.skipped_hypotheses:
        log.warning(
            "%d hypothesis sentences had no gold annotation and were skipped",
            len(report.skipped_hypotheses),
        )
    return 0


def _read_token_records(path: str) -> list[tuple[list[str], list[str]]]:
    records = []
    with _open_in(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            src_text, tgt_text = parse_bitext_line(raw, lineno)
            records.append((tokenize(src_text), tokenize(tgt_text)))
    return records


def _read_sized_alignments(
    path: str, sizes: list[tuple[int, int]], against: str
) -> list[AlignmentSet]:
    lines = _read_lines(path)
    if len(lines) != len(sizes):
        raise DataFormatError(
            f"record {min(len(lines), len(sizes)) + 1}: {path} has "
            f"{len(lines)} lines but {against} has {len(sizes)}"
        )
    return [
        parse_pharaoh_line(raw, lineno, m=m, n=n)
        for lineno, (raw, (m, n)) in enumerate(zip(lines, sizes), start=1)
    ]


def cmd_extract_phrases(args) -> int:
    records = _read_token_records(args.bitext)
    alignments = _read_sized_alignments(
        args.alignments, [(len(s), len(t)) for s, t in records], args.bitext
    )
    table = build_phrase_table(
        ((src, tgt, a) for (src, tgt), a in zip(records, alignments)),
        max_len=args.max_len,
    )
    with _open_out(args.output) as out:
        write_phrase_table(table, out)
    return 0


def cmd_project(args) -> int:
    records = _read_token_records(args.bitext)
    alignments = _read_sized_alignments(
        args.alignments, [(len(s), len(t)) for s, t in records], args.bitext
    )
    if args.layer == "tokens":
        with _open_in(args.annotations) as fh:
            annotated = read_labeled(fh)
        if len(annotated) != len(records):
            raise DataFormatError(
                f"record {min(len(annotated), len(records)) + 1}: {args.annotations} "
                f"has {len(annotated)} sentences but {args.bitext} has {len(records)}"
            )
        projected = project_corpus(annotated, alignments)
        with _open_out(args.output) as out:
            for (_, tgt_tokens), tags in zip(records, projected):
                out.write(format_labeled_line(tgt_tokens, tags) + "\n")
    else:
        with _open_in(args.annotations) as fh:
            by_sid = parse_span_file(fh)
        bad = [sid for sid in by_sid if sid > len(records)]
        if bad:
            raise DataFormatError(
                f"span sentence id {min(bad)} exceeds the {len(records)} "
                f"records in {args.bitext}"
            )
        span_lists = [by_sid.get(sid, []) for sid in range(1, len(records) + 1)]
        projected = project_corpus_spans(span_lists, alignments)
        with _open_out(args.output) as out:
            write_span_file(
                {sid: spans for sid, spans in enumerate(projected, start=1) if spans},
                out,
            )
    return 0


def cmd_synth(args) -> int:
    config = SynthConfig(
        pairs=args.pairs,
        vocab_size=args.vocab_size,
        min_len=args.min_len,
        max_len=args.max_len,
        swap_rate=args.swap_rate,
        insert_rate=args.insert_rate,
        seed=args.seed,
    )
    records = generate(config)
    with _open_out(args.output_bitext) as out:
        for record in records:
            write_bitext_line(out, record.source_tokens, record.target_tokens)
    with _open_out(args.output_gold) as out:
        if args.gold_format == "wpt":
            write_gold_wpt(records, out)
        else:
            write_pharaoh((record.gold for record in records), out)
    return 0


# --------------------------------------------------------------------------
# parser construction and config files


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--config",
        metavar="FILE",
        help="flat key=value file supplying defaults for this subcommand "
        "(explicit flags win)",
    )


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="alignkit", description=__doc__.split("\n\n")[0])
    subs = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    registry: dict[str, argparse.ArgumentParser] = {}

    def sub(name: str, func, **kwargs) -> argparse.ArgumentParser:
        p = subs.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        _add_common(p)
        registry[name] = p
        return p

    p = sub("train", cmd_train, help="estimate an alignment model from a bitext")
    p.add_argument("--model", choices=("model1", "model2", "hmm"), default="model1")
    p.add_argument("--bitext", required=True, help="`source ||| target` lines, or -")
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--iters", type=int, default=5, help="EM iterations (default 5)")
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "--use-null",
        dest="use_null",
        action="store_true",
        default=None,
        help="include the empty word (default for model1/hmm)",
    )
    group.add_argument(
        "--no-null", dest="use_null", action="store_false", help="drop the empty word"
    )
    p.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        default=4.0,
        help="diagonal sharpness for model2 (default 4.0)",
    )
    p.add_argument(
        "--p0",
        type=float,
        default=None,
        help="empty-word mass (default: 0.08 for model2, 0.2 for hmm)",
    )
    p.add_argument(
        "--w", type=int, default=5, help="hmm jump window half-width (default 5)"
    )
    p.add_argument(
        "--init-iters",
        type=int,
        default=5,
        help="lexical warm-up iterations before hmm training (default 5)",
    )
    p.add_argument("--epsilon", type=float, default=1.0, help=argparse.SUPPRESS)
    p.add_argument("--floor", type=float, default=1e-12, help=argparse.SUPPRESS)
    p.add_argument("--max-vocab", type=int, default=None, help="cap vocabulary size")
    p.add_argument("--lowercase", action="store_true", help="lowercase all tokens")
    p.add_argument(
        "--reverse",
        action="store_true",
        help="swap the bitext fields to train the reverse direction",
    )
    p.add_argument(
        "--jobs",
        type=int,
        default=_default_jobs(),
        help="worker processes (default: all cores); results do not depend on it",
    )
    p.add_argument(
        "--quiet", action="store_true", help="suppress per-iteration log-likelihoods"
    )

    p = sub("align", cmd_align, help="decode alignments for a bitext with a model")
    p.add_argument("--model-file", required=True, help="file written by train")
    p.add_argument("--bitext", required=True, help="`source ||| target` lines, or -")
    p.add_argument("--output", default="-", help="Pharaoh lines (default stdout)")
    p.add_argument("--source-vocab", default=None, help=argparse.SUPPRESS)
    p.add_argument("--target-vocab", default=None, help=argparse.SUPPRESS)
    p.add_argument("--lowercase", action="store_true", help="lowercase all tokens")
    p.add_argument(
        "--reverse",
        action="store_true",
        help="swap the bitext fields (for models trained with --reverse)",
    )

    p = sub(
        "symmetrize",
        cmd_symmetrize,
        help="combine forward and reverse alignments",
        description="The reverse file is expected in reverse orientation "
        "(as produced by align --reverse) and is transposed before combining.",
    )
    p.add_argument("--forward", required=True, help="forward Pharaoh lines, or -")
    p.add_argument(
        "--backward",
        "--reverse-file",
        dest="backward",
        required=True,
        help="reverse-direction Pharaoh lines, or -",
    )
    p.add_argument("--heuristic", choices=HEURISTICS, default="grow-diag-final")
    p.add_argument("--output", default="-", help="Pharaoh lines (default stdout)")

    p = sub("eval", cmd_eval, help="score hypothesis alignments against gold links")
    p.add_argument("--hypothesis", required=True, help="Pharaoh lines")
    p.add_argument("--gold", required=True, help="`sid src tgt [S|P]` lines, 1-based")
    p.add_argument("--tsv", action="store_true", help="machine-readable report")
    p.add_argument("--output", default="-", help="report destination (default stdout)")

    p = sub(
        "extract-phrases",
        cmd_extract_phrases,
        help="extract consistent phrase pairs into a phrase table",
    )
    p.add_argument("--bitext", required=True)
    p.add_argument("--alignments", required=True, help="Pharaoh lines, one per pair")
    p.add_argument("--output", default="-")
    p.add_argument(
        "--max-len", type=int, default=7, help="longest phrase side (default 7)"
    )

    p = sub(
        "project",
        cmd_project,
        help="carry source-side annotations over alignments to the target side",
    )
    p.add_argument("--bitext", required=True)
    p.add_argument("--alignments", required=True, help="Pharaoh lines, one per pair")
    p.add_argument(
        "--annotations",
        required=True,
        help="token/TAG lines (tokens layer) or span TSV (spans layer)",
    )
    p.add_argument("--layer", choices=("tokens", "spans"), default="tokens")
    p.add_argument("--output", default="-")

    p = sub("synth", cmd_synth, help="generate a synthetic bitext with gold links")
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--vocab-size", type=int, default=500)
    p.add_argument("--min-len", type=int, default=3)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--swap-rate", type=float, default=0.0)
    p.add_argument("--insert-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-bitext", required=True)
    p.add_argument("--output-gold", required=True)
    p.add_argument("--gold-format", choices=("wpt", "pharaoh"), default="wpt")

    return parser, registry


def _coerce(action: argparse.Action, value: str, where: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return action.const
        if lowered in ("0", "false", "no", "off"):
            return not action.const
        raise ConfigError(f"{where}: expected a boolean, got {value!r}")
    try:
        coerced = action.type(value) if action.type else value
    except ValueError:
        raise ConfigError(f"{where}: bad value {value!r} for {action.dest}") from None
    if action.choices and coerced not in action.choices:
        raise ConfigError(
            f"{where}: {coerced!r} is not one of {', '.join(map(str, action.choices))}"
        )
    return coerced


def _load_config_file(path: str, sub: argparse.ArgumentParser) -> dict:
    actions: dict[str, argparse.Action] = {}
    for action in sub._actions:
        if not action.option_strings or action.dest in ("help", "config"):
            continue
        actions.setdefault(action.dest, action)
        for opt in action.option_strings:
            actions.setdefault(opt.lstrip("-").replace("-", "_"), action)
    overrides = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key = key.strip().replace("-", "_")
        if key not in actions:
            raise ConfigError(f"{path}:{lineno}: unknown option {key!r}")
        action = actions[key]
        overrides[action.dest] = _coerce(action, value.strip(), f"{path}:{lineno}")
    return overrides


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr
    )
    parser, registry = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            registry[args.command].set_defaults(
                **_load_config_file(args.config, registry[args.command])
            )
            args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    except ConfigError as exc:
        print(f"alignkit: error: {exc}", file=sys.stderr)
        return 1
    except DataFormatError as exc:
        print(f"alignkit: error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"alignkit: error: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        return 0
    except OSError as exc:
        print(f"alignkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
