"""Command-line entry point: ``visrank <subcommand> [flags]``.

Exit status is 0 on success, 1 on invalid input or a missing file, and 2 on
usage errors. Every file written gets a ``<name>.meta.json`` sidecar that
records the subcommand and all resolved settings, seeds included.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .errors import VisrankError
from .evaluate import EvalReport, evaluate, format_report, gold_map, report_lines
from .formats import (
    load_contexts,
    load_cooccurrence,
    load_dictionary,
    load_embeddings,
    load_hypotheses,
    load_pairs,
    load_ranked,
    load_unigram_counts,
    save_cooccurrence,
    save_embeddings,
    save_pairs,
    save_ranked,
    save_unigram_counts,
)
from .lm import DEFAULT_OOV_FLOOR, build_ulm, merge_counts
from .relatedness import DEFAULT_TDP_EPSILON, build_cooccurrence
from .rerank import SCHEMES, Models, RerankConfig, rerank_batch, scheme_factors
from .twe import TrainConfig, TrainCorpus, train_twe

log = logging.getLogger("visrank")

DEFAULT_KS = (5, 9)


def _read(path: str, loader, **kwargs):
    with open(path, "rb") as fh:
        return loader(fh, **kwargs)


def _write_meta(target: Path, command: str, params: dict) -> None:
    meta = {"command": command, "version": __version__,
            "params": {k: v for k, v in sorted(params.items())}}
    meta_path = target.parent / (target.name + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                         encoding="utf-8")


def _load_models(ulm, swe, twe, tdp, oov_floor) -> Models:
    return Models(
        ulm=build_ulm(_read(ulm, load_unigram_counts), oov_floor) if ulm else None,
        swe=_read(swe, load_embeddings) if swe else None,
        twe=_read(twe, load_embeddings) if twe else None,
        tdp=_read(tdp, load_cooccurrence) if tdp else None,
    )


def _training_pairs(hyps: str, ctx: str) -> list[tuple[str, str]]:
    records = _read(hyps, load_hypotheses)
    contexts = _read(ctx, load_contexts)
    pairs = []
    for r in records:
        c = contexts.get(r.image_id)
        if r.gold and c is not None and c.top is not None:
            pairs.append((r.gold, c.top.label))
    return pairs


scheme_choice = click.Choice(SCHEMES, case_sensitive=False)


def _canonical_scheme(name: str) -> str:
    return {s.lower(): s for s in SCHEMES}[name.lower()]


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="visrank")
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
def cli(verbose: int):
    """Re-rank text-spotting hypotheses with visual context."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


@cli.command("build-ulm")
@click.option("--counts", "counts_paths", multiple=True, required=True,
              help="word<TAB>count corpus file; repeat to merge corpora.")
@click.option("--oov-floor", type=float, default=DEFAULT_OOV_FLOOR, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def build_ulm_cmd(counts_paths, oov_floor, out):
    """Merge unigram count corpora into one ULM artifact."""
    counts = merge_counts(_read(p, load_unigram_counts) for p in counts_paths)
    counts = {w: n for w, n in counts.items() if n > 0}
    model = build_ulm(counts, oov_floor)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        save_unigram_counts(dict(model.counts), fh)
    _write_meta(Path(out), "build-ulm", {"counts": list(counts_paths), "oov_floor": oov_floor,
                                          "vocabulary": len(model), "total_tokens": model.total_tokens})
    log.info("wrote %d words (%d tokens) to %s", len(model), model.total_tokens, out)


@cli.command("build-tdp")
@click.option("--hyps", required=True, help="Training hypothesis file carrying gold words.")
@click.option("--ctx", required=True, help="Training context file.")
@click.option("--tdp-epsilon", type=float, default=DEFAULT_TDP_EPSILON, show_default=True)
@click.option("--pairs-out", type=click.Path(dir_okay=False),
              help="Also write the word<TAB>object pairs used for train-twe.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def build_tdp_cmd(hyps, ctx, tdp_epsilon, pairs_out, out):
    """Count gold-word / top-object co-occurrences."""
    records = _read(hyps, load_hypotheses)
    contexts = _read(ctx, load_contexts)
    table = build_cooccurrence(((r.gold, contexts.get(r.image_id)) for r in records), tdp_epsilon)
    if table.skipped:
        log.warning("%d training records skipped (no gold word or no context)", table.skipped)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        save_cooccurrence(table, fh)
    params = {"hyps": hyps, "ctx": ctx, "tdp_epsilon": tdp_epsilon, "skipped": table.skipped}
    _write_meta(Path(out), "build-tdp", params)
    if pairs_out:
        with open(pairs_out, "w", encoding="utf-8", newline="\n") as fh:
            save_pairs(_training_pairs(hyps, ctx), fh)
        _write_meta(Path(pairs_out), "build-tdp", params)


@cli.command("train-twe")
@click.option("--pairs", help="word<TAB>object training pairs.")
@click.option("--hyps", help="Alternative to --pairs: training hypotheses with gold words ...")
@click.option("--ctx", help="... and their contexts (top object used).")
@click.option("--init", "init_path", help="General-purpose embeddings to warm-start from.")
@click.option("--dim", type=int, default=300, show_default=True)
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--lr", type=float, default=0.025, show_default=True)
@click.option("--min-lr", type=float, default=1e-4, show_default=True)
@click.option("--negatives", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def train_twe_cmd(pairs, hyps, ctx, init_path, dim, epochs, lr, min_lr, negatives, seed, out):
    """Train task-specific embeddings with window-1 skip-gram."""
    if pairs and (hyps or ctx):
        raise click.UsageError("give either --pairs or --hyps/--ctx, not both")
    if pairs:
        corpus = _read(pairs, load_pairs)
    elif hyps and ctx:
        corpus = _training_pairs(hyps, ctx)
    else:
        raise click.UsageError("training data required: --pairs, or --hyps with --ctx")
    init = _read(init_path, load_embeddings) if init_path else None
    config = TrainConfig(dim, epochs, lr, min_lr, negatives, seed, init)
    space = train_twe(TrainCorpus(tuple(corpus)), config)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        save_embeddings(space, fh)
    _write_meta(Path(out), "train-twe", {
        "pairs": pairs, "hyps": hyps, "ctx": ctx, "init": init_path, "dim": dim,
        "epochs": epochs, "lr": lr, "min_lr": min_lr, "negatives": negatives, "seed": seed,
        "window": 1, "noise_exponent": 0.75, "n_pairs": len(corpus),
    })


def _model_options(f):
    for opt in reversed([
        click.option("--ulm", help="Unigram counts (word<TAB>count)."),
        click.option("--swe", help="General-purpose embeddings."),
        click.option("--twe", help="Task-trained embeddings."),
        click.option("--tdp", help="Co-occurrence table."),
        click.option("--threshold", type=float, default=0.2, show_default=True,
                     help="Minimum top-object confidence for the visual stage."),
        click.option("--tdp-epsilon", type=float, default=None,
                     help="Floor for unseen pairs [default: the table's own]."),
        click.option("--no-ulm-stage", is_flag=True, help="Skip the preliminary ULM rescoring."),
        click.option("--oov-floor", type=float, default=DEFAULT_OOV_FLOOR, show_default=True),
    ]):
        f = opt(f)
    return f


@cli.command("rerank")
@click.option("--hyps", required=True)
@click.option("--ctx", required=True)
@_model_options
@click.option("--scheme", type=scheme_choice, default="SWE", show_default=True)
@click.option("--k", type=int, default=None, help="Keep only the k best baseline candidates.")
@click.option("--out", default="-", show_default=True, help="Output file ('-' for stdout).")
def rerank_cmd(hyps, ctx, ulm, swe, twe, tdp, threshold, tdp_epsilon, no_ulm_stage, oov_floor,
               scheme, k, out):
    """Re-rank k-best lists; one output line per input line."""
    scheme = _canonical_scheme(scheme)
    config = RerankConfig(scheme, threshold, not no_ulm_stage, tdp_epsilon)
    models = _load_models(ulm, swe, twe, tdp, oov_floor)
    models.check(config)
    records = _read(hyps, load_hypotheses, k=k)
    contexts = _read(ctx, load_contexts)
    outputs = rerank_batch(records, contexts, models, config)
    if out == "-":
        save_ranked(outputs, sys.stdout)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        save_ranked(outputs, fh)
    _write_meta(Path(out), "rerank", {
        "hyps": hyps, "ctx": ctx, "ulm": ulm, "swe": swe, "twe": twe, "tdp": tdp,
        "scheme": scheme, "k": k, "threshold": threshold, "tdp_epsilon": tdp_epsilon,
        "apply_ulm_stage": not no_ulm_stage, "oov_floor": oov_floor,
    })


def _write_reports(reports: list[EvalReport], out: str | None, figure: bool) -> None:
    table = format_report(reports)
    if out is None:
        click.echo(table, nl=False)
        return
    prefix = Path(out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.txt").write_text(table, encoding="utf-8")
    Path(f"{prefix}.tsv").write_text(report_lines(reports), encoding="utf-8")
    if figure:
        from .plotting import plot_accuracy

        plot_accuracy(reports, f"{prefix}.png")
    click.echo(table, nl=False)


def _scheme_label(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    meta = Path(path + ".meta.json")
    if meta.exists():
        scheme = json.loads(meta.read_text(encoding="utf-8")).get("params", {}).get("scheme")
        if scheme:
            return scheme
    return Path(path).stem


@cli.command("evaluate")
@click.option("--hyps", required=True, help="Hypothesis file carrying the gold words.")
@click.option("--ranked", multiple=True, required=True, help="Re-ranker output; repeatable.")
@click.option("--scheme", "labels", multiple=True,
              help="Row label for each --ranked file, in order [default: from its sidecar].")
@click.option("--dict", "dict_path", help="Reference lexicon, one word per line.")
@click.option("--k", type=int, required=True)
@click.option("--case-sensitive", is_flag=True)
@click.option("--out", help="Report prefix: writes <out>.txt, <out>.tsv and <out>.png.")
@click.option("--no-figure", is_flag=True)
def evaluate_cmd(hyps, ranked, labels, dict_path, k, case_sensitive, out, no_figure):
    """Score re-ranked outputs (full / dict / list accuracy)."""
    if labels and len(labels) != len(ranked):
        raise click.UsageError("--scheme must be given once per --ranked file, or not at all")
    gold = gold_map(_read(hyps, load_hypotheses))
    dictionary = _read(dict_path, load_dictionary) if dict_path else None
    report = None
    for i, path in enumerate(ranked):
        label = _scheme_label(path, labels[i] if labels else None)
        rep = evaluate(_read(path, load_ranked), gold, dictionary, k, scheme=label,
                       case_sensitive=case_sensitive)
        report = rep if report is None else report.merged(rep)
    _write_reports([report], out, not no_figure)
    if out:
        _write_meta(Path(f"{out}.txt"), "evaluate", {
            "hyps": hyps, "ranked": list(ranked), "dict": dict_path, "k": k,
            "case_sensitive": case_sensitive,
        })


@cli.command("pipeline")
@click.option("--hyps", required=True)
@click.option("--ctx", required=True)
@_model_options
@click.option("--dict", "dict_path")
@click.option("--scheme", "schemes", type=scheme_choice, multiple=True,
              help="Repeatable [default: all six].")
@click.option("--k", "ks", type=int, multiple=True, help="Repeatable [default: 5 and 9].")
@click.option("--case-sensitive", is_flag=True)
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
@click.option("--no-figure", is_flag=True)
def pipeline_cmd(hyps, ctx, ulm, swe, twe, tdp, threshold, tdp_epsilon, no_ulm_stage, oov_floor,
                 dict_path, schemes, ks, case_sensitive, out, no_figure):
    """Re-rank under every scheme and k, then evaluate into one table."""
    schemes = [_canonical_scheme(s) for s in schemes] or list(SCHEMES)
    ks = list(ks) or list(DEFAULT_KS)
    configs = [RerankConfig(s, threshold, not no_ulm_stage, tdp_epsilon) for s in schemes]
    models = _load_models(ulm, swe, twe, tdp, oov_floor)
    for c in configs:
        models.check(c)
    contexts = _read(ctx, load_contexts)
    dictionary = _read(dict_path, load_dictionary) if dict_path else None
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    reports = []
    for k in ks:
        records = _read(hyps, load_hypotheses, k=k)
        gold = gold_map(records)
        report = None
        for config in configs:
            outputs = list(rerank_batch(records, contexts, models, config))
            ranked_path = out_dir / f"ranked.{config.scheme}.k{k}.jsonl"
            with open(ranked_path, "w", encoding="utf-8", newline="\n") as fh:
                save_ranked(outputs, fh)
            _write_meta(ranked_path, "pipeline", {
                "hyps": hyps, "ctx": ctx, "ulm": ulm, "swe": swe, "twe": twe, "tdp": tdp,
                "scheme": config.scheme, "k": k, "threshold": threshold,
                "tdp_epsilon": tdp_epsilon, "apply_ulm_stage": not no_ulm_stage,
                "oov_floor": oov_floor,
            })
            rep = evaluate(outputs, gold, dictionary, k, scheme=config.scheme,
                           case_sensitive=case_sensitive)
            report = rep if report is None else report.merged(rep)
        reports.append(report)
    _write_reports(reports, str(out_dir / "report"), not no_figure)
    _write_meta(out_dir / "report.txt", "pipeline", {
        "hyps": hyps, "ctx": ctx, "ulm": ulm, "swe": swe, "twe": twe, "tdp": tdp,
        "dict": dict_path, "schemes": schemes, "ks": ks, "threshold": threshold,
        "tdp_epsilon": tdp_epsilon, "apply_ulm_stage": not no_ulm_stage,
        "oov_floor": oov_floor, "case_sensitive": case_sensitive,
        "visual_factors": {s: list(scheme_factors(s)) for s in schemes},
    })


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, prog_name="visrank", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except (VisrankError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
