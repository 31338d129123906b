"""Command-line interface: extract -> train -> recommend/eval/inspect, plus
``serve`` to run the HTTP service. ``recommend`` and ``inspect`` can act as
thin clients of a running service via ``--server``.

Exit codes: 0 on success, 2 on input errors, 3 on internal errors.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import re
import sys
from pathlib import Path

import click

from .config import PipelineConfig, load_config
from .errors import ApiMinerError
from .cfg import build_cfg, cfg_to_dot
from .pipeline import (extract_files, evaluate_corpus, render_model,
                       rows_to_csv, rows_to_table, train_corpus, write_text)
from .recommend import next_api_call, next_api_call_ngram, top_k
from .sequences import Corpus, ObjectKey
from .store import FORMAT_HMM, FORMAT_NGRAM, ModelStore
from .usage import build_usage_graphs, usage_graph_to_dot


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ApiMinerError, OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except Exception as exc:  # pragma: no cover - defensive
            click.echo(f"internal error: {exc}", err=True)
            sys.exit(3)
    return wrapper


@click.group()
@click.option("--seed", type=int, default=None, help="Base random seed.")
@click.option("--config", "config_file", type=click.Path(), default=None,
              help="key=value configuration file.")
@click.option("--json", "json_output", is_flag=True,
              help="Machine-readable output where supported.")
@click.pass_context
def main(ctx, seed, config_file, json_output):
    """Mine API usage models from method listings and recommend calls."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["config_file"] = config_file
    ctx.obj["json"] = json_output


def _build_config(ctx) -> PipelineConfig:
    config = PipelineConfig()
    if ctx.obj.get("config_file"):
        config = load_config(ctx.obj["config_file"], config)
    if ctx.obj.get("seed") is not None:
        config = dataclasses.replace(config, seed=ctx.obj["seed"])
    config.validate()
    return config


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]+", "_", name)


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@click.option("--out", "-o", required=True, type=click.Path(),
              help="Output corpus (JSON lines).")
@click.option("--dump-cfg", type=click.Path(), default=None,
              help="Directory for per-method control-flow DOT dumps.")
@click.option("--dump-arus", type=click.Path(), default=None,
              help="Directory for per-path usage-graph DOT dumps.")
@click.option("--max-set-size", type=int, default=None,
              help="Cap on multi-object key size (default: unlimited).")
@click.pass_context
@handle_errors
def extract(ctx, inputs, out, dump_cfg, dump_arus, max_set_size):
    """Extract API call sequences from method listings into a corpus."""
    config = _build_config(ctx)
    if max_set_size is not None:
        config = dataclasses.replace(config, max_set_size=max_set_size)
    corpus, stats, analyzed = extract_files(inputs, config)
    corpus.write_jsonl(out)
    if dump_cfg:
        Path(dump_cfg).mkdir(parents=True, exist_ok=True)
        for method, _ in analyzed:
            dot = cfg_to_dot(build_cfg(method), method.qualified_name)
            name = _safe_name(method.qualified_name)
            Path(dump_cfg, f"{name}.cfg.dot").write_text(dot)
    if dump_arus:
        Path(dump_arus).mkdir(parents=True, exist_ok=True)
        for method, _ in analyzed:
            cfg = build_cfg(method)
            graphs = build_usage_graphs(method, cfg, config.max_branch_nodes)
            name = _safe_name(method.qualified_name)
            for i, graph in enumerate(graphs):
                title = f"{method.qualified_name} path {i}"
                Path(dump_arus, f"{name}.path{i}.dot").write_text(
                    usage_graph_to_dot(graph, title))
    if ctx.obj["json"]:
        click.echo(json.dumps(dataclasses.asdict(stats)))
    else:
        click.echo(f"wrote {out}")
        for line in stats.summary_lines():
            click.echo(line)


@main.command()
@click.option("--corpus", "corpus_file", required=True, type=click.Path())
@click.option("--model-store", "store_dir", required=True, type=click.Path())
@click.pass_context
@handle_errors
def train(ctx, corpus_file, store_dir):
    """Train one usage model and one n-gram baseline per qualifying key."""
    config = _build_config(ctx)
    corpus = Corpus.read_jsonl(corpus_file)
    store = ModelStore(store_dir)
    stats = train_corpus(corpus, store, config)
    if ctx.obj["json"]:
        click.echo(json.dumps({"trained": stats.trained,
                               "skipped": stats.skipped}))
    else:
        for line in stats.summary_lines():
            click.echo(line)
        click.echo(f"{len(stats.trained)} key(s) trained, "
                   f"{len(stats.skipped)} skipped")


def _parse_seq(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


@main.command()
@click.option("--model-store", "store_dir", type=click.Path(), default=None)
@click.option("--types", required=True,
              help="Comma-separated object type(s) identifying the model.")
@click.option("--seq", default="", help="Comma-separated observed calls.")
@click.option("--hole", type=int, default=None,
              help="1-based hole position; default: predict the next call.")
@click.option("--k", type=int, default=10, help="Number of suggestions.")
@click.option("--model", "kind", type=click.Choice([FORMAT_HMM, FORMAT_NGRAM]),
              default=FORMAT_HMM)
@click.option("--server", default=None,
              help="Base URL of a running service; query it instead of "
                   "loading the store locally.")
@click.pass_context
@handle_errors
def recommend(ctx, store_dir, types, seq, hole, k, kind, server):
    """Rank API calls for the next position or an interior hole."""
    partial = _parse_seq(seq)
    type_list = _parse_seq(types)
    if server:
        import httpx

        response = httpx.post(server.rstrip("/") + "/recommend",
                              json={"types": type_list, "seq": partial,
                                    "hole": hole, "k": k, "model": kind})
        if response.status_code != 200:
            detail = response.json().get("detail", response.text)
            raise ApiMinerError(f"server: {detail}")
        payload = response.json()
        ranked = [(r["method"], r["score"]) for r in payload["ranked"]]
    else:
        if store_dir is None:
            raise click.UsageError("provide --model-store or --server")
        if k < 1:
            raise click.UsageError("--k must be >= 1")
        store = ModelStore(store_dir)
        key = ObjectKey.of(type_list)
        if kind == FORMAT_HMM:
            rec = next_api_call(store.load_hmm(key), partial, hole)
        else:
            rec = next_api_call_ngram(store.load_ngram(key), partial, hole)
        methods = top_k(rec, k)
        scores = dict(rec.ranked)
        ranked = [(m, scores[m]) for m in methods]
    if ctx.obj["json"]:
        click.echo(json.dumps({"types": type_list, "hole": hole,
                               "ranked": [{"method": m, "score": s}
                                          for m, s in ranked[:k]]}))
    else:
        for rank, (method, score) in enumerate(ranked[:k], start=1):
            click.echo(f"{rank:>3}  {score:<24.17g} {method}")


@main.command(name="eval")
@click.option("--corpus", "corpus_file", required=True, type=click.Path())
@click.option("--out", "-o", "csv_out", type=click.Path(), default=None,
              help="Write the comparison as CSV.")
@click.option("--macro", is_flag=True,
              help="Aggregate by averaging per-key accuracies instead of "
                   "pooling hits.")
@click.option("--sensitivity", "sensitivity_types", default=None,
              help="Instead of the comparison, print validation "
                   "log-likelihood per hidden-state count for this key.")
@click.pass_context
@handle_errors
def eval_cmd(ctx, corpus_file, csv_out, macro, sensitivity_types):
    """Compare both model families on both tasks over a shared split."""
    config = _build_config(ctx)
    corpus = Corpus.read_jsonl(corpus_file)
    if sensitivity_types:
        from .evaluation import sensitivity_curve, split_corpus
        from .seeding import derive_seed

        key = ObjectKey.of(_parse_seq(sensitivity_types))
        split = split_corpus(corpus, key, config.train_frac, config.val_frac,
                             derive_seed(config.seed, "split", key.display),
                             config.min_sequences)
        curve = sensitivity_curve(split.train, split.validation,
                                  config.k_range,
                                  derive_seed(config.seed, "select",
                                              key.display),
                                  tol=config.em_tol,
                                  max_iter=config.em_max_iter)
        if ctx.obj["json"]:
            click.echo(json.dumps([{"k": k, "loglik": ll}
                                   for k, ll in curve]))
        else:
            for k, ll in curve:
                rendered = "failed" if ll is None else f"{ll:.6f}"
                click.echo(f"K={k:<3d} validation loglik: {rendered}")
        return
    rows, _ = evaluate_corpus(corpus, config, macro=macro)
    if csv_out:
        write_text(csv_out, rows_to_csv(rows))
    if ctx.obj["json"]:
        click.echo(json.dumps(rows))
    else:
        click.echo(rows_to_table(rows))
        if csv_out:
            click.echo(f"wrote {csv_out}")


@main.command()
@click.option("--model-store", "store_dir", type=click.Path(), default=None)
@click.option("--types", required=True)
@click.option("--model", "kind", type=click.Choice([FORMAT_HMM, FORMAT_NGRAM]),
              default=FORMAT_HMM)
@click.option("--server", default=None,
              help="Base URL of a running service.")
@click.pass_context
@handle_errors
def inspect(ctx, store_dir, types, kind, server):
    """Render a stored model: DOT state graph for usage models, a text
    summary for the n-gram baseline. Probabilities below 0.01 are hidden."""
    type_list = _parse_seq(types)
    if server:
        import httpx

        response = httpx.get(server.rstrip("/") + "/inspect",
                             params={"types": ",".join(type_list),
                                     "model": kind})
        if response.status_code != 200:
            detail = response.json().get("detail", response.text)
            raise ApiMinerError(f"server: {detail}")
        click.echo(response.text, nl=False)
        return
    if store_dir is None:
        raise click.UsageError("provide --model-store or --server")
    key = ObjectKey.of(type_list)
    click.echo(render_model(ModelStore(store_dir), key, kind), nl=False)


@main.command()
@click.option("--model-store", "store_dir", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@handle_errors
def serve(store_dir, host, port):
    """Run the HTTP service over a model store."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store_dir), host=host, port=port)


if __name__ == "__main__":
    main()
