"""Command-line entry point: one subcommand per pipeline stage.

Every config setting can be overridden with --set section.key=value.
Exit codes: 0 success, 1 usage/config error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import logging
import sys

import click

from .config import PipelineConfig, load_config
from .errors import BackendError, ConfigError, DataError
from .pipeline import run_stage


@click.group()
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(), help="Pipeline config file (TOML).")
@click.option("--set", "-s", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Override any config setting, e.g. -s sample.seed=42.")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
@click.pass_context
def cli(ctx: click.Context, config_path: str, overrides: tuple[str, ...],
        verbose: bool) -> None:
    """Long-tail QA dataset construction and evaluation pipeline."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = load_config(config_path, list(overrides))


def _stage_command(name: str, help_text: str):
    @cli.command(name=name, help=help_text)
    @click.pass_obj
    def command(cfg: PipelineConfig) -> None:
        manifest = run_stage(cfg, name)
        _echo_manifest(manifest)

    return command


def _echo_manifest(manifest) -> None:
    click.echo(f"stage {manifest.stage}: ok")
    for key, value in sorted(manifest.counts.items()):
        click.echo(f"  {key}: {value}")


_stage_command("build-index", "Validate and index the triplet and catalog files.")
_stage_command("stats", "Emit the node degree histogram.")
_stage_command("sample", "Sample tail entities per bucket and extract candidate triplets.")
_stage_command("match-difficulty", "Equalize per-property triplet counts across buckets.")
_stage_command("generate", "Generate questions from matched candidate triplets.")
_stage_command("retrieve", "Retrieve top-K passages per question and compute recall.")
_stage_command("answer", "Answer the generated questions with the configured backend.")
_stage_command("evaluate", "Score predictions with alias-aware exact match.")
_stage_command("report", "Aggregate manifests and reports into one document.")


@cli.command(name="rerank", help="Re-rank retrieved passages with KG path similarity.")
@click.option("--depth", type=int, default=None, help="Max path hops.")
@click.option("--max-paths", type=int, default=None, help="Path budget per question.")
@click.option("--combine", type=click.Choice(["similarity_only", "convex"]),
              default=None, help="Score combination rule.")
@click.pass_obj
def rerank_cmd(cfg: PipelineConfig, depth: int | None, max_paths: int | None,
               combine: str | None) -> None:
    if depth is not None:
        cfg.raw["rerank"]["max_depth"] = depth
    if max_paths is not None:
        cfg.raw["rerank"]["max_paths"] = max_paths
    if combine is not None:
        cfg.raw["rerank"]["combine"] = combine
    _echo_manifest(run_stage(cfg, "rerank"))


@cli.command(name="filter", help="Screen properties and apply ledger verdicts.")
@click.option("--auto-apply/--no-auto-apply", default=None,
              help="Record heuristic suggestions into the ledger.")
@click.pass_obj
def filter_cmd(cfg: PipelineConfig, auto_apply: bool | None) -> None:
    if auto_apply is not None:
        cfg.raw["filter"]["auto_apply"] = auto_apply
    _echo_manifest(run_stage(cfg, "filter"))


@cli.command(name="filter-properties", hidden=True,
             help="Alias for 'filter' (batch property screening).")
@click.option("--auto-apply/--no-auto-apply", default=None)
@click.pass_context
def filter_properties_cmd(ctx: click.Context, auto_apply: bool | None) -> None:
    ctx.invoke(filter_cmd, auto_apply=auto_apply)


@cli.command(name="run", help="Run the full pipeline in order with mockable backends.")
@click.pass_obj
def run_cmd(cfg: PipelineConfig) -> None:
    stages = ["build-index", "stats", "sample", "filter", "match-difficulty", "generate"]
    if cfg.has_path("corpus"):
        stages += ["retrieve", "rerank"]
    stages += ["answer", "evaluate", "report"]
    if cfg.section("answering")["mode"] == "with_context" and not cfg.has_path("corpus"):
        raise ConfigError("answering.mode=with_context requires paths.corpus")
    for stage in stages:
        _echo_manifest(run_stage(cfg, stage))


@cli.command(name="serve", help="Serve the property triage API and UI.")
@click.option("--host", default=None, help="Bind address (default from config).")
@click.option("--port", default=None, type=int, help="Port (default from config).")
@click.pass_obj
def serve_cmd(cfg: PipelineConfig, host: str | None, port: int | None) -> None:
    import uvicorn

    from .service import build_state_from_pipeline, create_app

    section = cfg.section("service")
    state = build_state_from_pipeline(cfg)
    static_dir = section.get("static_dir") or None
    app = create_app(state, static_dir=static_dir)
    uvicorn.run(app, host=host or section["host"], port=port or int(section["port"]),
                log_level="info")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as e:
        return int(e.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except (click.UsageError, ConfigError) as e:
        click.echo(f"error: {e}", err=True)
        return 1
    except DataError as e:
        click.echo(f"data error: {e}", err=True)
        return 2
    except BackendError as e:
        click.echo(f"backend error: {e}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
