#!/usr/bin/env python3
"""Regenerate configs/ from the registry's pre-registered defaults."""

from pathlib import Path

from modsel.experiments import default_config, list_experiments


def toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(toml_value(x) for x in v) + "]"
    return repr(v)


def main():
    outdir = Path(__file__).resolve().parent.parent / "configs"
    outdir.mkdir(exist_ok=True)
    for name, _ in list_experiments():
        cfg = default_config(name)
        lines = [
            f'experiment = "{cfg.experiment}"',
            f"seed = {cfg.seed}",
            f"reps = {cfg.reps}",
            f"n_grid = {toml_value(list(cfg.n_grid))}",
            f"se_mult = {cfg.se_mult}",
        ]
        if cfg.params:
            lines.append("")
            lines.append("[params]")
            for key, value in cfg.params.items():
                lines.append(f"{key} = {toml_value(value)}")
        (outdir / f"{name}.toml").write_text("\n".join(lines) + "\n")
        print(outdir / f"{name}.toml")


if __name__ == "__main__":
    main()
