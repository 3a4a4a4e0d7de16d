import runpy
from pathlib import Path

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs_and_backends_agree(capsys):
    main = runpy.run_path(str(BENCH))["main"]
    main(["--size", "24", "--repeat", "1"])
    out = capsys.readouterr().out
    for name in ("label_components", "sweep_best_iou", "felzenszwalb_merge"):
        assert name in out
