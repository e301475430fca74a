"""言語ガイド付き追跡 - 実行プログラム.

合成コーパスの生成、SALNet / GPGNet の学習、追跡、評価、
勾配検査、アブレーションをサブコマンドとして実行します。
"""

import argparse
import sys
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from langgraph.checkpoint.memory import InMemorySaver
from loguru import logger

# Load environment variables from .env file
load_dotenv()

from app.core.config import settings  # noqa: E402
from app.core.exception import BaseError, ConfigError  # noqa: E402
from app.core.logging import set_logger  # noqa: E402
from app.domain.enums import AttentionCue, TaskStatus  # noqa: E402
from app.infrastructure.blob_manager import LocalBlobManager  # noqa: E402
from app.tracking_workflow import pipeline  # noqa: E402
from app.tracking_workflow.agent import AblationAgent, required_recursion_limit  # noqa: E402
from app.tracking_workflow.config import RunConfig, load_run_config, parse_run_config_text  # noqa: E402
from app.tracking_workflow.gradient_suite import run_gradient_suite  # noqa: E402
from app.tracking_workflow.models.state import AblationAgentInputState, SweepKind  # noqa: E402
from app.tracking_workflow.nodes import sweep_settings  # noqa: E402
from app.tracking_workflow.synthcorpus import TEST_SPLIT  # noqa: E402

DEFAULT_CONFIG = str(Path(settings.CONFIG_DIR) / "default.cfg")
SEEDED_COMMANDS = ("train-salnet", "train-gpgnet", "track")


def parse_arguments(argv: list[str] | None = None) -> argparse.Namespace:
    """コマンドライン引数を解析."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help=f"設定ファイル（省略時: {DEFAULT_CONFIG}）")
    common.add_argument("--seed", type=int, default=None, help="乱数シード（track / train-* では必須）")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="設定値の上書き（複数指定可、例: --set triplet_lambda=0.3）",
    )
    common.add_argument("--verbose", "-v", action="store_true", help="詳細ログを表示")

    parser = argparse.ArgumentParser(
        description="言語ガイド付き追跡 - 学習・追跡・評価",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用例:
  python run_tracking.py synth --config storage/configs/desk.cfg
  python run_tracking.py train-salnet --config storage/configs/desk.cfg --seed 0
  python run_tracking.py train-gpgnet --config storage/configs/desk.cfg --seed 0
  python run_tracking.py track --seed 7 --salnet <salnet_run> --gpgnet <gpgnet_run>
  python run_tracking.py eval --tracks <track_dir>
  python run_tracking.py ablate --sweep lambda --seeds 0,1,2
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", parents=[common], help="合成コーパスを生成")
    sub.add_parser("train-salnet", parents=[common], help="SALNetを学習")
    sub.add_parser("train-gpgnet", parents=[common], help="GPGNetを学習")

    track = sub.add_parser("track", parents=[common], help="テストシーケンスを追跡")
    track.add_argument("--salnet", type=str, default=None, help="SALNetの実行ディレクトリ")
    track.add_argument("--gpgnet", type=str, default=None, help="GPGNetの実行ディレクトリ")
    track.add_argument("--sequence", type=str, default=None, help="1シーケンスだけ追跡")
    track.add_argument("--split", type=str, default=TEST_SPLIT, help="追跡する分割")
    track.add_argument("--out", type=str, default=None, help="出力ディレクトリ")
    track.add_argument("--overlay", action="store_true", help="オーバーレイPNGを書き出す")
    track.add_argument("--local-only", action="store_true", help="大域候補を使わない")
    track.add_argument("--dump-candidates", action="store_true", help="候補プールをJSON Linesで書き出す")
    cue = track.add_mutually_exclusive_group()
    cue.add_argument(
        "--target-only", "--no-language", dest="target_only", action="store_true",
        help="アテンションをターゲットパッチだけから計算",
    )
    cue.add_argument("--language-only", action="store_true", help="アテンションを文だけから計算")

    evaluate = sub.add_parser("eval", parents=[common], help="追跡結果を評価")
    evaluate.add_argument("--tracks", type=str, required=True, help="追跡結果CSVのディレクトリ")
    evaluate.add_argument("--split", type=str, default=TEST_SPLIT, help="正解の分割")
    evaluate.add_argument("--label", type=str, default=None, help="レポートに使う実行名")
    evaluate.add_argument("--out", type=str, default=None, help="出力ディレクトリ（省略時: <tracks>/evaluation）")

    gradcheck = sub.add_parser("gradcheck", parents=[common], help="全ての勾配検査を実行")
    gradcheck.add_argument("--tolerance", type=float, default=1e-5, help="許容相対誤差（デフォルト: 1e-5）")

    ablate = sub.add_parser("ablate", parents=[common], help="アブレーションを実行")
    ablate.add_argument("--sweep", choices=SweepKind.to_list(), required=True, help="スイープの種類")
    ablate.add_argument("--seeds", type=str, default="0,1,2", help="カンマ区切りのシード（デフォルト: 0,1,2）")
    ablate.add_argument("--values", type=str, default=None, help="カンマ区切りのスイープ値（省略時は既定の値）")
    ablate.add_argument("--out", type=str, default=None, help="出力ディレクトリ")

    return parser.parse_args(argv)


def parse_overrides(items: list[str]) -> dict[str, Any]:
    """`KEY=VALUE` の列を設定ファイルと同じ規則で辞書にする."""
    for item in items:
        if "=" not in item:
            raise ConfigError("cli", "--set", f"expected KEY=VALUE, got {item!r}")
    return parse_run_config_text("\n".join(items))


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """設定ファイル → --set → 専用フラグの順に上書きして RunConfig を作る."""
    if args.command in SEEDED_COMMANDS and args.seed is None:
        raise ConfigError("cli", "--seed", f"--seed is required for {args.command}")
    path = args.config or (DEFAULT_CONFIG if Path(DEFAULT_CONFIG).exists() else None)
    overrides = parse_overrides(args.overrides)
    overrides["seed"] = args.seed
    if args.command == "track":
        overrides["salnet_checkpoint"] = args.salnet
        overrides["gpgnet_checkpoint"] = args.gpgnet
        if args.local_only:
            overrides["local_only"] = True
        if args.dump_candidates:
            overrides["dump_candidates"] = True
        if args.target_only:
            overrides["attention_cue"] = AttentionCue.TARGET_ONLY
        elif args.language_only:
            overrides["attention_cue"] = AttentionCue.LANGUAGE_ONLY
    return load_run_config(path, overrides)


def run_command(args: argparse.Namespace) -> int:
    """サブコマンドを実行し、終了コードを返す."""
    config = resolve_config(args)
    blob_manager = LocalBlobManager()
    logger.info(f"🔧 {args.command} (seed={config.seed})")

    if args.command == "synth":
        pipeline.synthesize_corpus(config, blob_manager)
        logger.success(f"✅ コーパスを書き出しました: {config.corpus_dir}")
    elif args.command == "train-salnet":
        run_dir = pipeline.train_salnet(config, blob_manager, pipeline.new_run_dir(config.output_dir, "salnet"))
        logger.success(f"✅ SALNet: {run_dir}")
    elif args.command == "train-gpgnet":
        run_dir = pipeline.train_gpgnet(config, blob_manager, pipeline.new_run_dir(config.output_dir, "gpgnet"))
        logger.success(f"✅ GPGNet: {run_dir}")
    elif args.command == "track":
        out_dir = args.out or pipeline.new_run_dir(config.output_dir, "tracks")
        run = pipeline.track_corpus(config, blob_manager, out_dir, args.split, args.sequence, args.overlay)
        logger.success(f"✅ {len(run.summaries)} シーケンスを追跡しました: {run.out_dir}")
    elif args.command == "eval":
        report = pipeline.evaluate_tracks(config, blob_manager, args.tracks, args.split, args.label, args.out)
        logger.success(
            f"✅ {report.label}: AUC={report.success_auc:.4f} "
            f"precision@{report.precision_threshold:.1f}px={report.precision:.4f}"
        )
    elif args.command == "gradcheck":
        results = run_gradient_suite(seed=config.seed, tolerance=args.tolerance)
        failed = [r.name for r in results if not r.passed]
        if failed:
            logger.error(f"❌ 勾配検査に失敗: {', '.join(failed)}")
            return 1
        logger.success(f"✅ {len(results)} 件の勾配検査に合格しました")
    elif args.command == "ablate":
        return run_ablation(args, config)
    return 0


def run_ablation(args: argparse.Namespace, config: RunConfig) -> int:
    """アブレーションのグラフを実行."""
    sweep = SweepKind.parse(args.sweep)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    values = [float(v) for v in args.values.split(",") if v.strip()] if args.values else None
    out_dir = args.out or str(Path(config.output_dir) / "ablation" / sweep.value)
    input_data = AblationAgentInputState(
        sweep=sweep,
        seeds=seeds,
        values=values,
        base_config=config.model_dump(mode="json", exclude={"seed"}),
        output_dir=out_dir,
    )
    n_settings = len(sweep_settings(sweep, seeds, values))
    agent = AblationAgent(
        LocalBlobManager(),
        checkpointer=InMemorySaver(),
        recursion_limit=required_recursion_limit(n_settings),
    )
    result = agent.invoke(input_data.model_dump(), thread_id=sweep.value)
    failed = [r for r in result["results"] if r.status == TaskStatus.FAILED]
    for item in failed:
        logger.warning(f"⚠️ {item.label} seed={item.seed}: {item.message}")
    logger.success(f"✅ レポート: {result['report_path']}")
    return 1 if failed and len(failed) == len(result["results"]) else 0


def main(argv: list[str] | None = None) -> int:
    args = parse_arguments(argv)
    set_logger("DEBUG" if args.verbose else None)
    try:
        return run_command(args)
    except BaseError as e:
        logger.error(f"❌ {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
