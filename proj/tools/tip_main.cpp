// tip — translational impact prediction pipeline CLI.
//
// Subcommands run individual stages against a run directory; `run` executes
// the whole pipeline. Exit codes: 0 success, 2 config error, 3 data error,
// 4 service error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tip/tip.hpp"

namespace {

struct CommonArgs {
  std::string profile_path;
  std::string out_dir = "runs/default";
  std::optional<std::uint64_t> seed;
  std::string tier = "all";
  std::string label;
  std::string embed_mode;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--profile", args.profile_path, "experiment profile (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "run directory");
  cmd->add_option("--seed", args.seed, "override the profile seed");
  cmd->add_option("--tier", args.tier, "m1|m2|m3|all")
      ->check(CLI::IsMember({"m1", "m2", "m3", "all"}));
  cmd->add_option("--label", args.label, "patents|trials")
      ->check(CLI::IsMember({"patents", "trials"}));
  cmd->add_option("--embed-mode", args.embed_mode, "local|remote")
      ->check(CLI::IsMember({"local", "remote"}));
  cmd->add_flag("--strict", args.strict, "fail on the first malformed corpus line");
}

tip::RunContext make_context(const CommonArgs& args) {
  tip::ExperimentProfile profile = tip::load_profile(args.profile_path);
  if (args.seed) profile.seed = *args.seed;
  if (!args.label.empty()) profile.label = tip::label_kind_from_string(args.label);
  if (args.tier != "all") profile.tiers = {tip::tier_from_string(args.tier)};
  if (!args.embed_mode.empty())
    profile.embedder.mode =
        args.embed_mode == "local" ? tip::EmbedMode::Local : tip::EmbedMode::Remote;
  if (args.strict) profile.strict_ingest = true;
  return tip::init_run(profile, args.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"translational impact prediction pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  auto* ingest = app.add_subcommand("ingest", "load, filter, label, rebalance and split");
  auto* featurize = app.add_subcommand("featurize", "fit vocab/TSVD and emit feature matrices");
  auto* train = app.add_subcommand("train", "train boosted models per tier");
  auto* eval = app.add_subcommand("eval", "evaluate models on the test partition");
  auto* temporal = app.add_subcommand("temporal", "delta-label audit across years");
  auto* report = app.add_subcommand("report", "render curve overlays and metric tables");
  auto* run = app.add_subcommand("run", "execute the full pipeline");
  for (auto* cmd : {synth, ingest, featurize, train, eval, temporal, report, run})
    add_common(cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    tip::RunContext ctx = make_context(args);
    if (synth->parsed()) {
      tip::stage_synth(ctx);
      std::cout << "corpus: " << ctx.corpus_path().string() << "\n";
    } else if (ingest->parsed()) {
      tip::stage_ingest(ctx);
    } else if (featurize->parsed()) {
      tip::stage_featurize(ctx);
    } else if (train->parsed()) {
      tip::stage_train(ctx);
    } else if (eval->parsed()) {
      tip::stage_eval(ctx);
    } else if (temporal->parsed()) {
      tip::stage_temporal(ctx);
    } else if (report->parsed()) {
      tip::stage_report(ctx, std::cout);
    } else if (run->parsed()) {
      tip::run_pipeline(ctx, std::cout);
    }
    return 0;
  } catch (const tip::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tip::ServiceError& e) {
    std::cerr << "service error: " << e.what() << "\n";
    return 4;
  } catch (const tip::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
