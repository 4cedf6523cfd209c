// slangdef: prepare data, train, evaluate and explain from one config file.
//
// Exit status: 0 success, 1 usage, 2 data error, 3 numeric abort.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

#include "commands.hpp"
#include "slangdef/errors.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

int fail(int code, const std::string& message) {
  std::cerr << "slangdef: " << message << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace slangdef;
  using namespace slangdef::cli;

  spdlog::set_default_logger(spdlog::stderr_color_st("slangdef"));
  spdlog::set_pattern("[%H:%M:%S] %v");

  CLI::App app{"Generate explanations for non-standard expressions"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  Overrides overrides;
  bool quiet = false;
  app.add_option("--config", config_path, "INI run configuration")->required();
  app.add_option("--seed", overrides.seed, "override [run] seed");
  app.add_option("--variant", overrides.variant, "override [model] variant")
      ->check(CLI::IsMember({"single", "dual", "char"}));
  app.add_option("--hidden", overrides.hidden, "override [model] hidden")->check(CLI::PositiveNumber);
  app.add_option("--beam", overrides.beam, "decode with beam search of this width")->check(CLI::PositiveNumber);
  app.add_option("--max-len", overrides.max_len, "override [decode] max_len")->check(CLI::PositiveNumber);
  app.add_flag("--strict", overrides.strict, "keep only examples that contain their target");
  app.add_flag("-q,--quiet", quiet, "only log warnings");

  auto* prepare = app.add_subcommand("prepare", "split the corpus and build vocabularies");
  auto* train = app.add_subcommand("train", "train a model on the prepared manifests");
  bool resume = false;
  train->add_flag("--resume", resume, "continue from checkpoints/last.ckpt");
  auto* evaluate = app.add_subcommand("evaluate", "decode a split and score it");
  std::optional<std::string> checkpoint;
  std::string split = "test";
  evaluate->add_option("--checkpoint", checkpoint, "defaults to checkpoints/best.ckpt");
  evaluate->add_option("--split", split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
  auto* explain = app.add_subcommand("explain", "explain one expression in one sentence");
  std::string sentence, target;
  explain->add_option("--checkpoint", checkpoint, "defaults to checkpoints/best.ckpt");
  explain->add_option("--sentence", sentence, "usage sentence")->required();
  explain->add_option("--target", target, "expression to explain")->required();
  auto* report = app.add_subcommand("report", "print the training log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    RunConfig cfg = load_run_config(config_path);
    apply(cfg, overrides);
    std::optional<std::filesystem::path> ckpt;
    if (checkpoint) ckpt = std::filesystem::path(*checkpoint);
    if (prepare->parsed()) cmd_prepare(cfg, std::cout);
    if (train->parsed()) cmd_train(cfg, resume, std::cout);
    if (evaluate->parsed()) cmd_evaluate(cfg, ckpt, split, std::cout);
    if (explain->parsed()) std::cout << cmd_explain(cfg, ckpt, sentence, target) << "\n";
    if (report->parsed()) cmd_report(cfg, std::cout);
  } catch (const UsageError& e) {
    return fail(kUsage, e.what());
  } catch (const NumericError& e) {
    return fail(kNumeric, e.what());
  } catch (const DataError& e) {
    return fail(kData, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(kData, e.what());
  } catch (const std::exception& e) {
    return fail(kData, e.what());
  }
  return kOk;
}
