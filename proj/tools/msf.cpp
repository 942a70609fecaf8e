#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "msf/cli/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string seed;
  std::string split;
  std::string semantic_mode;
  std::string gate_threshold;
  std::string mode = "gzsl";
  std::string checkpoint;
  std::string out;
};

std::string absolute(const std::string& p) { return std::filesystem::absolute(p).lexically_normal().string(); }

// Flags become config overrides applied after the file, so they win.
std::vector<std::pair<std::string, std::string>> overrides(const Flags& f, const char* out_key) {
  std::vector<std::pair<std::string, std::string>> o;
  if (!f.seed.empty()) o.emplace_back("seed", f.seed);
  if (!f.split.empty()) o.emplace_back("split_manifest", absolute(f.split));
  if (!f.semantic_mode.empty()) o.emplace_back("semantic_mode", f.semantic_mode);
  if (!f.gate_threshold.empty()) o.emplace_back("gate_threshold", f.gate_threshold);
  if (!f.checkpoint.empty()) o.emplace_back("checkpoint", absolute(f.checkpoint));
  if (!f.out.empty()) o.emplace_back(out_key, absolute(f.out));
  return o;
}

msf::RunConfig load(const Flags& f, const char* out_key) {
  if (f.config.empty()) return msf::parse_run_config("", std::filesystem::current_path(), overrides(f, out_key));
  return msf::load_run_config(f.config, overrides(f, out_key));
}

void add_common(CLI::App* cmd, Flags& f, const std::string& out_help) {
  cmd->add_option("--config", f.config, "run configuration file (key = value lines)");
  cmd->add_option("--seed", f.seed, "experiment seed");
  cmd->add_option("--split", f.split, "split manifest path");
  cmd->add_option("--semantic-mode", f.semantic_mode, "LB, AD, MD, AD+MD or LB+AD+MD")
      ->check(CLI::IsMember({"LB", "AD", "MD", "AD+MD", "LB+AD+MD"}));
  cmd->add_option("--gate-threshold", f.gate_threshold, "unseen-routing probability threshold");
  cmd->add_option("--checkpoint", f.checkpoint, "model checkpoint path");
  cmd->add_option("--out", f.out, out_help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-semantic fusion toolkit for generalized zero-shot classification"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "generate the synthetic cross-modal benchmark");
  add_common(synth, f, "output data directory");
  auto* train = app.add_subcommand("train", "train the full pipeline and write a checkpoint");
  add_common(train, f, "output directory for the loss trace (and default checkpoint)");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the held-out rows");
  add_common(eval, f, "output directory for metrics, summary and predictions");
  eval->add_option("--mode", f.mode, "gzsl (gated) or zsl (unseen classes only)")->check(CLI::IsMember({"zsl", "gzsl"}));
  auto* selfcheck = app.add_subcommand("selfcheck", "gradient, KL and table self-checks");
  std::string tables_out;
  auto* tables = app.add_subcommand("recompute-tables", "recompute H for the published result tables");
  tables->add_option("--out", tables_out, "optional CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      msf::cmd_synth(load(f, "data_dir"), std::cout);
    } else if (train->parsed()) {
      msf::cmd_train(load(f, "out_dir"), std::cout);
    } else if (eval->parsed()) {
      msf::cmd_eval(load(f, "out_dir"), msf::parse_eval_mode(f.mode), std::cout);
    } else if (selfcheck->parsed()) {
      return msf::cmd_selfcheck(std::cout) ? 0 : 1;
    } else if (tables->parsed()) {
      return msf::cmd_recompute_tables(std::cout, tables_out) ? 0 : 1;
    }
  } catch (const msf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
